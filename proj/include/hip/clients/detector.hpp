#pragma once

#include <cmath>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "hip/clients/transport.hpp"
#include "hip/clients/types.hpp"
#include "hip/hash.hpp"
#include "hip/jsonl.hpp"

namespace hip {

class DetectorClient {
public:
    virtual ~DetectorClient() = default;

    [[nodiscard]] virtual const std::string& id() const = 0;

    /// One backend call. Throws Error("detector_unavailable") or
    /// Error("protocol_error").
    virtual DetectorVerdict query(const std::string& text) = 0;
};

// Maps a vendor payload onto the probability of the human label.
struct PayloadNormalizer {
    std::string pointer;  // JSON pointer to a number
    bool invert = false;  // value is an AI probability

    double operator()(const nlohmann::json& payload, const std::string& detector_id) const {
        const nlohmann::json::json_pointer ptr(pointer);
        if (!payload.contains(ptr) || !payload[ptr].is_number())
            throw Error("protocol_error", detector_id + ": no number at " + pointer);
        double v = payload[ptr].get<double>();
        if (invert) v = 1.0 - v;
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw Error("protocol_error", detector_id + ": human probability out of [0,1]");
        return v;
    }
};

// Detector adapters. "gptzero" and "pangram" carry the documented request and
// response shapes of those services; "generic" takes everything from options.
// Any of these can be overridden per endpoint:
//   path, text_field, human_prob_pointer, invert, auth_header
class HttpDetectorClient : public DetectorClient {
public:
    HttpDetectorClient(EndpointConfig cfg, std::shared_ptr<Transport> transport)
        : endpoint_(with_defaults(std::move(cfg)), std::move(transport)) {
        const auto& o = endpoint_.config().options;
        path_ = o.value("path", std::string("/"));
        text_field_ = o.value("text_field", std::string("text"));
        normalizer_.pointer = o.value("human_prob_pointer", std::string());
        normalizer_.invert = o.value("invert", false);
        if (normalizer_.pointer.empty())
            throw Error("config_error", "detector " + endpoint_.config().id + ": human_prob_pointer is required");
        try {
            (void)nlohmann::json::json_pointer(normalizer_.pointer);
        } catch (const nlohmann::json::exception& e) {
            throw Error("config_error", "detector " + endpoint_.config().id + ": " + e.what());
        }
    }

    [[nodiscard]] const std::string& id() const override { return endpoint_.config().id; }

    DetectorVerdict query(const std::string& text) override {
        nlohmann::json body{{text_field_, text}};
        const auto& model = endpoint_.config().model_id;
        if (!model.empty()) body["model"] = model;
        std::string raw = endpoint_.post_json(path_, body, "detector_unavailable");
        const auto payload = nlohmann::json::parse(raw, nullptr, false);
        if (payload.is_discarded()) throw Error("protocol_error", id() + ": response is not JSON");
        return {id(), normalizer_(payload, id()), std::move(raw), false};
    }

    static EndpointConfig with_defaults(EndpointConfig cfg) {
        auto set_default = [&](const char* key, nlohmann::json v) {
            if (!cfg.options.contains(key)) cfg.options[key] = std::move(v);
        };
        if (!cfg.options.is_object()) cfg.options = nlohmann::json::object();
        if (cfg.adapter == "gptzero") {
            set_default("path", "/v2/predict/text");
            set_default("text_field", "document");
            set_default("human_prob_pointer", "/documents/0/class_probabilities/human");
            set_default("invert", false);
            set_default("auth_header", "x-api-key");
        } else if (cfg.adapter == "pangram") {
            set_default("path", "/");
            set_default("text_field", "text");
            set_default("human_prob_pointer", "/ai_likelihood");
            set_default("invert", true);
            set_default("auth_header", "x-api-key");
        } else if (cfg.adapter != "generic") {
            throw Error("config_error", "detector " + cfg.id + ": unknown adapter \"" + cfg.adapter + "\"");
        }
        return cfg;
    }

private:
    Endpoint endpoint_;
    std::string path_;
    std::string text_field_;
    PayloadNormalizer normalizer_;
};

// Persistent verdict cache keyed by (detector id, SHA-256 of the exact text
// bytes). Backed by an append-only JSONL file that is loaded at construction.
// Concurrent lookups of the same missing key share one backend call.
class DetectorCache {
public:
    DetectorCache() = default;

    explicit DetectorCache(std::string path) : path_(std::move(path)) {
        if (path_.empty()) return;
        if (std::filesystem::exists(path_)) {
            jsonl::repair_tail(path_);
            jsonl::for_each_record(path_, [&](std::size_t, const nlohmann::json& j) {
                if (!j.is_object()) return;
                DetectorVerdict v{j.value("detector_id", std::string()), j.value("human_prob", 0.0),
                                  j.value("raw", std::string()), true};
                entries_[{v.detector_id, j.value("text_sha256", std::string())}] = std::move(v);
            });
        }
        writer_.emplace(path_, jsonl::Writer::Mode::append);
    }

    using Key = std::pair<std::string, std::string>;

    static Key key_for(const std::string& detector_id, const std::string& text) {
        return {detector_id, sha256_hex(text)};
    }

    [[nodiscard]] std::optional<DetectorVerdict> lookup(const Key& key) const {
        std::lock_guard lock(mu_);
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
        return std::nullopt;
    }

    template <class Fn>
    DetectorVerdict get_or_compute(const Key& key, Fn&& compute) {
        std::shared_future<DetectorVerdict> pending;
        std::promise<DetectorVerdict> mine;
        {
            std::lock_guard lock(mu_);
            if (auto it = entries_.find(key); it != entries_.end()) return it->second;
            if (auto it = inflight_.find(key); it != inflight_.end()) {
                pending = it->second;
            } else {
                inflight_[key] = mine.get_future().share();
            }
        }
        if (pending.valid()) {
            DetectorVerdict v = pending.get();
            v.cached = true;
            return v;
        }

        try {
            DetectorVerdict v = compute();
            v.cached = false;
            {
                std::lock_guard lock(mu_);
                DetectorVerdict stored = v;
                stored.cached = true;
                entries_[key] = stored;
                inflight_.erase(key);
                if (writer_) {
                    writer_->write({{"detector_id", key.first},
                                    {"text_sha256", key.second},
                                    {"human_prob", v.human_prob},
                                    {"raw", v.raw}});
                }
            }
            mine.set_value(v);
            return v;
        } catch (...) {
            {
                std::lock_guard lock(mu_);
                inflight_.erase(key);
            }
            mine.set_exception(std::current_exception());
            throw;
        }
    }

    [[nodiscard]] std::size_t size() const {
        std::lock_guard lock(mu_);
        return entries_.size();
    }

private:
    std::string path_;
    mutable std::mutex mu_;
    std::map<Key, DetectorVerdict> entries_;
    std::map<Key, std::shared_future<DetectorVerdict>> inflight_;
    std::optional<jsonl::Writer> writer_;
};

/// Cached detection. Failures propagate and are never cached.
inline DetectorVerdict detect(const std::string& text, DetectorClient& detector, DetectorCache& cache) {
    if (text.empty()) throw Error("empty_text", "detector input is empty");
    return cache.get_or_compute(DetectorCache::key_for(detector.id(), text), [&] { return detector.query(text); });
}

}  // namespace hip
