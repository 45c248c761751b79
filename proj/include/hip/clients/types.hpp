#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hip/error.hpp"

namespace hip {

struct ChatMessage {
    std::string role;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

inline void to_json(nlohmann::json& j, const ChatMessage& m) {
    j = nlohmann::json{{"role", m.role}, {"content", m.content}};
}
inline void from_json(const nlohmann::json& j, ChatMessage& m) {
    m.role = j.at("role").get<std::string>();
    m.content = j.at("content").get<std::string>();
}

// A raw completion prompt or a chat transcript.
using Prompt = std::variant<std::string, std::vector<ChatMessage>>;

struct GenerationParams {
    double temperature = 1.0;
    double top_p = 0.95;
    int max_tokens = 1024;
    std::vector<std::string> stop_sequences{"</target_text>"};
    std::optional<std::uint64_t> seed;

    void validate() const {
        if (!(temperature >= 0.0)) throw Error("config_error", "temperature must be >= 0");
        if (!(top_p > 0.0 && top_p <= 1.0)) throw Error("config_error", "top_p must be in (0,1]");
        if (max_tokens < 1) throw Error("config_error", "max_tokens must be >= 1");
    }

    bool operator==(const GenerationParams&) const = default;
};

inline void to_json(nlohmann::json& j, const GenerationParams& p) {
    j = nlohmann::json{{"temperature", p.temperature},
                       {"top_p", p.top_p},
                       {"max_tokens", p.max_tokens},
                       {"stop", p.stop_sequences}};
    j["seed"] = p.seed ? nlohmann::json(*p.seed) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, GenerationParams& p) {
    p.temperature = j.value("temperature", p.temperature);
    p.top_p = j.value("top_p", p.top_p);
    p.max_tokens = j.value("max_tokens", p.max_tokens);
    if (j.contains("stop")) p.stop_sequences = j["stop"].get<std::vector<std::string>>();
    if (j.contains("seed") && !j["seed"].is_null()) p.seed = j["seed"].get<std::uint64_t>();
}

struct RetryPolicy {
    int max_attempts = 3;
    std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(500), std::chrono::milliseconds(2000),
                                                   std::chrono::milliseconds(8000)};

    /// Delay before retry number `retry` (0-based); the last entry repeats.
    [[nodiscard]] std::chrono::milliseconds delay(std::size_t retry) const {
        if (backoff.empty()) return std::chrono::milliseconds(0);
        return backoff[std::min(retry, backoff.size() - 1)];
    }
};

// Connection settings for one external service. The credential itself is
// never stored here, only the name of the environment variable holding it.
struct EndpointConfig {
    std::string id;
    std::string adapter;  // openai-completions | openai-chat | gptzero | pangram | generic | mock
    std::string base_url;
    std::string model_id;
    std::string auth_env_var;
    double rate_limit = 5.0;  // requests per second
    RetryPolicy retry;
    nlohmann::json options = nlohmann::json::object();

    void validate() const {
        if (id.empty()) throw Error("config_error", "endpoint id is empty");
        if (!(rate_limit > 0.0)) throw Error("config_error", "endpoint " + id + ": rate_limit must be > 0");
        if (retry.max_attempts < 1) throw Error("config_error", "endpoint " + id + ": retry.max_attempts must be >= 1");
        if (adapter != "mock" && base_url.empty()) throw Error("config_error", "endpoint " + id + ": base_url is empty");
    }
};

inline void to_json(nlohmann::json& j, const EndpointConfig& e) {
    std::vector<long long> backoff;
    for (auto d : e.retry.backoff) backoff.push_back(d.count());
    j = nlohmann::json{{"id", e.id},
                       {"adapter", e.adapter},
                       {"base_url", e.base_url},
                       {"model_id", e.model_id},
                       {"auth_env_var", e.auth_env_var},
                       {"rate_limit", e.rate_limit},
                       {"retry", {{"max_attempts", e.retry.max_attempts}, {"backoff_ms", backoff}}},
                       {"options", e.options}};
}

inline void from_json(const nlohmann::json& j, EndpointConfig& e) {
    e.id = j.value("id", e.id);
    e.adapter = j.value("adapter", e.adapter);
    e.base_url = j.value("base_url", e.base_url);
    e.model_id = j.value("model_id", e.model_id);
    e.auth_env_var = j.value("auth_env_var", e.auth_env_var);
    e.rate_limit = j.value("rate_limit", e.rate_limit);
    if (j.contains("retry")) {
        const auto& r = j["retry"];
        e.retry.max_attempts = r.value("max_attempts", e.retry.max_attempts);
        if (r.contains("backoff_ms")) {
            e.retry.backoff.clear();
            for (const auto& v : r["backoff_ms"]) e.retry.backoff.emplace_back(v.get<long long>());
        }
    }
    if (j.contains("options")) e.options = j["options"];
}

struct DetectorVerdict {
    std::string detector_id;
    double human_prob = 0.0;
    std::string raw;
    bool cached = false;
};

}  // namespace hip
