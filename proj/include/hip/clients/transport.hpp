#pragma once

#include <chrono>
#include <cstdlib>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hip/clients/types.hpp"
#include "hip/error.hpp"

namespace hip {

struct HttpRequest {
    std::string base_url;
    std::string path;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

// status 0 means the request never produced an HTTP response.
struct HttpResponse {
    int status = 0;
    std::string body;
    std::string error;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

// In-process transport backed by a handler function. Records every request
// with its arrival time so tests can audit call counts, payloads and rates.
class MockTransport : public Transport {
public:
    using Handler = std::function<HttpResponse(const HttpRequest&)>;
    using Clock = std::chrono::steady_clock;

    struct Entry {
        Clock::time_point at;
        HttpRequest request;
    };

    explicit MockTransport(Handler handler) : handler_(std::move(handler)) {}

    HttpResponse post(const HttpRequest& request) override {
        {
            std::lock_guard lock(mu_);
            log_.push_back({Clock::now(), request});
        }
        return handler_(request);
    }

    [[nodiscard]] std::size_t call_count() const {
        std::lock_guard lock(mu_);
        return log_.size();
    }

    [[nodiscard]] std::vector<Entry> log() const {
        std::lock_guard lock(mu_);
        return log_;
    }

private:
    Handler handler_;
    mutable std::mutex mu_;
    std::vector<Entry> log_;
};

// Sliding-window limiter: at most `capacity` acquisitions in any window of
// capacity/rate seconds. For integer rates >= 1 that is exactly "no more than
// `rate` requests in any one-second window".
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;

    explicit RateLimiter(double requests_per_second) {
        if (!(requests_per_second > 0.0)) throw Error("config_error", "rate limit must be > 0");
        capacity_ = std::max<std::size_t>(1, static_cast<std::size_t>(requests_per_second));
        window_ = std::chrono::duration_cast<Clock::duration>(
            std::chrono::duration<double>(static_cast<double>(capacity_) / requests_per_second));
    }

    void acquire() {
        std::unique_lock lock(mu_);
        for (;;) {
            const auto now = Clock::now();
            while (!stamps_.empty() && now - stamps_.front() >= window_ + kMargin) stamps_.pop_front();
            if (stamps_.size() < capacity_) {
                stamps_.push_back(now);
                return;
            }
            const auto wake = stamps_.front() + window_ + kMargin;
            lock.unlock();
            std::this_thread::sleep_until(wake);
            lock.lock();
        }
    }

private:
    // Slack for the gap between acquisition and the request leaving.
    static constexpr auto kMargin = std::chrono::milliseconds(2);

    std::mutex mu_;
    std::size_t capacity_ = 1;
    Clock::duration window_{};
    std::deque<Clock::time_point> stamps_;
};

inline bool is_transient(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

// One configured service: rate limiting, retries and credentials around a
// transport. Shareable across worker threads.
class Endpoint {
public:
    Endpoint(EndpointConfig cfg, std::shared_ptr<Transport> transport)
        : cfg_(std::move(cfg)), transport_(std::move(transport)), limiter_(cfg_.rate_limit) {
        cfg_.validate();
        if (!cfg_.auth_env_var.empty()) {
            const char* v = std::getenv(cfg_.auth_env_var.c_str());
            if (v == nullptr || *v == '\0')
                throw Error("missing_credential", "environment variable " + cfg_.auth_env_var + " is not set (endpoint " +
                                                      cfg_.id + ")");
            credential_ = v;
        }
    }

    [[nodiscard]] const EndpointConfig& config() const { return cfg_; }

    // Posts JSON, retrying transient failures per the policy. Throws
    // Error(unavailable_code) when the retries run out or the service answers
    // with a permanent error.
    std::string post_json(const std::string& path, const nlohmann::json& body, const std::string& unavailable_code) {
        HttpRequest req{cfg_.base_url, path, body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), {}};
        req.headers.emplace_back("Content-Type", "application/json");
        if (!credential_.empty()) {
            const std::string header = cfg_.options.value("auth_header", std::string("Authorization"));
            const std::string scheme = cfg_.options.value("auth_scheme", std::string(header == "Authorization" ? "Bearer " : ""));
            req.headers.emplace_back(header, scheme + credential_);
        }

        std::string last;
        for (int attempt = 0; attempt < cfg_.retry.max_attempts; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(cfg_.retry.delay(static_cast<std::size_t>(attempt - 1)));
            limiter_.acquire();
            HttpResponse resp = transport_->post(req);
            if (resp.status >= 200 && resp.status < 300) return std::move(resp.body);
            last = resp.status == 0 ? resp.error : "HTTP " + std::to_string(resp.status);
            if (!is_transient(resp.status)) break;
        }
        throw Error(unavailable_code, cfg_.id + ": " + last);
    }

private:
    EndpointConfig cfg_;
    std::shared_ptr<Transport> transport_;
    RateLimiter limiter_;
    std::string credential_;
};

}  // namespace hip
