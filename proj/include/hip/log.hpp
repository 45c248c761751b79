#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

namespace hip::log {

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03lldZ", buf, static_cast<long long>(ms));
    return out;
}

inline std::mutex& sink_mutex() {
    static std::mutex mu;
    return mu;
}

inline bool& quiet() {
    static bool q = false;
    return q;
}

/// One JSON object per line on stderr: {"ts","level","event",...fields}.
inline void event(std::string_view level, std::string_view name, nlohmann::json fields = nlohmann::json::object()) {
    if (quiet() && level != "error") return;
    nlohmann::json line{{"ts", utc_timestamp()}, {"level", level}, {"event", name}};
    if (fields.is_object())
        for (auto& [k, v] : fields.items()) line[k] = v;
    const auto s = line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    std::lock_guard lock(sink_mutex());
    std::fprintf(stderr, "%s\n", s.c_str());
}

inline void info(std::string_view name, nlohmann::json fields = nlohmann::json::object()) {
    event("info", name, std::move(fields));
}
inline void warn(std::string_view name, nlohmann::json fields = nlohmann::json::object()) {
    event("warn", name, std::move(fields));
}
inline void error(std::string_view name, nlohmann::json fields = nlohmann::json::object()) {
    event("error", name, std::move(fields));
}

}  // namespace hip::log
