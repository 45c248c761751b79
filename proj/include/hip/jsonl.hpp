#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hip/error.hpp"

namespace hip::jsonl {

using json = nlohmann::json;

/// Compact single-line dump; invalid UTF-8 is replaced rather than thrown on.
inline std::string dump_line(const json& j) {
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

// Calls fn(line_number, line) for every non-empty line. Line numbers are 1-based.
inline void for_each_line(const std::string& path,
                          const std::function<void(std::size_t, std::string_view)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot read " + path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fn(n, line);
    }
}

/// Parses every line as JSON; parse failures go to `on_error` and are skipped.
inline void for_each_record(const std::string& path,
                            const std::function<void(std::size_t, const json&)>& fn,
                            const std::function<void(std::size_t, const std::string&)>& on_error = {}) {
    for_each_line(path, [&](std::size_t n, std::string_view line) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            if (on_error) on_error(n, "invalid_json");
            return;
        }
        fn(n, j);
    });
}

// Drops a trailing partial line left behind by an interrupted writer, so
// appends resume on a record boundary. Returns true if the file changed.
inline bool repair_tail(const std::string& path) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) return false;
    std::string content;
    {
        std::ifstream in(path, std::ios::binary);
        content.assign(std::istreambuf_iterator<char>(in), {});
    }
    if (content.empty() || content.back() == '\n') return false;
    const auto cut = content.rfind('\n');
    content.resize(cut == std::string::npos ? 0 : cut + 1);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    return true;
}

/// Values of `key` for every parseable record; used for id-keyed resume.
inline std::set<std::string> read_keys(const std::string& path, const std::string& key) {
    std::set<std::string> keys;
    if (!std::filesystem::exists(path)) return keys;
    for_each_record(path, [&](std::size_t, const json& j) {
        if (j.is_object() && j.contains(key) && j[key].is_string()) keys.insert(j[key].get<std::string>());
    });
    return keys;
}

class Writer {
public:
    enum class Mode { truncate, append };

    Writer(std::string path, Mode mode) : path_(std::move(path)) {
        const auto parent = std::filesystem::path(path_).parent_path();
        std::error_code ec;
        if (!parent.empty()) std::filesystem::create_directories(parent, ec);
        out_.open(path_, std::ios::binary | (mode == Mode::append ? std::ios::app : std::ios::trunc));
        if (!out_) throw Error("io_error", "cannot open " + path_ + " for writing");
    }

    void write(const json& j) {
        std::lock_guard lock(mu_);
        out_ << dump_line(j) << '\n';
        out_.flush();
        if (!out_) throw Error("io_error", "write failed: " + path_);
    }

    [[nodiscard]] const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::mutex mu_;
};

}  // namespace hip::jsonl
