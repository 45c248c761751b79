#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hip {

// Every failure raised by the library carries a stable, machine-readable
// code (e.g. "tag_collision", "endpoint_unavailable") plus free-form detail.
class Error : public std::runtime_error {
public:
    explicit Error(std::string code, const std::string& detail = {})
        : std::runtime_error(detail.empty() ? code : code + ": " + detail),
          code_(std::move(code)) {}

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Outcome of a predicate that explains itself when it fails.
struct Check {
    bool ok = true;
    std::string reason;

    static Check pass() { return {}; }
    static Check fail(std::string why) { return {false, std::move(why)}; }

    explicit operator bool() const noexcept { return ok; }
};

}  // namespace hip
