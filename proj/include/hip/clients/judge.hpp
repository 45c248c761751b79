#pragma once

#include <cctype>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hip/clients/transport.hpp"
#include "hip/clients/types.hpp"
#include "hip/hash.hpp"

namespace hip {

inline constexpr std::string_view kDefaultJudgeTemplate =
    "You compare an original passage with a rewritten version of it and rate how much of the original "
    "meaning the rewrite keeps.\n"
    "Use a whole number from 0 to 10: 10 means every fact and claim is kept, 0 means the meaning is "
    "lost entirely.\n"
    "Answer with the number only.\n"
    "\n"
    "<original>\n{original}\n</original>\n"
    "\n"
    "<rewrite>\n{rewrite}\n</rewrite>";

inline std::string fill_judge_template(std::string_view tmpl, std::string_view original, std::string_view rewrite) {
    std::string out(tmpl);
    auto replace_once = [&](std::string_view key, std::string_view value) {
        if (auto pos = out.find(key); pos != std::string::npos) out.replace(pos, key.size(), value);
    };
    // Rewrite first so an original containing "{rewrite}" is left alone.
    replace_once("{rewrite}", rewrite);
    replace_once("{original}", original);
    return out;
}

// First maximal digit run whose value lies in [0, 10].
inline std::optional<int> parse_judge_score(std::string_view reply) {
    std::size_t i = 0;
    while (i < reply.size()) {
        if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
        const auto run = reply.substr(i, j - i);
        if (run.size() <= 2) {
            const int v = std::stoi(std::string(run));
            if (v <= 10) return v;
        }
        i = j;
    }
    return std::nullopt;
}

class JudgeClient {
public:
    virtual ~JudgeClient() = default;

    /// 0-10 meaning-preservation score of `rewrite` against `original`.
    /// Throws Error("judge_parse_failure") or Error("judge_unavailable").
    virtual int judge_semantic(const std::string& original, const std::string& rewrite) = 0;

    [[nodiscard]] virtual std::string template_hash() const = 0;
};

// Chat-completions judge. The prompt template is configurable through
// options.template and is identified in outputs by its SHA-256.
class OpenAIJudgeClient : public JudgeClient {
public:
    OpenAIJudgeClient(EndpointConfig cfg, std::shared_ptr<Transport> transport)
        : endpoint_(std::move(cfg), std::move(transport)) {
        const auto& o = endpoint_.config().options;
        template_ = o.value("template", std::string(kDefaultJudgeTemplate));
        path_ = o.value("chat_path", std::string("/v1/chat/completions"));
        max_tokens_ = o.value("max_tokens", 16);
    }

    int judge_semantic(const std::string& original, const std::string& rewrite) override {
        if (original.empty() || rewrite.empty()) throw Error("empty_text", "judge inputs must be non-empty");
        const auto& cfg = endpoint_.config();
        nlohmann::json body{
            {"model", cfg.model_id},
            {"messages", {{{"role", "user"}, {"content", fill_judge_template(template_, original, rewrite)}}}},
            {"max_tokens", max_tokens_}};
        if (cfg.options.contains("temperature")) body["temperature"] = cfg.options["temperature"];

        std::string last_reply;
        for (int attempt = 0; attempt < cfg.retry.max_attempts; ++attempt) {
            const std::string raw = endpoint_.post_json(path_, body, "judge_unavailable");
            const auto j = nlohmann::json::parse(raw, nullptr, false);
            const nlohmann::json::json_pointer content("/choices/0/message/content");
            if (j.is_discarded() || !j.contains(content) || !j[content].is_string()) continue;
            last_reply = j[content].get<std::string>();
            if (auto score = parse_judge_score(last_reply)) return *score;
        }
        throw Error("judge_parse_failure", cfg.id + ": no score in reply \"" + last_reply + "\"");
    }

    [[nodiscard]] std::string template_hash() const override { return sha256_hex(template_); }

private:
    Endpoint endpoint_;
    std::string template_;
    std::string path_;
    int max_tokens_ = 16;
};

}  // namespace hip
