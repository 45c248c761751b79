#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hip/clients/types.hpp"
#include "hip/error.hpp"
#include "hip/hash.hpp"
#include "hip/jsonl.hpp"
#include "hip/pairing_types.hpp"
#include "hip/text.hpp"

namespace hip {

enum class FormatMode { tagged, chat_template };

inline std::string_view to_string(FormatMode m) { return m == FormatMode::tagged ? "tagged" : "chat_template"; }

inline FormatMode parse_format_mode(std::string_view s) {
    if (s == "tagged") return FormatMode::tagged;
    if (s == "chat_template" || s == "chat") return FormatMode::chat_template;
    throw Error("config_error", "format mode must be \"tagged\" or \"chat_template\", got \"" + std::string(s) + "\"");
}

inline constexpr std::string_view kSourceOpen = "<source_text>";
inline constexpr std::string_view kSourceClose = "</source_text>";
inline constexpr std::string_view kTargetOpen = "<target_text>";
inline constexpr std::string_view kTargetClose = "</target_text>";

inline constexpr std::array<std::string_view, 4> kTags{kSourceOpen, kSourceClose, kTargetOpen, kTargetClose};

inline constexpr std::string_view kChatSystemPrompt =
    "Rewrite the passage the user sends so that it reads naturally, keeping its meaning intact. "
    "Reply with the rewritten passage only.";

// Canonical layout, byte-exact:
//   prompt prefix = "<source_text>\n{source}\n</source_text>\n\n<target_text>\n"
//   completion    = "{target}\n</target_text>"
inline std::string tagged_prefix(std::string_view source) {
    std::string out;
    out.reserve(source.size() + 64);
    out.append(kSourceOpen).append("\n").append(source).append("\n").append(kSourceClose);
    out.append("\n\n").append(kTargetOpen).append("\n");
    return out;
}

inline std::string tagged_completion(std::string_view target) {
    std::string out(target);
    out.append("\n").append(kTargetClose);
    return out;
}

/// Identifies the exact template in export manifests.
inline std::string template_hash(FormatMode mode) {
    if (mode == FormatMode::tagged) return sha256_hex(tagged_prefix("{source}") + "|" + tagged_completion("{target}"));
    return sha256_hex(std::string("chat_template|") + std::string(kChatSystemPrompt));
}

struct PromptRendering {
    std::string prompt_prefix;
    std::string completion;
    FormatMode format_mode = FormatMode::tagged;
    // Offsets into prompt_prefix + completion covering exactly the completion.
    std::pair<std::size_t, std::size_t> char_span_of_loss{0, 0};
    // chat_template mode only: system, user, assistant.
    std::vector<ChatMessage> messages;

    [[nodiscard]] std::string full_text() const { return prompt_prefix + completion; }
};

inline bool contains_tag(std::string_view s) {
    for (auto tag : kTags)
        if (s.find(tag) != std::string_view::npos) return true;
    return false;
}

inline PromptRendering render_training_example(const PairedExample& pair, FormatMode mode) {
    if (pair.ai_source.empty() || pair.human_target.empty())
        throw Error("empty_text", "pair " + pair.pair_id + " has an empty side");
    if (contains_tag(pair.ai_source) || contains_tag(pair.human_target))
        throw Error("tag_collision", "pair " + pair.pair_id + " contains a structural tag");

    PromptRendering r;
    r.format_mode = mode;
    if (mode == FormatMode::tagged) {
        r.prompt_prefix = tagged_prefix(pair.ai_source);
        r.completion = tagged_completion(pair.human_target);
    } else {
        r.completion = pair.human_target;
        r.messages = {{"system", std::string(kChatSystemPrompt)},
                      {"user", pair.ai_source},
                      {"assistant", pair.human_target}};
    }
    r.char_span_of_loss = {r.prompt_prefix.size(), r.prompt_prefix.size() + r.completion.size()};
    return r;
}

inline Prompt render_inference_prompt(const std::string& text, FormatMode mode) {
    if (text.empty()) throw Error("empty_text", "inference input is empty");
    if (mode == FormatMode::tagged) return tagged_prefix(text);
    return std::vector<ChatMessage>{{"system", std::string(kChatSystemPrompt)}, {"user", text}};
}

struct Extraction {
    std::string text;
    bool clean = true;
};

// Tagged: everything before the first closing target tag, trimmed; without
// the tag the whole generation is kept and flagged unclean. Chat: verbatim.
inline Extraction extract_target(std::string_view generation, FormatMode mode) {
    Extraction out;
    if (mode == FormatMode::tagged) {
        const auto pos = generation.find(kTargetClose);
        out.clean = pos != std::string_view::npos;
        out.text = std::string(text::trim(out.clean ? generation.substr(0, pos) : generation));
    } else {
        out.text = std::string(generation);
    }
    if (text::trim(out.text).empty()) throw Error("empty_generation", "generation has no target text");
    return out;
}

struct ExportResult {
    std::size_t count = 0;
    std::string manifest_path;
};

// Training JSONL: {"prompt","completion"} per line in tagged mode,
// {"messages":[...]} in chat mode. A "<path>.manifest.json" sidecar records
// the schema, template hash, line count and file digest.
inline ExportResult export_training_jsonl(std::span<const PairedExample> pairs, FormatMode mode,
                                          const std::string& path) {
    std::size_t n = 0;
    {
        jsonl::Writer out(path, jsonl::Writer::Mode::truncate);
        for (const auto& p : pairs) {
            const auto r = render_training_example(p, mode);
            if (mode == FormatMode::tagged) {
                out.write({{"prompt", r.prompt_prefix}, {"completion", r.completion}});
            } else {
                out.write({{"messages", r.messages}});
            }
            ++n;
        }
    }
    ExportResult res{n, path + ".manifest.json"};
    const nlohmann::json manifest{{"schema", mode == FormatMode::tagged ? "prompt_completion" : "messages"},
                                  {"format_mode", to_string(mode)},
                                  {"template_hash", template_hash(mode)},
                                  {"count", n},
                                  {"sha256", file_sha256(path)}};
    std::ofstream m(res.manifest_path, std::ios::binary | std::ios::trunc);
    if (!m) throw Error("io_error", "cannot write " + res.manifest_path);
    m << manifest.dump(2) << '\n';
    return res;
}

}  // namespace hip
