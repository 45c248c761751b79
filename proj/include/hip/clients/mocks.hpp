#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hip/clients/transport.hpp"
#include "hip/prompting.hpp"
#include "hip/text.hpp"

// Deterministic stand-ins for the three external services. Each mock is a
// MockTransport handler that speaks the real wire format, so the production
// clients (payload building, parsing, retries, caching) run unchanged.
// Every mock is a pure function of its request.
namespace hip::mock {

using json = nlohmann::json;

inline constexpr std::string_view kMarker = "\xC2\xB6";  // U+00B6

/// "¶" followed by one or more digits.
inline bool is_marker_token(std::string_view tok) {
    if (!tok.starts_with(kMarker) || tok.size() == kMarker.size()) return false;
    for (char c : tok.substr(kMarker.size()))
        if (c < '0' || c > '9') return false;
    return true;
}

inline std::size_t count_markers(std::string_view s) {
    std::size_t n = 0;
    for (auto w : text::split_words(s)) n += is_marker_token(w) ? 1 : 0;
    return n;
}

/// Appends " ¶k" where k is one more than the markers already present.
inline std::string append_marker(std::string_view s) {
    std::string out(s);
    out.append(" ").append(kMarker).append(std::to_string(count_markers(s) + 1));
    return out;
}

/// One "more" per word of the prompt, then a single marker.
inline std::string continue_text(std::string_view prompt) {
    std::string out;
    for (std::size_t i = 0, n = text::word_count(prompt); i < n; ++i) out.append("more ");
    out.append(kMarker).append("1");
    return out;
}

// Fraction of marker tokens among the last `window` tokens (all tokens when
// window is 0). Zero for text without tokens.
inline double marker_fraction(std::string_view s, std::size_t window) {
    const auto words = text::split_words(s);
    if (words.empty()) return 0.0;
    const std::size_t n = window == 0 ? words.size() : std::min(window, words.size());
    std::size_t hits = 0;
    for (std::size_t i = words.size() - n; i < words.size(); ++i) hits += is_marker_token(words[i]) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(n);
}

/// round(10 * Jaccard similarity of the two word sets); 10 on equal texts.
inline int jaccard_score(std::string_view a, std::string_view b) {
    if (a == b) return 10;
    std::set<std::string_view> sa, sb;
    for (auto w : text::split_words(a)) sa.insert(w);
    for (auto w : text::split_words(b)) sb.insert(w);
    std::size_t inter = 0;
    for (auto w : sa) inter += sb.contains(w) ? 1 : 0;
    const std::size_t uni = sa.size() + sb.size() - inter;
    if (uni == 0) return 10;
    return static_cast<int>(std::lround(10.0 * static_cast<double>(inter) / static_cast<double>(uni)));
}

enum class GeneratorKind { identity, append_marker, continuation };

inline GeneratorKind parse_generator_kind(std::string_view s) {
    if (s == "identity") return GeneratorKind::identity;
    if (s == "append-marker") return GeneratorKind::append_marker;
    if (s == "continue") return GeneratorKind::continuation;
    throw Error("config_error", "unknown mock generator behavior \"" + std::string(s) + "\"");
}

inline std::string transform(GeneratorKind kind, std::string_view passage) {
    switch (kind) {
        case GeneratorKind::identity: return std::string(passage);
        case GeneratorKind::append_marker: return append_marker(passage);
        case GeneratorKind::continuation: return continue_text(passage);
    }
    return std::string(passage);
}

inline HttpResponse ok_json(const json& j) { return {200, j.dump(), {}}; }
inline HttpResponse bad_request(std::string why) { return {400, json{{"error", why}}.dump(), {}}; }

inline json chat_reply(const std::string& content) {
    json message{{"role", "assistant"}, {"content", content}};
    json choice{{"index", 0}, {"message", message}, {"finish_reason", "stop"}};
    return json{{"choices", json::array({choice})}};
}

// OpenAI-compatible generation server. A tagged inference prompt is answered
// like a trained paraphraser would: transformed source slot plus the closing
// tag. Stop sequences are honoured (and stripped unless the request sets
// include_stop_str_in_output). Chat requests transform the last user message;
// other raw prompts are transformed as a whole.
inline MockTransport::Handler generator(GeneratorKind kind) {
    return [kind](const HttpRequest& req) -> HttpResponse {
        const auto body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) return bad_request("invalid json");
        if (body.contains("messages")) {
            std::string user;
            for (const auto& m : body["messages"])
                if (m.value("role", "") == "user") user = m.value("content", "");
            return ok_json(chat_reply(transform(kind, user)));
        }
        if (!body.contains("prompt") || !body["prompt"].is_string()) return bad_request("missing prompt");
        const std::string prompt = body["prompt"].get<std::string>();

        std::string out;
        const std::string head = std::string(kSourceOpen) + "\n";
        const std::string tail = "\n" + std::string(kSourceClose) + "\n\n" + std::string(kTargetOpen) + "\n";
        if (prompt.starts_with(head) && prompt.ends_with(tail) && prompt.size() >= head.size() + tail.size()) {
            const auto slot = std::string_view(prompt).substr(head.size(), prompt.size() - head.size() - tail.size());
            out = transform(kind, slot) + "\n" + std::string(kTargetClose) + "\n";
        } else {
            out = transform(kind, prompt);
        }

        if (body.contains("stop") && body["stop"].is_array()) {
            const bool keep = body.value("include_stop_str_in_output", false);
            std::size_t cut = std::string::npos, len = 0;
            for (const auto& s : body["stop"]) {
                const auto stop = s.get<std::string>();
                const auto pos = out.find(stop);
                if (!stop.empty() && pos < cut) {
                    cut = pos;
                    len = stop.size();
                }
            }
            if (cut != std::string::npos) out.resize(keep ? cut + len : cut);
        }
        json choice{{"index", 0}, {"text", out}, {"finish_reason", "stop"}};
        return ok_json(json{{"choices", json::array({choice})}});
    };
}

enum class DetectorShape { gptzero, pangram, generic };

inline DetectorShape parse_detector_shape(std::string_view adapter) {
    if (adapter == "gptzero") return DetectorShape::gptzero;
    if (adapter == "pangram") return DetectorShape::pangram;
    return DetectorShape::generic;
}

// Marker-fraction detector: human probability = marker_fraction(text, window),
// answered in the payload shape of the given vendor. The generic shape is
// {"human_prob": p}.
inline MockTransport::Handler detector(DetectorShape shape, std::size_t window) {
    return [shape, window](const HttpRequest& req) -> HttpResponse {
        const auto body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) return bad_request("invalid json");
        const char* field = shape == DetectorShape::gptzero ? "document" : "text";
        if (!body.contains(field) || !body[field].is_string()) return bad_request("missing text");
        const double p = marker_fraction(body[field].get<std::string>(), window);
        switch (shape) {
            case DetectorShape::gptzero:
            {
                json probs{{"human", p}, {"ai", 1.0 - p}, {"mixed", 0.0}};
                json doc{{"class_probabilities", probs}};
                return ok_json(json{{"documents", json::array({doc})}});
            }
            case DetectorShape::pangram:
                return ok_json(json{{"ai_likelihood", 1.0 - p}});
            case DetectorShape::generic:
                break;
        }
        return ok_json(json{{"human_prob", p}});
    };
}

inline std::string between(std::string_view s, std::string_view open, std::string_view close) {
    const auto b = s.find(open);
    if (b == std::string_view::npos) return {};
    const auto start = b + open.size();
    const auto e = s.rfind(close);
    if (e == std::string_view::npos || e < start) return {};
    return std::string(s.substr(start, e - start));
}

struct JudgeBehavior {
    enum class Kind { jaccard, fixed, reply } kind = Kind::jaccard;
    int score = 10;      // fixed
    std::string reply;   // reply: returned verbatim
};

// Chat-completions judge. "jaccard" scores the <original>/<rewrite> slots of
// the judging prompt with jaccard_score.
inline MockTransport::Handler judge(JudgeBehavior behavior) {
    return [behavior](const HttpRequest& req) -> HttpResponse {
        const auto body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("messages")) return bad_request("missing messages");
        std::string prompt;
        for (const auto& m : body["messages"])
            if (m.value("role", "") == "user") prompt = m.value("content", "");
        std::string content;
        switch (behavior.kind) {
            case JudgeBehavior::Kind::jaccard:
                content = std::to_string(
                    jaccard_score(between(prompt, "<original>\n", "\n</original>"), between(prompt, "<rewrite>\n", "\n</rewrite>")));
                break;
            case JudgeBehavior::Kind::fixed: content = std::to_string(behavior.score); break;
            case JudgeBehavior::Kind::reply: content = behavior.reply; break;
        }
        return ok_json(chat_reply(content));
    };
}

inline MockTransport::Handler failing(int status) {
    return [status](const HttpRequest&) -> HttpResponse { return {status, "", status == 0 ? "connection refused" : ""}; };
}

}  // namespace hip::mock
