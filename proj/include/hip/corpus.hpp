#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "hip/error.hpp"
#include "hip/text.hpp"

namespace hip {

enum class Origin { human, ai };

inline std::string_view to_string(Origin o) { return o == Origin::human ? "human" : "ai"; }

inline Origin parse_origin(std::string_view s) {
    if (s == "human") return Origin::human;
    if (s == "ai") return Origin::ai;
    throw Error("malformed_record", "origin must be \"human\" or \"ai\", got \"" + std::string(s) + "\"");
}

struct Passage {
    std::string id;
    std::string source_category;
    Origin origin = Origin::human;
    std::string text;
    std::map<std::string, std::string> meta;

    bool operator==(const Passage&) const = default;
};

inline void to_json(nlohmann::json& j, const Passage& p) {
    j = nlohmann::json{{"id", p.id},
                       {"source_category", p.source_category},
                       {"origin", to_string(p.origin)},
                       {"text", p.text},
                       {"meta", p.meta}};
}

// Strict on the five required fields; extra fields are ignored and
// non-string meta scalars are kept in their JSON spelling.
inline void from_json(const nlohmann::json& j, Passage& p) {
    if (!j.is_object()) throw Error("malformed_record", "record is not an object");
    auto str = [&](const char* key) -> std::string {
        if (!j.contains(key) || !j[key].is_string())
            throw Error("malformed_record", std::string("missing or non-string field \"") + key + "\"");
        return j[key].get<std::string>();
    };
    p.id = str("id");
    p.source_category = str("source_category");
    p.origin = parse_origin(str("origin"));
    p.text = str("text");
    p.meta.clear();
    if (j.contains("meta") && !j["meta"].is_null()) {
        if (!j["meta"].is_object()) throw Error("malformed_record", "meta must be an object");
        for (const auto& [k, v] : j["meta"].items()) p.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    if (p.id.empty()) throw Error("malformed_record", "empty id");
}

/// RAID domains followed by the MAGE source families.
inline std::vector<std::string> default_categories() {
    return {"abstracts", "books", "news", "wiki", "xsum", "cnn", "tldr", "squad"};
}

struct CorpusFilterConfig {
    std::set<std::string> category_allowlist = [] {
        std::set<std::string> s;
        for (const auto& c : default_categories()) {
            s.insert(c);
            s.insert(c + "_human");
        }
        return s;
    }();
    std::size_t min_words = 50;
    std::size_t max_words = 600;
    double min_printable_ratio = 0.95;
    double near_dup_jaccard_threshold = 0.9;
    std::size_t shingle_size = 5;
    // Quality screen: no 4-gram may occur more than this many times.
    std::size_t repetition_ngram = 4;
    std::size_t max_ngram_repeats = 3;
    std::vector<std::string> boilerplate_markers = {
        "<div", "</div>", "<p>", "</p>", "<br", "&nbsp;", "&amp;", "{{", "}}", "[edit]",
        "Click here", "All rights reserved", "Subscribe to our newsletter", "Cookie Policy",
        "Lorem ipsum"};

    void validate() const {
        if (min_words >= max_words) throw Error("config_error", "corpus.min_words must be < corpus.max_words");
        auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
        if (!in_unit(min_printable_ratio)) throw Error("config_error", "corpus.min_printable_ratio must be in (0,1]");
        if (!in_unit(near_dup_jaccard_threshold))
            throw Error("config_error", "corpus.near_dup_jaccard_threshold must be in (0,1]");
        if (shingle_size == 0) throw Error("config_error", "corpus.shingle_size must be >= 1");
        if (repetition_ngram == 0) throw Error("config_error", "corpus.repetition_ngram must be >= 1");
    }
};

struct Rejection {
    std::string id;
    std::string stage;
    std::string reason;
};

inline void to_json(nlohmann::json& j, const Rejection& r) {
    j = nlohmann::json{{"id", r.id}, {"stage", r.stage}, {"reason", r.reason}};
}

using RejectionSink = std::function<void(const Rejection&)>;

inline Passage normalized(Passage p) {
    p.text = text::normalize_text(p.text);
    return p;
}

/// Provenance and length predicate behind filter_candidates.
inline Check candidate_ok(const Passage& p, const CorpusFilterConfig& cfg) {
    if (!cfg.category_allowlist.contains(p.source_category)) return Check::fail("category_not_allowed");
    const auto words = text::word_count(p.text);
    if (words < cfg.min_words) return Check::fail("too_short");
    if (words > cfg.max_words) return Check::fail("too_long");
    if (text::printable_ratio(p.text) < cfg.min_printable_ratio) return Check::fail("low_printable");
    return Check::pass();
}

inline std::vector<Passage> filter_candidates(std::span<const Passage> corpus, const CorpusFilterConfig& cfg,
                                              const RejectionSink& reject = {}) {
    std::vector<Passage> kept;
    for (const auto& p : corpus) {
        if (auto c = candidate_ok(p, cfg)) {
            kept.push_back(p);
        } else if (reject) {
            reject({p.id, "filter", c.reason});
        }
    }
    return kept;
}

/// Case-folded, whitespace-collapsed key used for exact-duplicate detection.
inline std::string dedup_key(std::string_view s) {
    const std::string folded = text::case_fold(s);
    std::string key;
    for (auto w : text::split_words(folded)) {
        if (!key.empty()) key.push_back(' ');
        key.append(w);
    }
    return key;
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

// Sorted, unique 64-bit hashes of the word k-shingles of a dedup key. Texts
// shorter than k words yield a single shingle covering all of them.
inline std::vector<std::uint64_t> shingles(std::string_view key, std::size_t k) {
    const auto words = text::split_words(key);
    std::vector<std::uint64_t> out;
    if (words.empty()) return out;
    const std::size_t width = std::min(k, words.size());
    for (std::size_t i = 0; i + width <= words.size(); ++i) {
        std::uint64_t h = 1469598103934665603ull;
        for (std::size_t w = 0; w < width; ++w) {
            h = detail::fnv1a(words[i + w], h);
            h = detail::fnv1a("\x1f", h);
        }
        out.push_back(h);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline double jaccard(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0, i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++inter;
            ++i;
            ++j;
        }
    }
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

// Keeps the first occurrence of each exact key, then drops any passage whose
// shingle-set Jaccard similarity against an already retained passage reaches
// the threshold. Sequential: survivors depend on input order.
//
// Candidates for the near-duplicate test come from an inverted shingle index,
// so only passages sharing at least one shingle are compared; the similarity
// itself is exact.
inline std::vector<Passage> deduplicate(std::span<const Passage> corpus, const CorpusFilterConfig& cfg,
                                        const RejectionSink& reject = {}) {
    std::vector<Passage> kept;
    std::unordered_set<std::string> seen_keys;
    std::vector<std::vector<std::uint64_t>> kept_shingles;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> index;

    for (const auto& p : corpus) {
        std::string key = dedup_key(p.text);
        if (seen_keys.contains(key)) {
            if (reject) reject({p.id, "dedup", "exact_duplicate"});
            continue;
        }
        auto sh = shingles(key, cfg.shingle_size);

        std::unordered_map<std::size_t, std::size_t> overlap;
        for (auto s : sh) {
            if (auto it = index.find(s); it != index.end())
                for (auto idx : it->second) ++overlap[idx];
        }
        bool near = false;
        for (const auto& [idx, inter] : overlap) {
            const double uni = static_cast<double>(sh.size() + kept_shingles[idx].size() - inter);
            if (static_cast<double>(inter) / uni >= cfg.near_dup_jaccard_threshold) {
                near = true;
                break;
            }
        }
        if (near) {
            if (reject) reject({p.id, "dedup", "near_duplicate"});
            continue;
        }

        const std::size_t idx = kept.size();
        for (auto s : sh) index[s].push_back(idx);
        kept_shingles.push_back(std::move(sh));
        seen_keys.insert(std::move(key));
        kept.push_back(p);
    }
    return kept;
}

// Repetition and boilerplate are checked before length so that degenerate
// text is reported as such even when it is also short.
inline Check quality_screen(const Passage& p, const CorpusFilterConfig& cfg) {
    if (text::max_ngram_repeat(p.text, cfg.repetition_ngram) > cfg.max_ngram_repeats)
        return Check::fail("ngram_repetition");
    for (const auto& marker : cfg.boilerplate_markers) {
        if (!marker.empty() && p.text.find(marker) != std::string::npos) return Check::fail("boilerplate");
    }
    if (text::printable_ratio(p.text) < cfg.min_printable_ratio) return Check::fail("low_printable");
    const auto words = text::word_count(p.text);
    if (words < cfg.min_words) return Check::fail("too_short");
    if (words > cfg.max_words) return Check::fail("too_long");
    return Check::pass();
}

struct PrepareStats {
    std::size_t input = 0;
    std::size_t malformed = 0;
    std::size_t after_filter = 0;
    std::size_t after_dedup = 0;
    std::size_t clean = 0;
};

// The whole data-preparation front end: normalize, filter, deduplicate,
// quality-screen. Every dropped passage produces exactly one rejection.
inline std::vector<Passage> prepare_corpus(std::span<const Passage> raw, const CorpusFilterConfig& cfg,
                                           const RejectionSink& reject = {}, PrepareStats* stats = nullptr) {
    cfg.validate();
    std::vector<Passage> norm;
    norm.reserve(raw.size());
    for (const auto& p : raw) norm.push_back(normalized(p));

    auto cand = filter_candidates(norm, cfg, reject);
    auto dedup = deduplicate(cand, cfg, reject);
    std::vector<Passage> clean;
    for (auto& p : dedup) {
        if (auto c = quality_screen(p, cfg)) {
            clean.push_back(std::move(p));
        } else if (reject) {
            reject({p.id, "quality", c.reason});
        }
    }
    if (stats != nullptr) {
        stats->input = raw.size();
        stats->after_filter = cand.size();
        stats->after_dedup = dedup.size();
        stats->clean = clean.size();
    }
    return clean;
}

}  // namespace hip
