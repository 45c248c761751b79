#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hip/clients/detector.hpp"
#include "hip/clients/generation.hpp"
#include "hip/corpus.hpp"
#include "hip/evaluation/frontier.hpp"
#include "hip/evaluation/stats.hpp"
#include "hip/hash.hpp"
#include "hip/hiploop.hpp"
#include "hip/parallel.hpp"
#include "hip/text.hpp"

namespace hip {

inline constexpr std::size_t kDefaultPerCategory = 32;

// First `per_category` passages of each category, in category order, then
// input order within a category.
inline std::vector<Passage> build_eval_set(std::span<const Passage> corpus, std::size_t per_category,
                                           std::span<const std::string> categories) {
    std::vector<Passage> out;
    out.reserve(per_category * categories.size());
    for (const auto& cat : categories) {
        std::size_t taken = 0;
        for (const auto& p : corpus) {
            if (taken == per_category) break;
            if (p.source_category == cat) {
                out.push_back(p);
                ++taken;
            }
        }
        if (taken < per_category)
            throw Error("insufficient_category", "category \"" + cat + "\" has " + std::to_string(taken) +
                                                     " passages, need " + std::to_string(per_category));
    }
    return out;
}

inline constexpr std::size_t kFirstSentenceFallbackChars = 200;

// Text up to and including the first '.', '!' or '?' that is followed by
// whitespace, end of text, or another terminator ("Really?!" ends at '?').
// Without a terminator: the first 200 characters. Abbreviations are not
// special-cased.
inline std::string first_sentence(std::string_view input) {
    const auto s = text::trim(input);
    if (s.empty()) throw Error("empty_text", "first_sentence of empty text");
    auto is_term = [](char c) { return c == '.' || c == '!' || c == '?'; };
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_term(s[i])) continue;
        if (i + 1 == s.size() || text::is_ascii_space(s[i + 1]) || is_term(s[i + 1]))
            return std::string(s.substr(0, i + 1));
    }
    const auto cps = text::utf8_decode(s);
    if (cps.size() <= kFirstSentenceFallbackChars) return std::string(s);
    return text::utf8_encode(std::u32string_view(cps).substr(0, kFirstSentenceFallbackChars));
}

struct ContinuationRecord {
    std::string prefix_id;
    Origin prefix_origin = Origin::human;
    std::string prefix_text;
    std::string continuation_text;
    std::map<std::string, double> detector_scores;
    std::string model_id;

    bool operator==(const ContinuationRecord&) const = default;
};

inline void to_json(nlohmann::json& j, const ContinuationRecord& r) {
    j = nlohmann::json{{"prefix_id", r.prefix_id},
                       {"prefix_origin", to_string(r.prefix_origin)},
                       {"prefix_text", r.prefix_text},
                       {"continuation_text", r.continuation_text},
                       {"detector_scores", r.detector_scores},
                       {"model_id", r.model_id}};
}

inline void from_json(const nlohmann::json& j, ContinuationRecord& r) {
    r.prefix_id = j.at("prefix_id").get<std::string>();
    r.prefix_origin = parse_origin(j.at("prefix_origin").get<std::string>());
    r.prefix_text = j.at("prefix_text").get<std::string>();
    r.continuation_text = j.at("continuation_text").get<std::string>();
    r.detector_scores = j.value("detector_scores", std::map<std::string, double>{});
    r.model_id = j.value("model_id", std::string());
}

// One continuation of the first sentence; detectors see only the generated
// text. Generation failures propagate, detector failures leave cells empty.
inline ContinuationRecord continue_prefix(const Passage& p, GenerationClient& generator,
                                          std::span<DetectorClient* const> detectors, DetectorCache& cache,
                                          const GenerationParams& params) {
    ContinuationRecord rec;
    rec.prefix_id = p.id;
    rec.prefix_origin = p.origin;
    rec.prefix_text = first_sentence(p.text);
    rec.model_id = generator.model_id();
    GenerationParams gp = params;
    if (params.seed) gp.seed = derive_seed(*params.seed, p.id);
    rec.continuation_text = std::string(text::trim(generator.generate(rec.prefix_text, gp)));
    if (rec.continuation_text.empty()) return rec;
    for (auto* d : detectors) {
        try {
            rec.detector_scores[d->id()] = detect(rec.continuation_text, *d, cache).human_prob;
        } catch (const Error&) {
        }
    }
    return rec;
}

inline std::vector<ContinuationRecord> continuation_eval(std::span<const Passage> prefixes, GenerationClient& generator,
                                                         std::span<DetectorClient* const> detectors,
                                                         DetectorCache& cache, const GenerationParams& params,
                                                         std::size_t workers = 1) {
    std::vector<ContinuationRecord> out;
    out.reserve(prefixes.size());
    parallel_ordered(
        prefixes, workers, [&](const Passage& p) { return continue_prefix(p, generator, detectors, cache, params); },
        [&](std::size_t, ContinuationRecord&& r) { out.push_back(std::move(r)); });
    return out;
}

struct ContinuationCell {
    std::string model_id;
    Origin origin = Origin::human;
    std::size_t count = 0;
    // Per detector; absent when no record in the cell has that score.
    std::map<std::string, MetricSummary> detectors;
    std::map<std::string, std::size_t> excluded;
};

// Groups records by (model, origin). Cell counts always sum to the number of
// records; missing detector cells are excluded per detector and counted.
inline std::vector<ContinuationCell> summarize_continuations(std::span<const ContinuationRecord> records,
                                                             const CiOptions& ci) {
    std::map<std::pair<std::string, int>, std::vector<const ContinuationRecord*>> groups;
    std::set<std::string> detector_ids;
    for (const auto& r : records) {
        groups[{r.model_id, static_cast<int>(r.prefix_origin)}].push_back(&r);
        for (const auto& [d, _] : r.detector_scores) detector_ids.insert(d);
    }
    std::vector<ContinuationCell> cells;
    for (const auto& [key, recs] : groups) {
        ContinuationCell cell;
        cell.model_id = key.first;
        cell.origin = static_cast<Origin>(key.second);
        cell.count = recs.size();
        for (const auto& d : detector_ids) {
            std::vector<double> vals;
            for (const auto* r : recs)
                if (auto it = r->detector_scores.find(d); it != r->detector_scores.end()) vals.push_back(it->second);
            cell.excluded[d] = recs.size() - vals.size();
            if (vals.empty()) continue;
            const auto seed = derive_seed(ci.seed, "continuation/" + cell.model_id + "/" +
                                                       std::string(to_string(cell.origin)) + "/" + d);
            cell.detectors[d] = aggregate_mean_ci(vals, ci.level, ci.resamples, seed, "human_prob:" + d);
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Round curves

inline constexpr std::string_view kSemanticMetric = "semantic";

inline std::string detector_metric(std::string_view detector_id) { return "human_prob:" + std::string(detector_id); }

struct CurveCell {
    std::size_t t = 0;
    std::optional<MetricSummary> summary;  // empty when every value is missing
    std::size_t excluded = 0;
};

struct RoundCurve {
    std::string metric_id;
    std::vector<CurveCell> cells;  // t = 0..N
};

// Per-round mean and CI of every metric across trajectories sharing N. The
// semantic curve comes first, then one curve per detector in id order
// (restricted to `detector_filter` when it is non-empty). Missing cells,
// including rounds past a truncation, are excluded and counted.
inline std::vector<RoundCurve> round_curves(std::span<const Trajectory> trajectories, const CiOptions& ci,
                                            const std::set<std::string>& detector_filter = {}) {
    if (trajectories.empty()) throw Error("no_trajectories", "round_curves needs at least one trajectory");
    const std::size_t n_rounds = trajectories.front().n_rounds;
    std::set<std::string> detectors;
    for (const auto& tr : trajectories) {
        if (tr.n_rounds != n_rounds)
            throw Error("inconsistent_rounds", "trajectory " + tr.passage_id + " has N=" + std::to_string(tr.n_rounds) +
                                                   ", expected " + std::to_string(n_rounds));
        for (const auto& r : tr.rounds)
            for (const auto& [d, _] : r.detector_scores)
                if (detector_filter.empty() || detector_filter.contains(d)) detectors.insert(d);
    }

    std::vector<std::string> metrics{std::string(kSemanticMetric)};
    for (const auto& d : detectors) metrics.push_back(detector_metric(d));

    std::vector<RoundCurve> curves;
    for (const auto& metric : metrics) {
        RoundCurve curve{metric, {}};
        const bool semantic = metric == kSemanticMetric;
        const std::string det = semantic ? std::string() : metric.substr(std::string_view("human_prob:").size());
        for (std::size_t t = 0; t <= n_rounds; ++t) {
            std::vector<double> vals;
            for (const auto& tr : trajectories) {
                if (t >= tr.rounds.size()) continue;
                const auto& r = tr.rounds[t];
                if (semantic) {
                    if (r.semantic_score) vals.push_back(static_cast<double>(*r.semantic_score));
                } else if (auto it = r.detector_scores.find(det); it != r.detector_scores.end()) {
                    vals.push_back(it->second);
                }
            }
            CurveCell cell{t, std::nullopt, trajectories.size() - vals.size()};
            if (!vals.empty()) {
                const auto seed = derive_seed(ci.seed, metric + "/" + std::to_string(t));
                cell.summary = aggregate_mean_ci(vals, ci.level, ci.resamples, seed, metric);
            }
            curve.cells.push_back(std::move(cell));
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

// One frontier per detector curve, built from per-round means. Rounds where
// either mean is missing are not candidates. Round 0 always is.
inline std::map<std::string, std::vector<FrontierPoint>> frontiers_from_curves(std::span<const RoundCurve> curves) {
    std::map<std::string, std::vector<FrontierPoint>> out;
    const RoundCurve* semantic = nullptr;
    for (const auto& c : curves)
        if (c.metric_id == kSemanticMetric) semantic = &c;
    if (semantic == nullptr) return out;
    for (const auto& c : curves) {
        if (&c == semantic) continue;
        const std::string det = c.metric_id.substr(std::string_view("human_prob:").size());
        std::vector<FrontierPoint> pts;
        for (std::size_t t = 0; t < c.cells.size() && t < semantic->cells.size(); ++t) {
            const auto& s = semantic->cells[t].summary;
            const auto& h = c.cells[t].summary;
            if (s && h) pts.push_back({t, s->mean, h->mean, det});
        }
        out[det] = pareto_frontier(pts);
    }
    return out;
}

}  // namespace hip
