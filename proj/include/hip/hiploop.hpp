#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hip/clients/detector.hpp"
#include "hip/clients/generation.hpp"
#include "hip/clients/judge.hpp"
#include "hip/hash.hpp"
#include "hip/prompting.hpp"

namespace hip {

inline constexpr std::size_t kDefaultRounds = 10;
inline constexpr int kReferenceSemanticScore = 10;

struct RoundRecord {
    std::size_t t = 0;
    std::string text;
    std::optional<int> semantic_score;
    std::map<std::string, double> detector_scores;
    bool clean_parse = true;

    bool operator==(const RoundRecord&) const = default;
};

struct Trajectory {
    std::string passage_id;
    std::string method = "hip";
    std::string paraphraser_id;
    GenerationParams params;
    std::size_t n_rounds = 0;  // requested N; rounds.size() == N + 1 unless truncated
    std::vector<RoundRecord> rounds;
    bool truncated = false;
    std::string truncation_reason;

    bool operator==(const Trajectory&) const = default;
};

inline void to_json(nlohmann::json& j, const RoundRecord& r) {
    j = nlohmann::json{{"t", r.t},
                       {"text", r.text},
                       {"semantic_score", r.semantic_score ? nlohmann::json(*r.semantic_score) : nlohmann::json(nullptr)},
                       {"detector_scores", r.detector_scores},
                       {"clean_parse", r.clean_parse}};
}

inline void from_json(const nlohmann::json& j, RoundRecord& r) {
    r.t = j.at("t").get<std::size_t>();
    r.text = j.at("text").get<std::string>();
    const auto& s = j.at("semantic_score");
    r.semantic_score = s.is_null() ? std::nullopt : std::optional<int>(s.get<int>());
    r.detector_scores = j.value("detector_scores", std::map<std::string, double>{});
    r.clean_parse = j.value("clean_parse", true);
}

inline void to_json(nlohmann::json& j, const Trajectory& t) {
    j = nlohmann::json{{"passage_id", t.passage_id},
                       {"method", t.method},
                       {"paraphraser_id", t.paraphraser_id},
                       {"params", t.params},
                       {"n_rounds", t.n_rounds},
                       {"truncated", t.truncated},
                       {"truncation_reason", t.truncation_reason},
                       {"rounds", t.rounds}};
}

inline void from_json(const nlohmann::json& j, Trajectory& t) {
    t.passage_id = j.at("passage_id").get<std::string>();
    t.method = j.value("method", std::string("hip"));
    t.paraphraser_id = j.value("paraphraser_id", std::string());
    t.params = j.value("params", GenerationParams{});
    t.n_rounds = j.at("n_rounds").get<std::size_t>();
    t.truncated = j.value("truncated", false);
    t.truncation_reason = j.value("truncation_reason", std::string());
    t.rounds = j.at("rounds").get<std::vector<RoundRecord>>();
}

struct StepResult {
    std::string text;
    bool clean = true;
};

/// Produces round t from round t-1.
using RoundStep = std::function<StepResult(const std::string& previous, std::size_t t)>;

// Fixed-N loop driver shared by HIP and the prompt baselines. Errors from a
// step truncate the trajectory at the last good round; the error code becomes
// the truncation reason.
inline Trajectory run_rounds(const std::string& x0, std::size_t n_rounds, const RoundStep& step) {
    if (x0.empty()) throw Error("empty_text", "initial text is empty");
    Trajectory traj;
    traj.n_rounds = n_rounds;
    traj.rounds.push_back({0, x0, std::nullopt, {}, true});
    for (std::size_t t = 1; t <= n_rounds; ++t) {
        try {
            auto r = step(traj.rounds.back().text, t);
            traj.rounds.push_back({t, std::move(r.text), std::nullopt, {}, r.clean});
        } catch (const Error& e) {
            traj.truncated = true;
            traj.truncation_reason = e.code();
            break;
        }
    }
    return traj;
}

// Iterative paraphrasing: x(t) = extract(generate(prompt(x(t-1)))). Unclean
// parses are kept, flagged, and fed to the next round. With a seed in
// `params`, round t is sampled with derive_seed(seed, "round/<t>").
inline Trajectory run_hip(const std::string& x0, GenerationClient& paraphraser, std::size_t n_rounds,
                          const GenerationParams& params, FormatMode mode = FormatMode::tagged) {
    params.validate();
    auto traj = run_rounds(x0, n_rounds, [&](const std::string& prev, std::size_t t) {
        GenerationParams p = params;
        if (params.seed) p.seed = derive_seed(*params.seed, "round/" + std::to_string(t));
        const auto raw = paraphraser.generate(render_inference_prompt(prev, mode), p);
        auto ex = extract_target(raw, mode);
        return StepResult{std::move(ex.text), ex.clean};
    });
    traj.method = "hip";
    traj.paraphraser_id = paraphraser.model_id();
    traj.params = params;
    return traj;
}

struct ScoreStats {
    std::size_t judge_failures = 0;
    std::size_t detector_failures = 0;
};

// Semantic score of every round against round 0 (10 at t = 0 by definition)
// and cached human probabilities from each detector. Failed cells stay empty.
inline ScoreStats score_trajectory(Trajectory& traj, JudgeClient* judge, std::span<DetectorClient* const> detectors,
                                   DetectorCache& cache) {
    ScoreStats stats;
    if (traj.rounds.empty()) return stats;
    const std::string& x0 = traj.rounds.front().text;
    for (auto& r : traj.rounds) {
        if (r.t == 0) {
            r.semantic_score = kReferenceSemanticScore;
        } else if (judge != nullptr) {
            try {
                r.semantic_score = judge->judge_semantic(x0, r.text);
            } catch (const Error&) {
                r.semantic_score.reset();
                ++stats.judge_failures;
            }
        }
        for (auto* d : detectors) {
            try {
                r.detector_scores[d->id()] = detect(r.text, *d, cache).human_prob;
            } catch (const Error&) {
                r.detector_scores.erase(d->id());
                ++stats.detector_failures;
            }
        }
    }
    return stats;
}

}  // namespace hip
