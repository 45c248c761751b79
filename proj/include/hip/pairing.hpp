#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hip/clients/generation.hpp"
#include "hip/clients/judge.hpp"
#include "hip/corpus.hpp"
#include "hip/hash.hpp"
#include "hip/pairing_types.hpp"
#include "hip/parallel.hpp"
#include "hip/prompting.hpp"
#include "hip/text.hpp"

namespace hip {

inline constexpr std::string_view kPairParaphraseInstruction =
    "Paraphrase the following passage, preserving its meaning:";

struct PairGenConfig {
    std::size_t retry_budget = 3;
    int min_judge_score = 7;
    double length_ratio_low = 0.5;
    double length_ratio_high = 2.0;
    std::vector<std::string> forbidden_substrings{std::string(kSourceOpen), std::string(kSourceClose),
                                                  std::string(kTargetOpen), std::string(kTargetClose)};
    double min_printable_ratio = 0.95;
    std::size_t repetition_ngram = 4;
    std::size_t max_ngram_repeats = 3;
    // Sent verbatim as the system message; the passage is the user message.
    std::string paraphrase_instruction{kPairParaphraseInstruction};
    GenerationParams params{1.0, 0.95, 1024, {}, std::nullopt};

    void validate() const {
        if (retry_budget < 1) throw Error("config_error", "pairing.retry_budget must be >= 1");
        if (min_judge_score < 0 || min_judge_score > 10)
            throw Error("config_error", "pairing.min_judge_score must be in [0,10]");
        if (!(length_ratio_low < 1.0 && 1.0 < length_ratio_high))
            throw Error("config_error", "pairing length ratio bounds must satisfy low < 1 < high");
        params.validate();
    }
};

// Structural gate on a candidate paraphrase. Checked in order: tag leak,
// word-length ratio against the target, printable ratio, 4-gram repetition.
inline Check anomaly_free(std::string_view candidate, std::string_view target, const PairGenConfig& cfg) {
    for (const auto& s : cfg.forbidden_substrings)
        if (!s.empty() && candidate.find(s) != std::string_view::npos) return Check::fail("tag_leak");
    const auto target_words = text::word_count(target);
    const double ratio = target_words == 0 ? 0.0
                                           : static_cast<double>(text::word_count(candidate)) /
                                                 static_cast<double>(target_words);
    if (ratio < cfg.length_ratio_low || ratio > cfg.length_ratio_high) return Check::fail("length_ratio");
    if (text::printable_ratio(candidate) < cfg.min_printable_ratio) return Check::fail("low_printable");
    if (text::max_ngram_repeat(candidate, cfg.repetition_ngram) > cfg.max_ngram_repeats)
        return Check::fail("ngram_repetition");
    return Check::pass();
}

struct SemanticCheck {
    bool ok = false;
    int score = 0;
};

/// Throws Error("judge_unavailable") when the judge cannot produce a score.
inline SemanticCheck semantic_preservation_ok(const std::string& candidate, const std::string& target,
                                              JudgeClient& judge, const PairGenConfig& cfg) {
    int score = 0;
    try {
        score = judge.judge_semantic(target, candidate);
    } catch (const Error& e) {
        throw Error("judge_unavailable", e.what());
    }
    return {score >= cfg.min_judge_score, score};
}

struct PairDrop {
    std::string id;
    std::string reason;
    std::size_t attempts = 0;
};

inline void to_json(nlohmann::json& j, const PairDrop& d) {
    j = nlohmann::json{{"id", d.id}, {"reason", d.reason}, {"attempts", d.attempts}};
}

using PairOutcome = std::variant<PairedExample, PairDrop>;

// One passage of the pairing loop: up to K paraphrase attempts, the first
// candidate passing both gates wins. Judge outages end the passage without
// consuming the attempt; generation failures drop it as "generation_failed".
//
// Each attempt uses its own seed derived from (seed, passage id, attempt).
inline PairOutcome build_pair(const Passage& h, GenerationClient& paraphraser, JudgeClient& judge,
                              const PairGenConfig& cfg, std::uint64_t seed) {
    const std::vector<ChatMessage> prompt{{"system", cfg.paraphrase_instruction}, {"user", h.text}};
    std::size_t used = 0;
    for (std::size_t attempt = 1; attempt <= cfg.retry_budget; ++attempt) {
        GenerationParams params = cfg.params;
        params.seed = derive_seed(seed, h.id + "#" + std::to_string(attempt));

        std::string candidate;
        try {
            candidate = text::normalize_text(paraphraser.generate(prompt, params));
        } catch (const Error&) {
            return PairDrop{h.id, "generation_failed", attempt};
        }
        if (!anomaly_free(candidate, h.text, cfg)) {
            used = attempt;
            continue;
        }
        SemanticCheck sem;
        try {
            sem = semantic_preservation_ok(candidate, h.text, judge, cfg);
        } catch (const Error&) {
            return PairDrop{h.id, "judge_unavailable", used};
        }
        used = attempt;
        if (sem.ok) return PairedExample{h.id, h.text, std::move(candidate), sem.score, attempt, paraphraser.model_id()};
    }
    return PairDrop{h.id, "budget_exhausted", used};
}

struct PairingResult {
    std::vector<PairedExample> pairs;
    std::vector<PairDrop> drops;
    std::size_t attempts = 0;
};

inline PairingResult build_pairs(std::span<const Passage> clean_corpus, GenerationClient& paraphraser,
                                 JudgeClient& judge, const PairGenConfig& cfg, std::uint64_t seed,
                                 std::size_t workers = 1) {
    cfg.validate();
    PairingResult result;
    parallel_ordered(
        clean_corpus, workers, [&](const Passage& p) { return build_pair(p, paraphraser, judge, cfg, seed); },
        [&](std::size_t, PairOutcome&& outcome) {
            if (auto* pair = std::get_if<PairedExample>(&outcome)) {
                result.attempts += pair->attempts_used;
                result.pairs.push_back(std::move(*pair));
            } else {
                auto& drop = std::get<PairDrop>(outcome);
                result.attempts += drop.attempts;
                result.drops.push_back(std::move(drop));
            }
        });
    return result;
}

}  // namespace hip
