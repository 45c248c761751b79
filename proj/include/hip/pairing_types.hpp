#pragma once

#include <string>

#include <json.hpp>

namespace hip {

// One supervised pair: the AI-style paraphrase is the input, the original
// human passage is the target.
struct PairedExample {
    std::string pair_id;
    std::string human_target;
    std::string ai_source;
    int judge_score = 0;
    std::size_t attempts_used = 0;
    std::string paraphraser_id;

    bool operator==(const PairedExample&) const = default;
};

inline void to_json(nlohmann::json& j, const PairedExample& p) {
    j = nlohmann::json{{"pair_id", p.pair_id},
                       {"human_target", p.human_target},
                       {"ai_source", p.ai_source},
                       {"judge_score", p.judge_score},
                       {"attempts_used", p.attempts_used},
                       {"paraphraser_id", p.paraphraser_id}};
}

inline void from_json(const nlohmann::json& j, PairedExample& p) {
    p.pair_id = j.at("pair_id").get<std::string>();
    p.human_target = j.at("human_target").get<std::string>();
    p.ai_source = j.at("ai_source").get<std::string>();
    p.judge_score = j.at("judge_score").get<int>();
    p.attempts_used = j.at("attempts_used").get<std::size_t>();
    p.paraphraser_id = j.at("paraphraser_id").get<std::string>();
}

}  // namespace hip
