#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace hip {

/// Per-round mean position in (semantic preservation, human-likeness) space.
struct FrontierPoint {
    std::size_t round = 0;
    double semantic_mean = 0.0;
    double human_prob_mean = 0.0;
    std::string detector_id;

    bool operator==(const FrontierPoint&) const = default;
};

inline void to_json(nlohmann::json& j, const FrontierPoint& p) {
    j = nlohmann::json{{"round", p.round},
                       {"semantic_mean", p.semantic_mean},
                       {"human_prob_mean", p.human_prob_mean},
                       {"detector_id", p.detector_id}};
}

/// `a` is at least as good as `b` in both coordinates and better in one.
inline bool dominates(const FrontierPoint& a, const FrontierPoint& b) {
    return a.semantic_mean >= b.semantic_mean && a.human_prob_mean >= b.human_prob_mean &&
           (a.semantic_mean > b.semantic_mean || a.human_prob_mean > b.human_prob_mean);
}

// Non-dominated subset when maximizing both coordinates. Points identical in
// both coordinates collapse to the earliest round (then earliest input).
// Result is ordered by semantic_mean descending.
//
// Sweep: after sorting by semantic desc, human desc, a point survives iff its
// human value strictly exceeds every human value seen before it.
inline std::vector<FrontierPoint> pareto_frontier(std::span<const FrontierPoint> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& pa = points[a];
        const auto& pb = points[b];
        if (pa.semantic_mean != pb.semantic_mean) return pa.semantic_mean > pb.semantic_mean;
        if (pa.human_prob_mean != pb.human_prob_mean) return pa.human_prob_mean > pb.human_prob_mean;
        if (pa.round != pb.round) return pa.round < pb.round;
        return a < b;
    });

    std::vector<FrontierPoint> frontier;
    for (auto i : order) {
        if (frontier.empty() || points[i].human_prob_mean > frontier.back().human_prob_mean)
            frontier.push_back(points[i]);
    }
    return frontier;
}

}  // namespace hip
