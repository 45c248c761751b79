#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hip/error.hpp"

namespace hip {

struct MetricSummary {
    std::string metric_id;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n = 0;

    bool operator==(const MetricSummary&) const = default;
};

inline void to_json(nlohmann::json& j, const MetricSummary& m) {
    j = nlohmann::json{{"metric_id", m.metric_id}, {"mean", m.mean}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}, {"n", m.n}};
}

struct CiOptions {
    double level = 0.95;
    std::size_t resamples = 2000;
    std::uint64_t seed = 0;
};

inline void to_json(nlohmann::json& j, const CiOptions& o) {
    j = nlohmann::json{{"method", "percentile_bootstrap"},
                       {"level", o.level},
                       {"resamples", o.resamples},
                       {"seed", o.seed},
                       {"quantile", "linear_interpolation"}};
}

// Uniform index in [0, n) from one 64-bit draw (multiply-shift). Portable,
// unlike std::uniform_int_distribution whose output is library-specific.
inline std::size_t bounded_draw(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

/// Row-major resamples x n matrix of resample indices.
inline std::vector<std::size_t> bootstrap_indices(std::size_t n, std::size_t resamples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(n * resamples);
    for (auto& i : idx) i = bounded_draw(rng, n);
    return idx;
}

/// Quantile of sorted data with linear interpolation between order statistics.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error("empty_input", "quantile of empty data");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

// Mean with a percentile-bootstrap confidence interval: the CI bounds are the
// (1-level)/2 and (1+level)/2 quantiles of the resampled means. Bounds are
// widened to include the sample mean when a very skewed resample
// distribution would leave it outside. n = 1 gives the degenerate [v, v].
inline MetricSummary aggregate_mean_ci(std::span<const double> values, double level, std::size_t resamples,
                                       std::uint64_t seed, std::string metric_id = {}) {
    const std::size_t n = values.size();
    if (n == 0) throw Error("empty_input", "aggregate_mean_ci needs at least one value");
    if (!(level > 0.0 && level < 1.0)) throw Error("config_error", "CI level must be in (0,1)");
    if (resamples == 0) throw Error("config_error", "resamples must be >= 1");

    double sum = 0.0;
    for (double v : values) sum += v;
    MetricSummary out{std::move(metric_id), sum / static_cast<double>(n), 0.0, 0.0, n};
    if (n == 1) {
        out.ci_low = out.ci_high = out.mean;
        return out;
    }

    std::mt19937_64 rng(seed);
    std::vector<double> means(resamples);
    for (auto& m : means) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += values[bounded_draw(rng, n)];
        m = s / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double alpha = 1.0 - level;
    out.ci_low = std::min(quantile_sorted(means, alpha / 2.0), out.mean);
    out.ci_high = std::max(quantile_sorted(means, 1.0 - alpha / 2.0), out.mean);
    return out;
}

inline MetricSummary aggregate_mean_ci(std::span<const double> values, const CiOptions& opts, std::string metric_id = {}) {
    return aggregate_mean_ci(values, opts.level, opts.resamples, opts.seed, std::move(metric_id));
}

}  // namespace hip
