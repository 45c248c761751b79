#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hip/evaluation/evaluation.hpp"

namespace hip {

inline constexpr std::string_view kReportSchema = "hip-report/1";

struct MethodReport {
    std::string method;
    std::size_t trajectories = 0;
    std::size_t truncated = 0;
    std::size_t unclean_rounds = 0;
    std::vector<RoundCurve> curves;
    std::map<std::string, std::vector<FrontierPoint>> frontiers;
};

struct Report {
    std::vector<MethodReport> methods;
    std::vector<ContinuationCell> continuation;
    CiOptions ci;
};

// Groups trajectories by method (sorted by name) and computes curves and
// frontiers for each group.
inline Report build_report(std::span<const Trajectory> trajectories, std::span<const ContinuationRecord> continuations,
                           const CiOptions& ci, const std::set<std::string>& detector_filter = {}) {
    Report rep;
    rep.ci = ci;
    std::map<std::string, std::vector<Trajectory>> by_method;
    for (const auto& t : trajectories) by_method[t.method].push_back(t);
    for (auto& [method, group] : by_method) {
        MethodReport m;
        m.method = method;
        m.trajectories = group.size();
        for (const auto& t : group) {
            m.truncated += t.truncated ? 1 : 0;
            for (const auto& r : t.rounds) m.unclean_rounds += r.clean_parse ? 0 : 1;
        }
        CiOptions mci = ci;
        mci.seed = derive_seed(ci.seed, "method/" + method);
        m.curves = round_curves(group, mci, detector_filter);
        m.frontiers = frontiers_from_curves(m.curves);
        rep.methods.push_back(std::move(m));
    }
    if (!continuations.empty()) {
        std::vector<ContinuationRecord> kept(continuations.begin(), continuations.end());
        if (!detector_filter.empty()) {
            for (auto& r : kept)
                std::erase_if(r.detector_scores, [&](const auto& kv) { return !detector_filter.contains(kv.first); });
        }
        rep.continuation = summarize_continuations(kept, ci);
    }
    return rep;
}

inline nlohmann::json report_json(const Report& rep) {
    using json = nlohmann::json;
    json methods = json::array();
    for (const auto& m : rep.methods) {
        json curves = json::array();
        for (const auto& c : m.curves) {
            json cells = json::array();
            for (const auto& cell : c.cells) {
                cells.push_back({{"t", cell.t},
                                 {"excluded", cell.excluded},
                                 {"summary", cell.summary ? json(*cell.summary) : json(nullptr)}});
            }
            curves.push_back({{"metric_id", c.metric_id}, {"cells", cells}});
        }
        methods.push_back({{"method", m.method},
                           {"trajectories", m.trajectories},
                           {"truncated", m.truncated},
                           {"unclean_rounds", m.unclean_rounds},
                           {"round_curves", curves},
                           {"frontiers", m.frontiers}});
    }
    json cont = json::array();
    for (const auto& c : rep.continuation) {
        cont.push_back({{"model_id", c.model_id},
                        {"origin", to_string(c.origin)},
                        {"count", c.count},
                        {"detectors", c.detectors},
                        {"excluded", c.excluded}});
    }
    return {{"schema", kReportSchema}, {"confidence_interval", rep.ci}, {"methods", methods}, {"continuation", cont}};
}

namespace detail {

inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::ofstream open_for_write(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write " + p.string());
    return out;
}

}  // namespace detail

// Writes report.json plus one CSV per table into `dir`:
//   round_curves.csv  method,metric,round,n,excluded,mean,ci_low,ci_high
//   frontier.csv      method,detector_id,round,semantic_mean,human_prob_mean
//   continuation.csv  model_id,origin,detector_id,count,n,excluded,mean,ci_low,ci_high
// Returns the written paths.
inline std::vector<std::string> emit_report(const Report& rep, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error("io_error", "cannot create report directory " + dir);
    const fs::path base(dir);
    std::vector<std::string> written;

    {
        auto out = detail::open_for_write(base / "report.json");
        out << report_json(rep).dump(2) << '\n';
        written.push_back((base / "report.json").string());
    }
    {
        auto out = detail::open_for_write(base / "round_curves.csv");
        out << "method,metric,round,n,excluded,mean,ci_low,ci_high\n";
        for (const auto& m : rep.methods)
            for (const auto& c : m.curves)
                for (const auto& cell : c.cells) {
                    out << m.method << ',' << c.metric_id << ',' << cell.t << ',';
                    if (cell.summary) {
                        out << cell.summary->n << ',' << cell.excluded << ',' << detail::fmt6(cell.summary->mean) << ','
                            << detail::fmt6(cell.summary->ci_low) << ',' << detail::fmt6(cell.summary->ci_high) << '\n';
                    } else {
                        out << 0 << ',' << cell.excluded << ",,,\n";
                    }
                }
        written.push_back((base / "round_curves.csv").string());
    }
    {
        auto out = detail::open_for_write(base / "frontier.csv");
        out << "method,detector_id,round,semantic_mean,human_prob_mean\n";
        for (const auto& m : rep.methods)
            for (const auto& [det, pts] : m.frontiers)
                for (const auto& p : pts)
                    out << m.method << ',' << det << ',' << p.round << ',' << detail::fmt6(p.semantic_mean) << ','
                        << detail::fmt6(p.human_prob_mean) << '\n';
        written.push_back((base / "frontier.csv").string());
    }
    {
        auto out = detail::open_for_write(base / "continuation.csv");
        out << "model_id,origin,detector_id,count,n,excluded,mean,ci_low,ci_high\n";
        for (const auto& c : rep.continuation)
            for (const auto& [det, excluded] : c.excluded) {
                out << c.model_id << ',' << to_string(c.origin) << ',' << det << ',' << c.count << ',';
                if (auto it = c.detectors.find(det); it != c.detectors.end()) {
                    const auto& s = it->second;
                    out << s.n << ',' << excluded << ',' << detail::fmt6(s.mean) << ',' << detail::fmt6(s.ci_low) << ','
                        << detail::fmt6(s.ci_high) << '\n';
                } else {
                    out << 0 << ',' << excluded << ",,,\n";
                }
            }
        written.push_back((base / "continuation.csv").string());
    }
    return written;
}

}  // namespace hip
