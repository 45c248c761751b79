#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sys/stat.h>

#include "hip/evaluation/report.hpp"
#include "hip/hiploop.hpp"
#include "support.hpp"

using namespace hip;
using namespace hip::testing;
using nlohmann::json;

namespace {

// Reference percentile bootstrap written from the definition: resample means
// from the shared index matrix, sort, and read quantiles as
// x[floor(h)] + (h - floor(h)) * (x[floor(h)+1] - x[floor(h)]) with h = (m-1)p.
MetricSummary oracle_ci(const std::vector<double>& v, double level, std::size_t resamples, std::uint64_t seed) {
    const auto n = v.size();
    const auto idx = bootstrap_indices(n, resamples, seed);
    std::vector<double> means;
    for (std::size_t r = 0; r < resamples; ++r) {
        long double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += v[idx[r * n + i]];
        means.push_back(static_cast<double>(s / n));
    }
    std::sort(means.begin(), means.end());
    auto q = [&](double p) {
        const double h = (static_cast<double>(means.size()) - 1.0) * p;
        const auto lo = static_cast<std::size_t>(h);
        if (lo + 1 >= means.size()) return means.back();
        return means[lo] + (h - static_cast<double>(lo)) * (means[lo + 1] - means[lo]);
    };
    long double total = 0;
    for (double x : v) total += x;
    const double mean = static_cast<double>(total / n);
    const double a = (1.0 - level) / 2.0;
    return {"", mean, std::min(q(a), mean), std::max(q(1.0 - a), mean), n};
}

std::vector<FrontierPoint> brute_force_frontier(const std::vector<FrontierPoint>& pts) {
    std::vector<FrontierPoint> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < pts.size() && keep; ++j) {
            if (i == j) continue;
            if (dominates(pts[j], pts[i])) keep = false;
            // Exact ties: only the earliest round (then earliest index) stays.
            const bool tie = pts[j].semantic_mean == pts[i].semantic_mean &&
                             pts[j].human_prob_mean == pts[i].human_prob_mean;
            if (tie && (pts[j].round < pts[i].round || (pts[j].round == pts[i].round && j < i))) keep = false;
        }
        if (keep) out.push_back(pts[i]);
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.semantic_mean > b.semantic_mean; });
    return out;
}

FrontierPoint pt(std::size_t round, double s, double h) { return {round, s, h, "d"}; }

Trajectory scored_trajectory(const std::string& id, std::vector<int> sem, std::vector<double> det) {
    Trajectory t;
    t.passage_id = id;
    t.n_rounds = sem.size() - 1;
    for (std::size_t i = 0; i < sem.size(); ++i) {
        RoundRecord r;
        r.t = i;
        r.text = "x";
        r.semantic_score = sem[i];
        r.detector_scores["d"] = det[i];
        t.rounds.push_back(r);
    }
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// aggregate_mean_ci

TEST(MeanCi, ConstantDataHasZeroWidth) {
    const std::vector<double> v(50, 0.5);
    const auto s = aggregate_mean_ci(v, 0.95, 2000, 1);
    EXPECT_EQ(s.mean, 0.5);
    EXPECT_EQ(s.ci_low, 0.5);
    EXPECT_EQ(s.ci_high, 0.5);
}

TEST(MeanCi, SingleValueIsDegenerate) {
    const std::vector<double> v{7.0};
    const auto s = aggregate_mean_ci(v, 0.95, 2000, 1);
    EXPECT_EQ(s.mean, 7.0);
    EXPECT_EQ(s.ci_low, 7.0);
    EXPECT_EQ(s.ci_high, 7.0);
    EXPECT_EQ(s.n, 1u);
}

TEST(MeanCi, MatchesIndependentBootstrap) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> dist(3.0, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> v(256);
        for (auto& x : v) x = dist(rng);
        for (double level : {0.8, 0.9, 0.95, 0.99}) {
            const auto got = aggregate_mean_ci(v, level, 2000, 99 + trial);
            const auto want = oracle_ci(v, level, 2000, 99 + trial);
            EXPECT_NEAR(got.mean, want.mean, 1e-9);
            EXPECT_NEAR(got.ci_low, want.ci_low, 1e-9);
            EXPECT_NEAR(got.ci_high, want.ci_high, 1e-9);
        }
    }
}

TEST(MeanCi, WiderLevelGivesWiderInterval) {
    std::mt19937_64 rng(5);
    std::exponential_distribution<double> dist(1.0);
    std::vector<double> v(100);
    for (auto& x : v) x = dist(rng);
    double prev_low = 1e300, prev_high = -1e300;
    for (double level : {0.5, 0.8, 0.9, 0.95, 0.99}) {
        const auto s = aggregate_mean_ci(v, level, 2000, 17);
        EXPECT_LE(s.ci_low, prev_low);
        EXPECT_GE(s.ci_high, prev_high);
        EXPECT_LE(s.ci_low, s.mean);
        EXPECT_GE(s.ci_high, s.mean);
        prev_low = s.ci_low;
        prev_high = s.ci_high;
    }
}

TEST(MeanCi, Errors) {
    EXPECT_THROW((void)aggregate_mean_ci({}, 0.95, 10, 0), Error);
    const std::vector<double> v{1, 2};
    EXPECT_THROW((void)aggregate_mean_ci(v, 1.0, 10, 0), Error);
    EXPECT_THROW((void)aggregate_mean_ci(v, 0.95, 0, 0), Error);
}

TEST(MeanCi, ResampleIndicesAreUniformAndInRange) {
    // Sanity of the engine itself: the 10000th draw of a default-seeded
    // mt19937_64 is fixed by the standard.
    std::mt19937_64 e;
    e.discard(9999);
    EXPECT_EQ(e(), 9981545732273789042ull);

    const auto idx = bootstrap_indices(10, 10000, 3);
    std::vector<int> hist(10);
    for (auto i : idx) {
        ASSERT_LT(i, 10u);
        ++hist[i];
    }
    for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}

// ---------------------------------------------------------------------------
// pareto_frontier

TEST(Frontier, SinglePoint) {
    const std::vector<FrontierPoint> p{pt(0, 1.0, 0.5)};
    EXPECT_EQ(pareto_frontier(p), p);
}

TEST(Frontier, DominatedMiddlePointIsDropped) {
    const std::vector<FrontierPoint> p{pt(1, 9, 0.1), pt(2, 8, 0.3), pt(3, 7, 0.2), pt(4, 6, 0.5)};
    const auto f = pareto_frontier(p);
    EXPECT_EQ(f, (std::vector<FrontierPoint>{pt(1, 9, 0.1), pt(2, 8, 0.3), pt(4, 6, 0.5)}));
    EXPECT_EQ(f, brute_force_frontier(p));
}

TEST(Frontier, GlobalMaximumIsASingleton) {
    const std::vector<FrontierPoint> p{pt(0, 5, 0.5), pt(1, 10, 0.9), pt(2, 3, 0.9), pt(3, 10, 0.1)};
    EXPECT_EQ(pareto_frontier(p), std::vector<FrontierPoint>{pt(1, 10, 0.9)});
}

TEST(Frontier, MatchesBruteForceAndIsIdempotent) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<std::size_t> size(0, 64);
    std::uniform_int_distribution<int> coarse(0, 6);  // many ties
    std::uniform_real_distribution<double> fine(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<FrontierPoint> p;
        const auto n = size(rng);
        const bool tied = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i)
            p.push_back(pt(i % 11, tied ? coarse(rng) : 10 * fine(rng), tied ? coarse(rng) / 6.0 : fine(rng)));
        const auto f = pareto_frontier(p);
        ASSERT_EQ(f, brute_force_frontier(p));
        ASSERT_EQ(pareto_frontier(f), f);
    }
}

// ---------------------------------------------------------------------------
// Evaluation set and first sentence

TEST(EvalSet, TakesFirstPerCategoryInCategoryOrder) {
    std::vector<Passage> corpus;
    for (const auto& cat : {"c", "b", "a"})
        for (int i = 0; i < 3; ++i)
            corpus.push_back(make_passage(std::string(cat) + std::to_string(i), cat, Origin::ai, "t"));
    const std::vector<std::string> cats{"a", "b", "c"};
    const auto set = build_eval_set(corpus, 1, cats);
    ASSERT_EQ(set.size(), 3u);
    EXPECT_EQ(set[0].id, "a0");
    EXPECT_EQ(set[1].id, "b0");
    EXPECT_EQ(set[2].id, "c0");
}

TEST(EvalSet, ShortCategoryIsNamed) {
    std::vector<Passage> corpus;
    for (int i = 0; i < 10; ++i) corpus.push_back(make_passage("n" + std::to_string(i), "news", Origin::ai, "t"));
    const std::vector<std::string> cats{"news"};
    try {
        (void)build_eval_set(corpus, 32, cats);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "insufficient_category");
        EXPECT_NE(std::string(e.what()).find("news"), std::string::npos);
    }
}

TEST(FirstSentence, Examples) {
    EXPECT_EQ(first_sentence("A police force has apologised. More text."), "A police force has apologised.");
    EXPECT_EQ(first_sentence("No terminator here"), "No terminator here");
    EXPECT_EQ(first_sentence("Really?! Yes."), "Really?");
}

TEST(FirstSentence, EdgeCases) {
    EXPECT_EQ(first_sentence("Version 2.5 is out. Next."), "Version 2.5 is out.");
    EXPECT_EQ(first_sentence("  Leading space! rest"), "Leading space!");
    EXPECT_EQ(first_sentence("Wait..."), "Wait.");
    const std::string long_text(500, 'x');
    EXPECT_EQ(first_sentence(long_text), std::string(200, 'x'));
    std::string accents;
    for (int i = 0; i < 250; ++i) accents += "\xC3\xA9";
    EXPECT_EQ(text::char_count(first_sentence(accents)), 200u);
    EXPECT_THROW((void)first_sentence("   "), Error);
}

// ---------------------------------------------------------------------------
// Continuations

TEST(Continuation, MeansEqualMockArithmetic) {
    std::mt19937_64 rng(3);
    std::vector<Passage> prefixes;
    for (int i = 0; i < 6; ++i) {
        const auto origin = i % 2 == 0 ? Origin::human : Origin::ai;
        prefixes.push_back(make_passage("p" + std::to_string(i), "news", origin, synthetic_text(rng, 3 + 4 * i)));
    }
    auto gen = mock_generator(mock::GeneratorKind::continuation, "cont-model");
    auto whole = mock_detector("whole", mock::DetectorShape::generic, 0);
    std::vector<DetectorClient*> dets{whole.client.get()};
    DetectorCache cache;
    GenerationParams params;
    params.stop_sequences.clear();
    const auto recs = continuation_eval(prefixes, *gen.client, dets, cache, params, 3);
    ASSERT_EQ(recs.size(), prefixes.size());

    std::map<Origin, std::vector<double>> expected;
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
        const auto words = text::word_count(first_sentence(prefixes[i].text));
        const double p = 1.0 / static_cast<double>(words + 1);  // W "more" tokens and one marker
        EXPECT_DOUBLE_EQ(recs[i].detector_scores.at("whole"), p);
        expected[prefixes[i].origin].push_back(p);
    }
    const auto cells = summarize_continuations(recs, CiOptions{});
    ASSERT_EQ(cells.size(), 2u);
    std::size_t total = 0;
    for (const auto& c : cells) {
        total += c.count;
        const auto& v = expected[c.origin];
        double mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        EXPECT_NEAR(c.detectors.at("whole").mean, mean, 1e-12);
        EXPECT_EQ(c.model_id, "cont-model");
    }
    EXPECT_EQ(total, prefixes.size());
}

TEST(Continuation, EmptyInputGivesNoRecords) {
    auto gen = mock_generator(mock::GeneratorKind::continuation);
    DetectorCache cache;
    EXPECT_TRUE(continuation_eval({}, *gen.client, {}, cache, GenerationParams{}).empty());
    EXPECT_TRUE(summarize_continuations({}, CiOptions{}).empty());
}

TEST(Continuation, MixedOriginsSplitIntoTwoGroups) {
    std::vector<Passage> prefixes{make_passage("h1", "news", Origin::human, "One. Two."),
                                  make_passage("a1", "news", Origin::ai, "Three. Four."),
                                  make_passage("h2", "news", Origin::human, "Five six. Seven."),
                                  make_passage("a2", "news", Origin::ai, "Eight nine ten. Eleven.")};
    auto gen = mock_generator(mock::GeneratorKind::continuation);
    auto det = mock_detector("d", mock::DetectorShape::generic, 0);
    std::vector<DetectorClient*> dets{det.client.get()};
    DetectorCache cache;
    GenerationParams params;
    params.stop_sequences.clear();
    const auto recs = continuation_eval(prefixes, *gen.client, dets, cache, params);
    ASSERT_EQ(recs.size(), 4u);
    const auto cells = summarize_continuations(recs, CiOptions{});
    ASSERT_EQ(cells.size(), 2u);
    for (const auto& c : cells) EXPECT_EQ(c.count, 2u);
    // The prompt is the first sentence alone.
    EXPECT_EQ(json::parse(gen.transport->log().at(0).request.body)["prompt"], "One.");
}

// ---------------------------------------------------------------------------
// Round curves and report

TEST(RoundCurves, IdenticalTrajectoriesGiveExactValues) {
    const auto t = scored_trajectory("a", {10, 9, 8}, {0.1, 0.2, 0.4});
    const std::vector<Trajectory> ts{t, t};
    const auto curves = round_curves(ts, CiOptions{});
    ASSERT_EQ(curves.size(), 2u);
    EXPECT_EQ(curves[0].metric_id, "semantic");
    EXPECT_EQ(curves[1].metric_id, "human_prob:d");
    for (std::size_t r = 0; r < 3; ++r) {
        const auto& s = *curves[0].cells[r].summary;
        EXPECT_EQ(s.mean, t.rounds[r].semantic_score.value());
        EXPECT_EQ(s.ci_low, s.ci_high);
        const auto& d = *curves[1].cells[r].summary;
        EXPECT_DOUBLE_EQ(d.mean, t.rounds[r].detector_scores.at("d"));
        EXPECT_EQ(d.ci_low, d.ci_high);
    }
}

TEST(RoundCurves, EmptyAndInconsistentInputs) {
    try {
        (void)round_curves({}, CiOptions{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "no_trajectories");
    }
    const std::vector<Trajectory> mixed{scored_trajectory("a", {10, 9}, {0, 1}), scored_trajectory("b", {10}, {0})};
    EXPECT_THROW((void)round_curves(mixed, CiOptions{}), Error);
}

TEST(RoundCurves, MissingCellsAreExcludedAndCounted) {
    auto a = scored_trajectory("a", {10, 9, 8}, {0.1, 0.2, 0.3});
    auto b = scored_trajectory("b", {10, 9, 8}, {0.1, 0.2, 0.3});
    b.rounds[1].semantic_score.reset();
    b.rounds.pop_back();
    b.truncated = true;
    const std::vector<Trajectory> ts{a, b};
    const auto curves = round_curves(ts, CiOptions{});
    EXPECT_EQ(curves[0].cells[1].excluded, 1u);
    EXPECT_EQ(curves[0].cells[2].excluded, 1u);
    EXPECT_EQ(curves[0].cells[0].excluded, 0u);
    EXPECT_EQ(curves[0].cells[1].summary->n, 1u);
}

TEST(RoundCurves, MarkerMockCurveIsStrictlyIncreasing) {
    std::mt19937_64 rng(4);
    auto gen = mock_generator(mock::GeneratorKind::append_marker);
    auto judge = mock_judge();
    auto det = mock_detector("tail", mock::DetectorShape::gptzero, 4);
    std::vector<DetectorClient*> dets{det.client.get()};
    DetectorCache cache;
    std::vector<Trajectory> ts;
    for (int i = 0; i < 5; ++i) {
        auto t = run_hip(synthetic_text(rng, 30), *gen.client, 4, GenerationParams{});
        (void)score_trajectory(t, judge.client.get(), dets, cache);
        ts.push_back(std::move(t));
    }
    const auto curves = round_curves(ts, CiOptions{});
    const auto& det_curve = curves.at(1);
    for (std::size_t t = 1; t < det_curve.cells.size(); ++t) {
        EXPECT_GT(det_curve.cells[t].summary->mean, det_curve.cells[t - 1].summary->mean);
        EXPECT_DOUBLE_EQ(det_curve.cells[t].summary->mean, static_cast<double>(t) / 4.0);
    }
}

TEST(Report, WritesJsonAndThreeCsvs) {
    TempDir dir;
    const std::vector<Trajectory> ts{scored_trajectory("a", {10, 9, 8}, {0.1, 0.5, 0.3}),
                                     scored_trajectory("b", {10, 8, 7}, {0.2, 0.4, 0.6})};
    ContinuationRecord c{"p", Origin::human, "P.", "cont", {{"d", 0.5}}, "m"};
    const std::vector<ContinuationRecord> cs{c};
    const auto rep = build_report(ts, cs, CiOptions{});
    const auto files = emit_report(rep, dir.file("out"));
    ASSERT_EQ(files.size(), 4u);
    const auto j = json::parse(slurp(dir.file("out/report.json")));
    EXPECT_EQ(j["schema"], "hip-report/1");
    EXPECT_EQ(j["methods"][0]["method"], "hip");
    const auto curves = lines_of(dir.file("out/round_curves.csv"));
    EXPECT_EQ(curves.front(), "method,metric,round,n,excluded,mean,ci_low,ci_high");
    EXPECT_EQ(curves.size(), 1u + 2 * 3);
    const auto frontier = lines_of(dir.file("out/frontier.csv"));
    EXPECT_EQ(frontier.front(), "method,detector_id,round,semantic_mean,human_prob_mean");
    EXPECT_GE(frontier.size(), 2u);
    EXPECT_EQ(lines_of(dir.file("out/continuation.csv")).size(), 2u);
}

TEST(Report, EmptyTablesAreHeaderOnly) {
    TempDir dir;
    Report rep;
    (void)emit_report(rep, dir.file("empty"));
    EXPECT_EQ(lines_of(dir.file("empty/frontier.csv")),
              std::vector<std::string>{"method,detector_id,round,semantic_mean,human_prob_mean"});
    EXPECT_EQ(lines_of(dir.file("empty/continuation.csv")).size(), 1u);
}

TEST(Report, UnwritableDirectoryNamesThePath) {
    TempDir dir;
    const auto blocker = dir.file("file");
    { std::ofstream(blocker) << "x"; }
    const auto target = blocker + "/sub";
    try {
        (void)emit_report(Report{}, target);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "io_error");
        EXPECT_NE(std::string(e.what()).find(target), std::string::npos);
    }
}

TEST(Report, DetectorSubsetRestrictsTables) {
    auto t = scored_trajectory("a", {10, 9}, {0.1, 0.2});
    for (auto& r : t.rounds) r.detector_scores["other"] = 0.3;
    const std::vector<Trajectory> ts{t};
    const auto rep = build_report(ts, {}, CiOptions{}, {"other"});
    ASSERT_EQ(rep.methods.size(), 1u);
    ASSERT_EQ(rep.methods[0].curves.size(), 2u);
    EXPECT_EQ(rep.methods[0].curves[1].metric_id, "human_prob:other");
    EXPECT_EQ(rep.methods[0].frontiers.size(), 1u);
}
