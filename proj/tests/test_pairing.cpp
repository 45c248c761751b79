#include <gtest/gtest.h>

#include <map>
#include <mutex>
#include <random>

#include "hip/pairing.hpp"
#include "support.hpp"

using namespace hip;
using namespace hip::testing;
using nlohmann::json;

namespace {

// Chat handler that answers the n-th request for a given passage with
// script(passage, n), n counted from 1.
MockTransport::Handler scripted(std::function<std::string(const std::string&, int)> script) {
    auto counts = std::make_shared<std::map<std::string, int>>();
    auto mu = std::make_shared<std::mutex>();
    return [=](const HttpRequest& req) {
        const auto body = json::parse(req.body);
        std::string user;
        for (const auto& m : body["messages"])
            if (m["role"] == "user") user = m["content"];
        int n;
        {
            std::lock_guard lock(*mu);
            n = ++(*counts)[user];
        }
        return HttpResponse{200, mock::chat_reply(script(user, n)).dump(), ""};
    };
}

// Attempts before `pass_on` leak a structural tag; from then on the passage
// comes back unchanged.
MockGenerator fails_until(int pass_on) {
    return mock_generator(scripted([pass_on](const std::string& p, int n) {
        return n < pass_on ? p + " </target_text>" : p;
    }));
}

std::vector<Passage> corpus(std::size_t n, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    std::vector<Passage> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(make_passage("h" + std::to_string(i), "news_human", Origin::human, synthetic_text(rng, 60)));
    return out;
}

}  // namespace

TEST(AnomalyFree, Examples) {
    PairGenConfig cfg;
    std::mt19937_64 rng(2);
    const auto target = synthetic_text(rng, 100);
    const auto faithful = synthetic_text(rng, 105);
    EXPECT_TRUE(anomaly_free(faithful, target, cfg));

    auto leak = anomaly_free(faithful + " </target_text>", target, cfg);
    EXPECT_EQ(leak.reason, "tag_leak");

    const auto triple = synthetic_text(rng, 300);
    EXPECT_EQ(anomaly_free(triple, target, cfg).reason, "length_ratio");
    EXPECT_EQ(anomaly_free(synthetic_text(rng, 40), target, cfg).reason, "length_ratio");

    std::string loop;
    for (int i = 0; i < 25; ++i) loop += "one two three four ";
    EXPECT_EQ(anomaly_free(loop, loop, cfg).reason, "ngram_repetition");
}

TEST(SemanticPreservation, Examples) {
    PairGenConfig cfg;
    auto jac = mock_judge();
    auto r = semantic_preservation_ok("same words here", "same words here", *jac.client, cfg);
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.score, 10);

    auto four = mock_judge({mock::JudgeBehavior::Kind::fixed, 4, ""});
    r = semantic_preservation_ok("a", "b", *four.client, cfg);
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(r.score, 4);

    cfg.min_judge_score = 0;
    for (int s = 0; s <= 10; ++s) {
        auto j = mock_judge({mock::JudgeBehavior::Kind::fixed, s, ""});
        EXPECT_TRUE(semantic_preservation_ok("a", "b", *j.client, cfg).ok);
    }
}

TEST(SemanticPreservation, JudgeOutageSurfacesAsUnavailable) {
    PairGenConfig cfg;
    auto bad = mock_judge({mock::JudgeBehavior::Kind::reply, 0, "no idea"}, 1);
    try {
        (void)semantic_preservation_ok("a", "b", *bad.client, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "judge_unavailable");
    }
}

TEST(BuildPair, AcceptedOnThirdAttemptWithBudgetThree) {
    PairGenConfig cfg;
    cfg.retry_budget = 3;
    auto gen = fails_until(3);
    auto judge = mock_judge();
    const auto ps = corpus(1);
    const auto out = build_pair(ps[0], *gen.client, *judge.client, cfg, 42);
    ASSERT_TRUE(std::holds_alternative<PairedExample>(out));
    const auto& pair = std::get<PairedExample>(out);
    EXPECT_EQ(pair.attempts_used, 3u);
    EXPECT_EQ(pair.human_target, ps[0].text);
    EXPECT_EQ(pair.pair_id, ps[0].id);
    EXPECT_EQ(gen.transport->call_count(), 3u);
}

TEST(BuildPair, DroppedWhenBudgetRunsOut) {
    PairGenConfig cfg;
    cfg.retry_budget = 2;
    auto gen = fails_until(3);
    auto judge = mock_judge();
    const auto out = build_pair(corpus(1)[0], *gen.client, *judge.client, cfg, 42);
    ASSERT_TRUE(std::holds_alternative<PairDrop>(out));
    EXPECT_EQ(std::get<PairDrop>(out).reason, "budget_exhausted");
    EXPECT_EQ(std::get<PairDrop>(out).attempts, 2u);
    EXPECT_EQ(gen.transport->call_count(), 2u);
}

TEST(BuildPair, JudgeRejectionConsumesAttempts) {
    PairGenConfig cfg;
    auto gen = mock_generator(mock::GeneratorKind::identity);
    auto judge = mock_judge({mock::JudgeBehavior::Kind::fixed, 3, ""});
    const auto out = build_pair(corpus(1)[0], *gen.client, *judge.client, cfg, 1);
    ASSERT_TRUE(std::holds_alternative<PairDrop>(out));
    EXPECT_EQ(std::get<PairDrop>(out).attempts, cfg.retry_budget);
    EXPECT_EQ(judge.transport->call_count(), cfg.retry_budget);
}

TEST(BuildPair, GenerationFailureDropsPassage) {
    PairGenConfig cfg;
    auto t = std::make_shared<MockTransport>(mock::failing(500));
    OpenAIGenerationClient gen(mock_endpoint("g", "mock", 2), t);
    auto judge = mock_judge();
    const auto out = build_pair(corpus(1)[0], gen, *judge.client, cfg, 1);
    ASSERT_TRUE(std::holds_alternative<PairDrop>(out));
    EXPECT_EQ(std::get<PairDrop>(out).reason, "generation_failed");
}

TEST(BuildPair, AttemptSeedsDifferAndAreReproducible) {
    PairGenConfig cfg;
    auto gen = fails_until(3);
    auto judge = mock_judge();
    const auto p = corpus(1)[0];
    (void)build_pair(p, *gen.client, *judge.client, cfg, 9);
    std::set<std::uint64_t> seeds;
    for (const auto& e : gen.transport->log()) seeds.insert(json::parse(e.request.body)["seed"].get<std::uint64_t>());
    EXPECT_EQ(seeds.size(), 3u);
    EXPECT_TRUE(seeds.contains(derive_seed(9, p.id + "#1")));
}

TEST(BuildPairs, AlwaysPassMocksPairEveryPassageOnce) {
    PairGenConfig cfg;
    auto gen = mock_generator(mock::GeneratorKind::append_marker);
    auto judge = mock_judge();
    const auto ps = corpus(16);
    const auto res = build_pairs(ps, *gen.client, *judge.client, cfg, 5, 4);
    ASSERT_EQ(res.pairs.size(), 16u);
    EXPECT_TRUE(res.drops.empty());
    for (std::size_t i = 0; i < res.pairs.size(); ++i) {
        EXPECT_EQ(res.pairs[i].pair_id, ps[i].id);
        EXPECT_EQ(res.pairs[i].attempts_used, 1u);
    }
    EXPECT_EQ(res.attempts, 16u);
}

TEST(BuildPairs, EmittedPairsSatisfyGatesAndAttemptBound) {
    PairGenConfig cfg;
    // Mixed behaviour: some passages pass at once, some late, some never.
    auto gen = mock_generator(scripted([](const std::string& p, int n) {
        const auto h = std::hash<std::string>{}(p) % 4;
        if (h == 0) return p;
        if (h == 1) return n >= 2 ? p + " extra" : p + " </source_text>";
        if (h == 2) return std::string("short");
        return p + " " + p + " " + p;
    }));
    auto judge = mock_judge();
    const auto ps = corpus(40, 3);
    const auto res = build_pairs(ps, *gen.client, *judge.client, cfg, 5, 3);
    EXPECT_EQ(res.pairs.size() + res.drops.size(), ps.size());
    EXPECT_LE(res.attempts, cfg.retry_budget * ps.size());
    for (const auto& pair : res.pairs) {
        EXPECT_TRUE(anomaly_free(pair.ai_source, pair.human_target, cfg));
        EXPECT_GE(pair.judge_score, cfg.min_judge_score);
        EXPECT_LE(pair.attempts_used, cfg.retry_budget);
    }
    for (const auto& d : res.drops) EXPECT_EQ(d.reason, "budget_exhausted");
}

TEST(BuildPairs, OutputIsIdenticalAcrossRunsAndWorkerCounts) {
    PairGenConfig cfg;
    const auto ps = corpus(24, 7);
    std::vector<std::string> dumps;
    for (std::size_t workers : {1u, 4u, 8u}) {
        auto gen = mock_generator(mock::GeneratorKind::append_marker);
        auto judge = mock_judge();
        const auto res = build_pairs(ps, *gen.client, *judge.client, cfg, 11, workers);
        dumps.push_back(json(res.pairs).dump());
    }
    EXPECT_EQ(dumps[0], dumps[1]);
    EXPECT_EQ(dumps[0], dumps[2]);
}
