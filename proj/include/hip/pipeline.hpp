#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <vector>

#include <json.hpp>

#include "hip/baselines.hpp"
#include "hip/clients/detector.hpp"
#include "hip/clients/generation.hpp"
#include "hip/clients/http_transport.hpp"
#include "hip/clients/judge.hpp"
#include "hip/clients/mocks.hpp"
#include "hip/config.hpp"
#include "hip/corpus.hpp"
#include "hip/evaluation/report.hpp"
#include "hip/hiploop.hpp"
#include "hip/jsonl.hpp"
#include "hip/log.hpp"
#include "hip/manifest.hpp"
#include "hip/pairing.hpp"
#include "hip/parallel.hpp"
#include "hip/prompting.hpp"

// Stage drivers behind the command-line tool. Each stage reads and writes
// JSONL files, records itself in the run manifest, and resumes interrupted
// work by skipping ids already present in its outputs.
namespace hip::pipeline {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Clients

// Builds service clients from the config. Offline mode (or adapter "mock")
// swaps each transport for the matching deterministic mock.
class ClientFactory {
public:
    ClientFactory(const PipelineConfig& cfg, bool offline) : cfg_(cfg), offline_(offline) {}

    std::unique_ptr<GenerationClient> generation(const std::optional<EndpointConfig>& configured, const std::string& role,
                                                 const std::string& mock_behavior) const {
        EndpointConfig e;
        if (configured) {
            e = *configured;
        } else if (offline_) {
            e.id = role;
            e.adapter = "mock";
        } else {
            throw Error("config_error", "endpoints." + role + " is not configured");
        }
        if (offline_ || e.adapter == "mock") {
            const auto behavior = e.options.value("behavior", mock_behavior);
            if (e.model_id.empty()) e.model_id = "mock-" + behavior;
            auto transport = std::make_shared<MockTransport>(mock::generator(mock::parse_generator_kind(behavior)));
            return std::make_unique<OpenAIGenerationClient>(mockify(e), transport);
        }
        if (e.adapter != "openai-completions" && e.adapter != "openai-chat")
            throw Error("config_error", "endpoint " + e.id + ": unknown generation adapter \"" + e.adapter + "\"");
        return std::make_unique<OpenAIGenerationClient>(e, std::make_shared<HttpTransport>());
    }

    std::unique_ptr<JudgeClient> judge() const {
        EndpointConfig e;
        if (cfg_.judge) {
            e = *cfg_.judge;
        } else if (offline_) {
            e.id = "judge";
            e.adapter = "mock";
        } else {
            throw Error("config_error", "endpoints.judge is not configured");
        }
        if (offline_ || e.adapter == "mock") {
            if (e.model_id.empty()) e.model_id = "mock-jaccard";
            auto transport = std::make_shared<MockTransport>(mock::judge({}));
            return std::make_unique<OpenAIJudgeClient>(mockify(e), transport);
        }
        return std::make_unique<OpenAIJudgeClient>(e, std::make_shared<HttpTransport>());
    }

    // Offline with no detectors configured: a GPTZero-shaped mock looking at
    // the last four tokens and a Pangram-shaped mock looking at the whole text.
    std::vector<std::unique_ptr<DetectorClient>> detectors() const {
        std::vector<EndpointConfig> eps = cfg_.detectors;
        if (eps.empty() && offline_) {
            EndpointConfig a;
            a.id = "mock-gptzero";
            a.adapter = "gptzero";
            a.options = {{"mock_window", 4}};
            EndpointConfig b;
            b.id = "mock-pangram";
            b.adapter = "pangram";
            b.options = {{"mock_window", 0}};
            eps = {a, b};
        }
        std::vector<std::unique_ptr<DetectorClient>> out;
        for (auto e : eps) {
            const bool mocked = offline_ || e.adapter == "mock";
            if (!mocked) {
                out.push_back(std::make_unique<HttpDetectorClient>(e, std::make_shared<HttpTransport>()));
                continue;
            }
            if (e.adapter == "mock") e.adapter = e.options.value("shape", std::string("generic"));
            const auto shape = mock::parse_detector_shape(e.adapter);
            if (shape == mock::DetectorShape::generic) {
                e.adapter = "generic";
                e.options["human_prob_pointer"] = "/human_prob";
                e.options["invert"] = false;
                e.options["text_field"] = "text";
            }
            const auto window = e.options.value("mock_window", std::size_t{0});
            auto transport = std::make_shared<MockTransport>(mock::detector(shape, window));
            out.push_back(std::make_unique<HttpDetectorClient>(mockify(e), transport));
        }
        return out;
    }

private:
    static EndpointConfig mockify(EndpointConfig e) {
        e.base_url = "mock://" + e.id;
        e.auth_env_var.clear();
        e.rate_limit = 1e9;
        e.retry.backoff = {std::chrono::milliseconds(0)};
        return e;
    }

    const PipelineConfig& cfg_;
    bool offline_;
};

inline std::vector<DetectorClient*> raw_pointers(const std::vector<std::unique_ptr<DetectorClient>>& v) {
    std::vector<DetectorClient*> out;
    for (const auto& d : v) out.push_back(d.get());
    return out;
}

// ---------------------------------------------------------------------------
// Stage bookkeeping

struct Context {
    PipelineConfig cfg;
    bool offline = false;
    std::size_t workers = 1;
    std::string manifest_path = "hip_manifest.json";
    std::stop_token stop;
};

struct StageOutcome {
    bool skipped = false;
    json summary = json::object();
};

struct StageInput {
    std::string path;
    std::string produced_by;  // stage to suggest when the file is missing
};

inline std::map<std::string, std::string> digest_inputs(const std::vector<StageInput>& inputs) {
    std::map<std::string, std::string> out;
    for (const auto& in : inputs) {
        if (!std::filesystem::exists(in.path)) {
            std::string hint = in.produced_by.empty() ? "" : "; run `" + in.produced_by + "` first";
            throw Error("dependency_missing", "input " + in.path + " does not exist" + hint);
        }
        out[in.path] = file_sha256(in.path);
    }
    return out;
}

// Shared skeleton: dependency check, no-op detection, resume decision,
// manifest updates. `body(resume)` does the work and returns a summary.
inline StageOutcome run_stage(const Context& ctx, const std::string& name, const json& params,
                              const std::vector<StageInput>& inputs, const std::vector<std::string>& outputs,
                              const std::function<json(bool resume)>& body) {
    const auto digests = digest_inputs(inputs);
    const auto params_hash = sha256_hex(json{{"config", ctx.cfg.hash()}, {"offline", ctx.offline}, {"params", params}}.dump());
    auto manifest = RunManifest::load_or_create(ctx.manifest_path, ctx.cfg.hash(), template_hash(ctx.cfg.format_mode),
                                                ctx.cfg.seed);

    if (manifest.up_to_date(name, params_hash, digests)) {
        log::info("stage_up_to_date", {{"stage", name}});
        return {true, manifest.stages[name].summary};
    }

    bool resume = true;
    if (auto it = manifest.stages.find(name); it != manifest.stages.end()) {
        resume = it->second.params_hash == params_hash && it->second.inputs == digests;
    }

    StageRecord rec;
    rec.params_hash = params_hash;
    rec.inputs = digests;
    rec.started_at = log::utc_timestamp();
    manifest.stages[name] = rec;
    manifest.save(ctx.manifest_path);
    log::info("stage_start", {{"stage", name}, {"resume", resume}});

    json summary = body(resume);

    rec.summary = summary;
    for (const auto& out : outputs)
        if (std::filesystem::exists(out)) rec.outputs[out] = file_sha256(out);
    rec.finished_at = log::utc_timestamp();
    rec.complete = !ctx.stop.stop_requested();
    manifest.stages[name] = rec;
    manifest.save(ctx.manifest_path);
    log::info(rec.complete ? "stage_done" : "stage_interrupted", {{"stage", name}, {"summary", summary}});
    if (!rec.complete) throw Error("interrupted", name);
    return {false, summary};
}

inline std::uint64_t stage_seed(const Context& ctx, const std::string& stage) { return derive_seed(ctx.cfg.seed, stage); }

// ---------------------------------------------------------------------------
// Corpus IO

// Reads passages; malformed records and repeated ids are reported through
// `reject` (stage "parse") and skipped.
inline std::vector<Passage> read_passages(const std::string& path, const RejectionSink& reject = {}) {
    std::vector<Passage> out;
    std::set<std::string> ids;
    jsonl::for_each_record(
        path,
        [&](std::size_t line, const json& j) {
            try {
                auto p = j.get<Passage>();
                if (!ids.insert(p.id).second) {
                    if (reject) reject({p.id, "parse", "duplicate_id"});
                    return;
                }
                out.push_back(std::move(p));
            } catch (const std::exception&) {
                std::string id = j.is_object() && j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                                                          : "line:" + std::to_string(line);
                if (reject) reject({id, "parse", "malformed_record"});
            }
        },
        [&](std::size_t line, const std::string&) {
            if (reject) reject({"line:" + std::to_string(line), "parse", "malformed_record"});
        });
    return out;
}

template <class T>
std::vector<T> read_records(const std::string& path) {
    std::vector<T> out;
    jsonl::for_each_record(path, [&](std::size_t line, const json& j) {
        try {
            out.push_back(j.get<T>());
        } catch (const json::exception& e) {
            throw Error("malformed_record", path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    return out;
}

inline jsonl::Writer open_output(const std::string& path, bool resume) {
    if (resume) jsonl::repair_tail(path);
    return jsonl::Writer(path, resume ? jsonl::Writer::Mode::append : jsonl::Writer::Mode::truncate);
}

// ---------------------------------------------------------------------------
// Stages

struct PrepareArgs {
    std::string in;
    std::string out;
    std::string rejections;
    std::optional<Origin> origin;
};

inline StageOutcome prepare_data(const Context& ctx, const PrepareArgs& a) {
    const json params{{"out", a.out}, {"rejections", a.rejections},
                      {"origin", a.origin ? json(to_string(*a.origin)) : json(nullptr)}};
    return run_stage(ctx, "prepare-data", params, {{a.in, ""}}, {a.out, a.rejections}, [&](bool) {
        jsonl::Writer rejections(a.rejections, jsonl::Writer::Mode::truncate);
        std::map<std::string, std::size_t> reasons;
        RejectionSink sink = [&](const Rejection& r) {
            ++reasons[r.reason];
            rejections.write(r);
        };
        auto raw = read_passages(a.in, sink);
        if (a.origin) {
            std::erase_if(raw, [&](const Passage& p) {
                if (p.origin == *a.origin) return false;
                sink({p.id, "filter", "wrong_origin"});
                return true;
            });
        }
        PrepareStats stats;
        const auto clean = prepare_corpus(raw, ctx.cfg.corpus, sink, &stats);
        jsonl::Writer out(a.out, jsonl::Writer::Mode::truncate);
        for (const auto& p : clean) out.write(p);
        return json{{"read", stats.input},
                    {"after_filter", stats.after_filter},
                    {"after_dedup", stats.after_dedup},
                    {"clean", stats.clean},
                    {"rejections", reasons}};
    });
}

struct PairArgs {
    std::string in;
    std::string out;
    std::string drops;
};

inline StageOutcome make_pairs(const Context& ctx, const PairArgs& a) {
    const json params{{"out", a.out}, {"drops", a.drops}};
    return run_stage(ctx, "make-pairs", params, {{a.in, "prepare-data"}}, {a.out, a.drops}, [&](bool resume) {
        ClientFactory factory(ctx.cfg, ctx.offline);
        const auto& paraphraser_ep = ctx.cfg.pair_paraphraser ? ctx.cfg.pair_paraphraser : ctx.cfg.generator;
        auto paraphraser = factory.generation(paraphraser_ep, "pair_paraphraser", "append-marker");
        auto judge = factory.judge();

        const auto corpus = read_passages(a.in);
        auto pairs_out = open_output(a.out, resume);
        auto drops_out = open_output(a.drops, resume);
        std::set<std::string> done;
        if (resume) {
            done = jsonl::read_keys(a.out, "pair_id");
            done.merge(jsonl::read_keys(a.drops, "id"));
        }
        std::vector<Passage> pending;
        for (const auto& p : corpus)
            if (!done.contains(p.id)) pending.push_back(p);

        const auto seed = stage_seed(ctx, "make-pairs");
        std::size_t n_pairs = 0, attempts = 0;
        std::map<std::string, std::size_t> reasons;
        parallel_ordered(
            std::span<const Passage>(pending), ctx.workers,
            [&](const Passage& p) { return build_pair(p, *paraphraser, *judge, ctx.cfg.pairing, seed); },
            [&](std::size_t, PairOutcome&& o) {
                if (auto* pair = std::get_if<PairedExample>(&o)) {
                    attempts += pair->attempts_used;
                    pairs_out.write(*pair);
                    ++n_pairs;
                } else {
                    const auto& d = std::get<PairDrop>(o);
                    attempts += d.attempts;
                    ++reasons[d.reason];
                    drops_out.write(d);
                }
            },
            ctx.stop);
        return json{{"corpus", corpus.size()},
                    {"skipped_done", corpus.size() - pending.size()},
                    {"pairs", n_pairs},
                    {"attempts", attempts},
                    {"drops", reasons},
                    {"retry_budget", ctx.cfg.pairing.retry_budget},
                    {"paraphraser_id", paraphraser->model_id()}};
    });
}

struct ExportArgs {
    std::string in;
    std::string out;
    std::optional<FormatMode> mode;
};

inline StageOutcome export_train(const Context& ctx, const ExportArgs& a) {
    const auto mode = a.mode.value_or(ctx.cfg.format_mode);
    const json params{{"out", a.out}, {"mode", to_string(mode)}};
    return run_stage(ctx, "export-train", params, {{a.in, "make-pairs"}}, {a.out, a.out + ".manifest.json"}, [&](bool) {
        const auto pairs = read_records<PairedExample>(a.in);
        const auto res = export_training_jsonl(pairs, mode, a.out);
        return json{{"lines", res.count}, {"mode", to_string(mode)}, {"template_hash", template_hash(mode)}};
    });
}

inline std::vector<Passage> load_eval_set(const Context& ctx, const std::string& path, std::optional<Origin> origin) {
    auto corpus = read_passages(path);
    if (origin) std::erase_if(corpus, [&](const Passage& p) { return p.origin != *origin; });
    // Human sources carry a "_human" category suffix; both origins draw from
    // the same category list.
    for (auto& p : corpus) {
        p.text = text::normalize_text(p.text);
        if (p.source_category.ends_with("_human")) p.source_category.resize(p.source_category.size() - 6);
    }
    std::erase_if(corpus, [](const Passage& p) { return p.text.empty(); });
    return build_eval_set(corpus, ctx.cfg.per_category, ctx.cfg.categories);
}

struct TrajectoryArgs {
    std::string in;
    std::string out;
    std::optional<std::size_t> rounds;
    std::string method = "hip";  // hip | simple_paraphrase | homoglyph
    std::optional<Origin> origin = Origin::ai;
};

// run-hip and run-baseline: build the evaluation set, produce one scored
// trajectory per passage, append in input order.
inline StageOutcome run_trajectories(const Context& ctx, const TrajectoryArgs& a) {
    const std::size_t rounds = a.method == "homoglyph" ? 1 : a.rounds.value_or(ctx.cfg.rounds);
    const std::string stage = a.method == "hip" ? "run-hip" : "run-baseline:" + a.method;
    if (a.method != "hip" && a.method != "simple_paraphrase" && a.method != "homoglyph")
        throw Error("config_error", "unknown method \"" + a.method + "\"");
    const json params{{"out", a.out}, {"rounds", rounds}, {"method", a.method},
                      {"origin", a.origin ? json(to_string(*a.origin)) : json(nullptr)}};

    return run_stage(ctx, stage, params, {{a.in, ""}}, {a.out}, [&](bool resume) {
        ClientFactory factory(ctx.cfg, ctx.offline);
        std::unique_ptr<GenerationClient> generator;
        if (a.method == "hip") generator = factory.generation(ctx.cfg.generator, "generator", "append-marker");
        if (a.method == "simple_paraphrase") {
            const auto& ep = ctx.cfg.baseline ? ctx.cfg.baseline : ctx.cfg.generator;
            generator = factory.generation(ep, "baseline", "append-marker");
        }
        auto judge = factory.judge();
        auto detectors = factory.detectors();
        const auto dets = raw_pointers(detectors);
        DetectorCache cache(ctx.cfg.cache_path);

        const auto eval = load_eval_set(ctx, a.in, a.origin);
        auto out = open_output(a.out, resume);
        const auto done = resume ? jsonl::read_keys(a.out, "passage_id") : std::set<std::string>{};
        std::vector<Passage> pending;
        for (const auto& p : eval)
            if (!done.contains(p.id)) pending.push_back(p);

        const auto seed = stage_seed(ctx, stage);
        std::size_t truncated = 0, judge_failures = 0, detector_failures = 0;
        parallel_ordered(
            std::span<const Passage>(pending), ctx.workers,
            [&](const Passage& p) {
                GenerationParams params = ctx.cfg.generation;
                params.seed = derive_seed(seed, p.id);
                Trajectory t;
                if (a.method == "hip") {
                    t = run_hip(p.text, *generator, rounds, params, ctx.cfg.format_mode);
                } else if (a.method == "simple_paraphrase") {
                    t = run_simple_paraphrase(p.text, *generator, rounds, params);
                } else {
                    t = run_homoglyph(p.text, HomoglyphMap{ctx.cfg.confusables, ctx.cfg.homoglyph_rate, *params.seed});
                }
                t.passage_id = p.id;
                const auto stats = score_trajectory(t, judge.get(), dets, cache);
                return std::make_pair(std::move(t), stats);
            },
            [&](std::size_t, std::pair<Trajectory, ScoreStats>&& r) {
                truncated += r.first.truncated ? 1 : 0;
                judge_failures += r.second.judge_failures;
                detector_failures += r.second.detector_failures;
                out.write(r.first);
            },
            ctx.stop);
        return json{{"eval_set", eval.size()},
                    {"skipped_done", eval.size() - pending.size()},
                    {"written", pending.size()},
                    {"rounds", rounds},
                    {"truncated", truncated},
                    {"judge_failures", judge_failures},
                    {"detector_failures", detector_failures}};
    });
}

struct ContinuationArgs {
    std::string in;
    std::string out;
};

// Prefixes: the evaluation-set rule applied separately to human and AI
// passages, human first.
inline StageOutcome eval_continuation(const Context& ctx, const ContinuationArgs& a) {
    const json params{{"out", a.out}};
    return run_stage(ctx, "eval-continuation", params, {{a.in, ""}}, {a.out}, [&](bool resume) {
        ClientFactory factory(ctx.cfg, ctx.offline);
        const auto& ep = ctx.cfg.continuation ? ctx.cfg.continuation : ctx.cfg.generator;
        auto generator = factory.generation(ep, "continuation", "continue");
        auto detectors = factory.detectors();
        const auto dets = raw_pointers(detectors);
        DetectorCache cache(ctx.cfg.cache_path);

        auto prefixes = load_eval_set(ctx, a.in, Origin::human);
        const auto ai = load_eval_set(ctx, a.in, Origin::ai);
        prefixes.insert(prefixes.end(), ai.begin(), ai.end());

        auto out = open_output(a.out, resume);
        const auto done = resume ? jsonl::read_keys(a.out, "prefix_id") : std::set<std::string>{};
        std::vector<Passage> pending;
        for (const auto& p : prefixes)
            if (!done.contains(p.id)) pending.push_back(p);

        GenerationParams params = ctx.cfg.generation;
        params.stop_sequences.clear();
        params.seed = stage_seed(ctx, "eval-continuation");
        parallel_ordered(
            std::span<const Passage>(pending), ctx.workers,
            [&](const Passage& p) { return continue_prefix(p, *generator, dets, cache, params); },
            [&](std::size_t, ContinuationRecord&& r) { out.write(r); }, ctx.stop);
        return json{{"prefixes", prefixes.size()}, {"skipped_done", prefixes.size() - pending.size()},
                    {"model_id", generator->model_id()}};
    });
}

struct ReportArgs {
    std::vector<std::string> trajectories;
    std::string continuation;
    std::string out_dir;
    std::set<std::string> detectors;
};

inline StageOutcome report(const Context& ctx, const ReportArgs& a) {
    if (a.trajectories.empty()) throw Error("dependency_missing", "no trajectory file given; run `run-hip` first");
    std::vector<StageInput> inputs;
    for (const auto& t : a.trajectories) inputs.push_back({t, "run-hip"});
    if (!a.continuation.empty()) inputs.push_back({a.continuation, "eval-continuation"});
    const std::vector<std::string> outputs{a.out_dir + "/report.json", a.out_dir + "/round_curves.csv",
                                           a.out_dir + "/frontier.csv", a.out_dir + "/continuation.csv"};
    const json params{{"out_dir", a.out_dir}, {"detectors", a.detectors}};
    return run_stage(ctx, "report", params, inputs, outputs, [&](bool) {
        std::vector<Trajectory> trajs;
        for (const auto& path : a.trajectories) {
            auto part = read_records<Trajectory>(path);
            trajs.insert(trajs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        }
        std::vector<ContinuationRecord> conts;
        if (!a.continuation.empty()) conts = read_records<ContinuationRecord>(a.continuation);
        const auto rep = build_report(trajs, conts, ctx.cfg.ci, a.detectors);
        const auto files = emit_report(rep, a.out_dir);
        return json{{"trajectories", trajs.size()}, {"continuations", conts.size()}, {"files", files}};
    });
}

}  // namespace hip::pipeline
