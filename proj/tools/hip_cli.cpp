// hip: command-line driver for the corpus, pairing, paraphrase-loop and
// evaluation stages.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <stop_token>
#include <thread>

#include <CLI11.hpp>

#include "hip/pipeline.hpp"

namespace {

using hip::pipeline::Context;

std::stop_source g_stop;
volatile std::sig_atomic_t g_signalled = 0;

extern "C" void on_signal(int) { g_signalled = 1; }

int exit_code_for(const std::string& code) {
    if (code == "config_error" || code == "missing_credential") return 2;
    if (code == "dependency_missing") return 3;
    if (code == "endpoint_unavailable" || code == "detector_unavailable" || code == "judge_unavailable" ||
        code == "protocol_error" || code == "judge_parse_failure")
        return 4;
    if (code == "interrupted") return 130;
    return 1;
}

std::optional<hip::Origin> origin_flag(const std::string& s) {
    if (s.empty() || s == "any") return std::nullopt;
    return hip::parse_origin(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Paraphrase-loop evasion pipeline: data prep, pairing, rounds, evaluation"};
    app.require_subcommand(1);

    std::string config_path = "hip.json";
    std::string manifest_path = "hip_manifest.json";
    bool offline = false;
    bool quiet = false;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    std::string cache_path;
    app.add_option("-c,--config", config_path, "Pipeline config (JSON)");
    app.add_option("--manifest", manifest_path, "Run manifest path");
    app.add_flag("--offline", offline, "Replace every service client with its deterministic mock");
    app.add_option("-j,--workers", workers, "Worker threads (default: config, then processor count)");
    app.add_option("--seed", seed, "Master seed (overrides config)");
    app.add_option("--cache", cache_path, "Detector cache file (overrides config)");
    app.add_flag("-q,--quiet", quiet, "Only log errors");

    hip::pipeline::PrepareArgs prep;
    std::string prep_origin;
    auto* c_prep = app.add_subcommand("prepare-data", "Normalize, filter, deduplicate and screen a raw corpus");
    c_prep->add_option("--in", prep.in, "Raw passages (JSONL)")->required();
    c_prep->add_option("--out", prep.out, "Clean passages (JSONL)")->required();
    c_prep->add_option("--rejections", prep.rejections, "Rejection log (default: <out>.rejections.jsonl)");
    c_prep->add_option("--origin", prep_origin, "Keep only this origin: human, ai or any")->default_val("any");

    hip::pipeline::PairArgs pairs;
    auto* c_pairs = app.add_subcommand("make-pairs", "Build (AI paraphrase, human target) training pairs");
    c_pairs->add_option("--in", pairs.in, "Clean human passages (JSONL)")->required();
    c_pairs->add_option("--out", pairs.out, "Paired examples (JSONL)")->required();
    c_pairs->add_option("--drops", pairs.drops, "Drop log (default: <out>.drops.jsonl)");

    hip::pipeline::ExportArgs exp;
    std::string exp_mode;
    auto* c_export = app.add_subcommand("export-train", "Render pairs into fine-tuning JSONL");
    c_export->add_option("--in", exp.in, "Paired examples (JSONL)")->required();
    c_export->add_option("--out", exp.out, "Training file (JSONL)")->required();
    c_export->add_option("--format-mode", exp_mode, "tagged or chat_template (default: config)");

    hip::pipeline::TrajectoryArgs hip_args;
    std::optional<std::size_t> hip_rounds;
    std::string hip_origin = "ai";
    auto* c_hip = app.add_subcommand("run-hip", "Run the iterative paraphrase loop and score every round");
    c_hip->add_option("--in", hip_args.in, "Passage corpus (JSONL)")->required();
    c_hip->add_option("--out", hip_args.out, "Trajectories (JSONL)")->required();
    c_hip->add_option("--rounds", hip_rounds, "Rounds N (default: config)");
    c_hip->add_option("--origin", hip_origin, "Passage origin to evaluate: human, ai or any")->default_val("ai");

    hip::pipeline::TrajectoryArgs base_args;
    std::optional<std::size_t> base_rounds;
    std::string base_origin = "ai";
    std::string base_method;
    auto* c_base = app.add_subcommand("run-baseline", "Run a comparison method over the evaluation set");
    c_base->add_option("--method", base_method, "simple or homoglyph")
        ->required()
        ->check(CLI::IsMember({"simple", "homoglyph"}));
    c_base->add_option("--in", base_args.in, "Passage corpus (JSONL)")->required();
    c_base->add_option("--out", base_args.out, "Trajectories (JSONL)")->required();
    c_base->add_option("--rounds", base_rounds, "Rounds for the simple paraphraser (default: config)");
    c_base->add_option("--origin", base_origin, "Passage origin to evaluate: human, ai or any")->default_val("ai");

    hip::pipeline::ContinuationArgs cont;
    auto* c_cont = app.add_subcommand("eval-continuation", "Continue first sentences and score the continuations");
    c_cont->add_option("--in", cont.in, "Passage corpus with human and AI passages (JSONL)")->required();
    c_cont->add_option("--out", cont.out, "Continuation records (JSONL)")->required();

    hip::pipeline::ReportArgs rep;
    std::vector<std::string> rep_detectors;
    auto* c_rep = app.add_subcommand("report", "Aggregate trajectories and continuations into tables");
    c_rep->add_option("--trajectories", rep.trajectories, "Trajectory files (JSONL)");
    c_rep->add_option("--continuation", rep.continuation, "Continuation records (JSONL)");
    c_rep->add_option("--out-dir", rep.out_dir, "Output directory")->required();
    c_rep->add_option("--detectors", rep_detectors, "Restrict to these detector ids")->delimiter(',');

    CLI11_PARSE(app, argc, argv);
    hip::log::quiet() = quiet;

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::jthread watcher([](std::stop_token st) {
        while (!st.stop_requested()) {
            if (g_signalled) {
                hip::log::warn("interrupt_received", {{"note", "finishing in-flight items"}});
                g_stop.request_stop();
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    });

    try {
        Context ctx;
        ctx.cfg = hip::load_config(config_path);
        if (seed) {
            ctx.cfg.seed = *seed;
            ctx.cfg.source["seed"] = *seed;
            ctx.cfg.ci.seed = hip::derive_seed(*seed, "evaluation");
        }
        if (!cache_path.empty()) ctx.cfg.cache_path = cache_path;
        ctx.offline = offline;
        ctx.workers = workers.value_or(ctx.cfg.workers);
        if (ctx.workers == 0) ctx.workers = hip::default_workers();
        ctx.manifest_path = manifest_path;
        ctx.stop = g_stop.get_token();

        hip::pipeline::StageOutcome outcome;
        if (*c_prep) {
            if (prep.rejections.empty()) prep.rejections = prep.out + ".rejections.jsonl";
            prep.origin = origin_flag(prep_origin);
            outcome = hip::pipeline::prepare_data(ctx, prep);
        } else if (*c_pairs) {
            if (pairs.drops.empty()) pairs.drops = pairs.out + ".drops.jsonl";
            outcome = hip::pipeline::make_pairs(ctx, pairs);
        } else if (*c_export) {
            if (!exp_mode.empty()) exp.mode = hip::parse_format_mode(exp_mode);
            outcome = hip::pipeline::export_train(ctx, exp);
        } else if (*c_hip) {
            hip_args.rounds = hip_rounds;
            hip_args.method = "hip";
            hip_args.origin = origin_flag(hip_origin);
            outcome = hip::pipeline::run_trajectories(ctx, hip_args);
        } else if (*c_base) {
            base_args.rounds = base_rounds;
            base_args.method = base_method == "simple" ? "simple_paraphrase" : "homoglyph";
            base_args.origin = origin_flag(base_origin);
            outcome = hip::pipeline::run_trajectories(ctx, base_args);
        } else if (*c_cont) {
            outcome = hip::pipeline::eval_continuation(ctx, cont);
        } else if (*c_rep) {
            rep.detectors = {rep_detectors.begin(), rep_detectors.end()};
            outcome = hip::pipeline::report(ctx, rep);
        }
        std::cout << nlohmann::json{{"skipped", outcome.skipped}, {"summary", outcome.summary}}.dump() << '\n';
        return 0;
    } catch (const hip::Error& e) {
        hip::log::error(e.code(), {{"detail", e.what()}});
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        hip::log::error("unexpected", {{"detail", e.what()}});
        return 1;
    }
}
