#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hip/baselines.hpp"
#include "hip/clients/types.hpp"
#include "hip/corpus.hpp"
#include "hip/evaluation/evaluation.hpp"
#include "hip/hash.hpp"
#include "hip/hiploop.hpp"
#include "hip/pairing.hpp"
#include "hip/prompting.hpp"

namespace hip {

// Whole-pipeline configuration, read from one JSON file. Every section and
// key is optional; missing values take the library defaults. Credentials are
// never part of the file, only environment variable names.
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::size_t workers = 0;  // 0: one per hardware thread
    std::string cache_path = "detector_cache.jsonl";

    CorpusFilterConfig corpus;
    PairGenConfig pairing;
    GenerationParams generation;
    std::size_t rounds = kDefaultRounds;
    FormatMode format_mode = FormatMode::tagged;
    std::size_t per_category = kDefaultPerCategory;
    std::vector<std::string> categories = default_categories();
    CiOptions ci;
    double homoglyph_rate = 0.5;
    std::map<char32_t, char32_t> confusables = default_confusables();

    std::optional<EndpointConfig> generator;
    std::optional<EndpointConfig> pair_paraphraser;
    std::optional<EndpointConfig> continuation;
    std::optional<EndpointConfig> baseline;
    std::optional<EndpointConfig> judge;
    std::vector<EndpointConfig> detectors;

    nlohmann::json source = nlohmann::json::object();

    /// SHA-256 of the canonical (key-sorted) config document.
    [[nodiscard]] std::string hash() const { return sha256_hex(source.dump()); }

    void validate() const {
        corpus.validate();
        pairing.validate();
        generation.validate();
        if (!(ci.level > 0.0 && ci.level < 1.0)) throw Error("config_error", "evaluation.ci_level must be in (0,1)");
        if (ci.resamples == 0) throw Error("config_error", "evaluation.resamples must be >= 1");
        if (!(homoglyph_rate >= 0.0 && homoglyph_rate <= 1.0))
            throw Error("config_error", "baselines.homoglyph_rate must be in [0,1]");
        HomoglyphMap{confusables, homoglyph_rate, 0}.validate();
        std::set<std::string> ids;
        for (const auto& d : detectors)
            if (!ids.insert(d.id).second) throw Error("config_error", "duplicate detector id " + d.id);
    }
};

namespace detail {

inline char32_t single_code_point(const std::string& s, const char* what) {
    const auto cps = text::utf8_decode(s);
    if (cps.size() != 1) throw Error("config_error", std::string(what) + " must be a single character: \"" + s + "\"");
    return cps[0];
}

template <class T>
void read_into(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& root) {
    using detail::read_into;
    PipelineConfig c;
    if (!root.is_object()) throw Error("config_error", "config root must be an object");
    c.source = root;
    try {
        read_into(root, "seed", c.seed);
        read_into(root, "workers", c.workers);
        read_into(root, "cache_path", c.cache_path);

        if (root.contains("corpus")) {
            const auto& j = root["corpus"];
            if (j.contains("category_allowlist"))
                c.corpus.category_allowlist = j["category_allowlist"].get<std::set<std::string>>();
            read_into(j, "min_words", c.corpus.min_words);
            read_into(j, "max_words", c.corpus.max_words);
            read_into(j, "min_printable_ratio", c.corpus.min_printable_ratio);
            read_into(j, "near_dup_jaccard_threshold", c.corpus.near_dup_jaccard_threshold);
            read_into(j, "shingle_size", c.corpus.shingle_size);
            read_into(j, "boilerplate_markers", c.corpus.boilerplate_markers);
        }
        if (root.contains("pairing")) {
            const auto& j = root["pairing"];
            read_into(j, "retry_budget", c.pairing.retry_budget);
            read_into(j, "min_judge_score", c.pairing.min_judge_score);
            if (j.contains("length_ratio_bounds")) {
                const auto b = j["length_ratio_bounds"].get<std::vector<double>>();
                if (b.size() != 2) throw Error("config_error", "pairing.length_ratio_bounds needs two values");
                c.pairing.length_ratio_low = b[0];
                c.pairing.length_ratio_high = b[1];
            }
            read_into(j, "forbidden_substrings", c.pairing.forbidden_substrings);
            read_into(j, "paraphrase_instruction", c.pairing.paraphrase_instruction);
        }
        if (root.contains("generation")) c.generation = root["generation"].get<GenerationParams>();
        c.pairing.params.temperature = c.generation.temperature;
        c.pairing.params.top_p = c.generation.top_p;
        c.pairing.params.max_tokens = c.generation.max_tokens;

        if (root.contains("hip")) {
            const auto& j = root["hip"];
            read_into(j, "rounds", c.rounds);
            if (j.contains("format_mode")) c.format_mode = parse_format_mode(j["format_mode"].get<std::string>());
        }
        if (root.contains("evaluation")) {
            const auto& j = root["evaluation"];
            read_into(j, "per_category", c.per_category);
            read_into(j, "categories", c.categories);
            read_into(j, "ci_level", c.ci.level);
            read_into(j, "resamples", c.ci.resamples);
        }
        if (root.contains("baselines")) {
            const auto& j = root["baselines"];
            read_into(j, "homoglyph_rate", c.homoglyph_rate);
            if (j.contains("confusables")) {
                for (const auto& [from, to] : j["confusables"].items())
                    c.confusables[detail::single_code_point(from, "confusable source")] =
                        detail::single_code_point(to.get<std::string>(), "confusable target");
            }
        }
        if (root.contains("endpoints")) {
            const auto& j = root["endpoints"];
            auto endpoint = [&](const char* key, const char* default_adapter) -> std::optional<EndpointConfig> {
                if (!j.contains(key) || j[key].is_null()) return std::nullopt;
                EndpointConfig e;
                e.id = key;
                e.adapter = default_adapter;
                from_json(j[key], e);
                return e;
            };
            c.generator = endpoint("generator", "openai-completions");
            c.pair_paraphraser = endpoint("pair_paraphraser", "openai-chat");
            c.continuation = endpoint("continuation", "openai-completions");
            c.baseline = endpoint("baseline", "openai-chat");
            c.judge = endpoint("judge", "openai-chat");
            if (j.contains("detectors")) {
                for (const auto& d : j["detectors"]) {
                    EndpointConfig e;
                    e.adapter = "generic";
                    from_json(d, e);
                    c.detectors.push_back(std::move(e));
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("config_error", e.what());
    }
    c.ci.seed = derive_seed(c.seed, "evaluation");
    c.validate();
    return c;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config_error", "cannot read config file " + path);
    auto j = nlohmann::json::parse(in, nullptr, false, true);
    if (j.is_discarded()) throw Error("config_error", "config file " + path + " is not valid JSON");
    return parse_config(j);
}

}  // namespace hip
