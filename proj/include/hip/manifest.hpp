#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hip/error.hpp"
#include "hip/hash.hpp"
#include "hip/log.hpp"

namespace hip {

struct StageRecord {
    std::string params_hash;
    std::map<std::string, std::string> inputs;   // path -> sha256
    std::map<std::string, std::string> outputs;  // path -> sha256
    std::string started_at;
    std::string finished_at;
    bool complete = false;
    nlohmann::json summary = nlohmann::json::object();
};

inline void to_json(nlohmann::json& j, const StageRecord& s) {
    j = nlohmann::json{{"params_hash", s.params_hash}, {"inputs", s.inputs},          {"outputs", s.outputs},
                       {"started_at", s.started_at},   {"finished_at", s.finished_at}, {"complete", s.complete},
                       {"summary", s.summary}};
}

inline void from_json(const nlohmann::json& j, StageRecord& s) {
    s.params_hash = j.value("params_hash", std::string());
    s.inputs = j.value("inputs", std::map<std::string, std::string>{});
    s.outputs = j.value("outputs", std::map<std::string, std::string>{});
    s.started_at = j.value("started_at", std::string());
    s.finished_at = j.value("finished_at", std::string());
    s.complete = j.value("complete", false);
    s.summary = j.value("summary", nlohmann::json::object());
}

// Run bookkeeping shared by all stages: config identity, the master seed, and
// for every stage its parameters, input/output digests and timestamps.
struct RunManifest {
    std::string run_id;
    std::string config_hash;
    std::string template_hash;
    std::uint64_t seed = 0;
    std::map<std::string, StageRecord> stages;

    static RunManifest load_or_create(const std::string& path, const std::string& config_hash,
                                      const std::string& template_hash, std::uint64_t seed) {
        RunManifest m;
        if (std::filesystem::exists(path)) {
            std::ifstream in(path);
            auto j = nlohmann::json::parse(in, nullptr, false);
            if (!j.is_discarded() && j.is_object()) {
                m.stages = j.value("stages", std::map<std::string, StageRecord>{});
            } else {
                log::warn("manifest_unreadable", {{"path", path}});
            }
        }
        m.config_hash = config_hash;
        m.template_hash = template_hash;
        m.seed = seed;
        m.run_id = sha256_hex(config_hash + "/" + std::to_string(seed)).substr(0, 16);
        return m;
    }

    void save(const std::string& path) const {
        const nlohmann::json j{{"run_id", run_id},
                               {"config_hash", config_hash},
                               {"template_hash", template_hash},
                               {"seed", seed},
                               {"seed_derivation", "stage_seed = first 8 bytes (big-endian) of sha256(\"<seed>/<stage>\")"},
                               {"stages", stages}};
        const auto tmp = path + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("io_error", "cannot write manifest " + tmp);
            out << j.dump(2) << '\n';
        }
        std::filesystem::rename(tmp, path);
    }

    // A completed stage is current when its parameters and input digests are
    // unchanged and every recorded output still has its recorded digest.
    [[nodiscard]] bool up_to_date(const std::string& stage, const std::string& params_hash,
                                  const std::map<std::string, std::string>& inputs) const {
        const auto it = stages.find(stage);
        if (it == stages.end() || !it->second.complete) return false;
        const auto& rec = it->second;
        if (rec.params_hash != params_hash || rec.inputs != inputs) return false;
        for (const auto& [path, digest] : rec.outputs) {
            if (!std::filesystem::exists(path) || file_sha256(path) != digest) return false;
        }
        return true;
    }
};

}  // namespace hip
