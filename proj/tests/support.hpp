#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "hip/clients/detector.hpp"
#include "hip/clients/generation.hpp"
#include "hip/clients/judge.hpp"
#include "hip/clients/mocks.hpp"
#include "hip/corpus.hpp"

namespace hip::testing {

#ifndef HIP_FIXTURE_DIR
#define HIP_FIXTURE_DIR "tests/fixtures"
#endif

inline std::string fixture(const std::string& name) { return std::string(HIP_FIXTURE_DIR) + "/" + name; }

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("hip-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> lines_of(const std::string& path) {
    std::vector<std::string> out;
    std::ifstream in(path);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

// Endpoint config suitable for in-process mocks: no credential, no waiting.
inline EndpointConfig mock_endpoint(const std::string& id, const std::string& adapter = "mock", int max_attempts = 3) {
    EndpointConfig e;
    e.id = id;
    e.adapter = adapter;
    e.base_url = "mock://" + id;
    e.model_id = id;
    e.rate_limit = 1e9;
    e.retry.max_attempts = max_attempts;
    e.retry.backoff = {std::chrono::milliseconds(0)};
    return e;
}

struct MockGenerator {
    std::shared_ptr<MockTransport> transport;
    std::unique_ptr<OpenAIGenerationClient> client;
};

inline MockGenerator mock_generator(MockTransport::Handler handler, const std::string& id = "mock-gen") {
    auto t = std::make_shared<MockTransport>(std::move(handler));
    return {t, std::make_unique<OpenAIGenerationClient>(mock_endpoint(id), t)};
}

inline MockGenerator mock_generator(mock::GeneratorKind kind, const std::string& id = "mock-gen") {
    return mock_generator(mock::generator(kind), id);
}

struct MockJudge {
    std::shared_ptr<MockTransport> transport;
    std::unique_ptr<OpenAIJudgeClient> client;
};

inline MockJudge mock_judge(mock::JudgeBehavior behavior = {}, int max_attempts = 3) {
    auto t = std::make_shared<MockTransport>(mock::judge(std::move(behavior)));
    return {t, std::make_unique<OpenAIJudgeClient>(mock_endpoint("judge", "mock", max_attempts), t)};
}

struct MockDetector {
    std::shared_ptr<MockTransport> transport;
    std::unique_ptr<HttpDetectorClient> client;
};

inline MockDetector mock_detector(const std::string& id, mock::DetectorShape shape, std::size_t window) {
    auto t = std::make_shared<MockTransport>(mock::detector(shape, window));
    auto cfg = mock_endpoint(id, shape == mock::DetectorShape::gptzero   ? "gptzero"
                                 : shape == mock::DetectorShape::pangram ? "pangram"
                                                                         : "generic");
    if (shape == mock::DetectorShape::generic) cfg.options["human_prob_pointer"] = "/human_prob";
    return {t, std::make_unique<HttpDetectorClient>(cfg, t)};
}

// Synthetic prose from a fixed vocabulary; every passage differs.
inline std::string synthetic_text(std::mt19937_64& rng, std::size_t words) {
    static const std::vector<std::string> vocab = {
        "river",   "market",  "winter",  "station", "garden",  "letter",  "engine",  "harbor",  "village", "morning",
        "council", "bridge",  "museum",  "forest",  "signal",  "planet",  "doctor",  "teacher", "window",  "kitchen",
        "summer",  "network", "island",  "valley",  "printer", "lantern", "archive", "theater", "climate", "budget",
        "farmer",  "painter", "sailor",  "student", "runner",  "writer",  "captain", "pilot",   "carries", "opens",
        "measures", "follows", "builds", "watches", "repairs", "crosses", "holds",   "finds",   "quiet",   "early",
        "narrow",  "distant", "careful", "bright",  "heavy",   "gentle",  "local",   "sudden",  "ancient", "modern"};
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        std::string w = vocab[pick(rng)];
        if (i % 11 == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        if (!out.empty()) out += ' ';
        out += w;
        if (i % 11 == 10 || i + 1 == words) out += '.';
    }
    return out;
}

inline Passage make_passage(std::string id, std::string category, Origin origin, std::string text) {
    Passage p;
    p.id = std::move(id);
    p.source_category = std::move(category);
    p.origin = origin;
    p.text = std::move(text);
    return p;
}

}  // namespace hip::testing
