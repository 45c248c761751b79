#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hip/clients/generation.hpp"
#include "hip/error.hpp"
#include "hip/hiploop.hpp"
#include "hip/text.hpp"

namespace hip {

// ---------------------------------------------------------------------------
// Zero-shot prompt paraphrasing

inline constexpr std::string_view kZeroShotInstruction =
    "Paraphrase the text sent by the user. Reply with the paraphrased text only.";

/// One zero-shot round: instruction as system message, text as user message.
inline std::string simple_paraphrase_round(const std::string& text, GenerationClient& generator,
                                           const GenerationParams& params) {
    if (text.empty()) throw Error("empty_text", "paraphrase input is empty");
    const std::vector<ChatMessage> prompt{{"system", std::string(kZeroShotInstruction)}, {"user", text}};
    GenerationParams p = params;
    p.stop_sequences.clear();
    auto reply = std::string(text::trim(generator.generate(prompt, p)));
    if (reply.empty()) throw Error("empty_generation", "paraphrase reply is empty");
    return reply;
}

inline Trajectory run_simple_paraphrase(const std::string& x0, GenerationClient& generator, std::size_t n_rounds,
                                        const GenerationParams& params) {
    auto traj = run_rounds(x0, n_rounds, [&](const std::string& prev, std::size_t t) {
        GenerationParams p = params;
        if (params.seed) p.seed = derive_seed(*params.seed, "round/" + std::to_string(t));
        return StepResult{simple_paraphrase_round(prev, generator, p), true};
    });
    traj.method = "simple_paraphrase";
    traj.paraphraser_id = generator.model_id();
    traj.params = params;
    traj.params.stop_sequences.clear();
    return traj;
}

// ---------------------------------------------------------------------------
// Homoglyph substitution

struct HomoglyphMap {
    std::map<char32_t, char32_t> mapping;
    double substitution_rate = 0.5;
    std::uint64_t seed = 0;

    // Injective, no whitespace on either side, and no target that is itself
    // a source (so the inverse is well defined on substituted text).
    void validate() const {
        if (!(substitution_rate >= 0.0 && substitution_rate <= 1.0))
            throw Error("config_error", "homoglyph substitution_rate must be in [0,1]");
        auto is_space = [](char32_t c) { return c == U'\n' || c == U'\r' || text::is_horizontal_space(c); };
        std::map<char32_t, char32_t> inverse;
        for (auto [from, to] : mapping) {
            if (from == to) throw Error("config_error", "homoglyph map has a fixed point");
            if (is_space(from) || is_space(to)) throw Error("config_error", "homoglyph map touches whitespace");
            if (!inverse.emplace(to, from).second) throw Error("config_error", "homoglyph map is not injective");
            if (mapping.contains(to)) throw Error("config_error", "homoglyph target is also a source");
        }
    }

    [[nodiscard]] std::map<char32_t, char32_t> inverse() const {
        std::map<char32_t, char32_t> inv;
        for (auto [from, to] : mapping) inv[to] = from;
        return inv;
    }
};

// Latin letters and their Cyrillic / Greek / Armenian look-alikes.
inline std::map<char32_t, char32_t> default_confusables() {
    return {
        {U'a', 0x0430}, {U'c', 0x0441}, {U'd', 0x0501}, {U'e', 0x0435}, {U'h', 0x04BB}, {U'i', 0x0456},
        {U'j', 0x0458}, {U'o', 0x043E}, {U'p', 0x0440}, {U'q', 0x051B}, {U's', 0x0455}, {U'w', 0x051D},
        {U'x', 0x0445}, {U'y', 0x0443}, {U'A', 0x0410}, {U'B', 0x0412}, {U'C', 0x0421}, {U'E', 0x0415},
        {U'H', 0x041D}, {U'I', 0x0406}, {U'J', 0x0408}, {U'K', 0x041A}, {U'M', 0x041C}, {U'N', 0x039D},
        {U'O', 0x041E}, {U'P', 0x0420}, {U'S', 0x0405}, {U'T', 0x0422}, {U'X', 0x0425}, {U'Y', 0x04AE},
        {U'Z', 0x0396}, {U'n', 0x0578},
    };
}

namespace detail {

inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

// Each mappable code point is replaced independently with probability
// substitution_rate; the draw sequence advances once per mappable character.
inline std::string homoglyph_substitute(std::string_view input, const HomoglyphMap& map) {
    map.validate();
    std::mt19937_64 rng(map.seed);
    std::u32string cps = text::utf8_decode(input);
    for (auto& c : cps) {
        const auto it = map.mapping.find(c);
        if (it == map.mapping.end()) continue;
        if (detail::unit_draw(rng) < map.substitution_rate) c = it->second;
    }
    return text::utf8_encode(cps);
}

/// Single-pass method: a one-round trajectory [x0, substituted x0].
inline Trajectory run_homoglyph(const std::string& x0, const HomoglyphMap& map) {
    auto traj = run_rounds(x0, 1, [&](const std::string& prev, std::size_t) {
        return StepResult{homoglyph_substitute(prev, map), true};
    });
    traj.method = "homoglyph";
    traj.paraphraser_id = "homoglyph";
    traj.params.stop_sequences.clear();
    return traj;
}

}  // namespace hip
