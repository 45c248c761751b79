#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "hip/error.hpp"

namespace hip {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
            throw Error("crypto_error", "sha256 init");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::string_view data) {
        if (EVP_DigestUpdate(ctx_, data.data(), data.size()) != 1)
            throw Error("crypto_error", "sha256 update");
        return *this;
    }

    std::array<unsigned char, 32> digest() {
        std::array<unsigned char, 32> out{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_, out.data(), &len) != 1 || len != out.size())
            throw Error("crypto_error", "sha256 final");
        return out;
    }

    std::string hex_digest() {
        static constexpr char kHex[] = "0123456789abcdef";
        std::string out;
        for (unsigned char b : digest()) {
            out.push_back(kHex[b >> 4]);
            out.push_back(kHex[b & 0xF]);
        }
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

inline std::string sha256_hex(std::string_view data) { return Sha256{}.update(data).hex_digest(); }

inline std::string file_sha256(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot read " + path);
    Sha256 h;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
    }
    return h.hex_digest();
}

// Seed fan-out: the first eight bytes (big-endian) of
// SHA-256("<parent>/<label>"). Used for stage, passage and round seeds.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
    const auto d = Sha256{}.update(std::to_string(parent)).update("/").update(label).digest();
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | d[static_cast<std::size_t>(i)];
    return v;
}

}  // namespace hip
