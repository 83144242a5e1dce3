#include "acorn/hashing.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace acorn {

StableHasher::StableHasher() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 init failed");
    }
}

StableHasher::~StableHasher() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

StableHasher& StableHasher::bytes(std::string_view raw) {
    EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), raw.data(), raw.size());
    return *this;
}

StableHasher& StableHasher::u64(std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), buf, sizeof buf);
    return *this;
}

StableHasher& StableHasher::str(std::string_view s) {
    u64(s.size());
    return bytes(s);
}

std::array<std::uint8_t, 32> StableHasher::digest() {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len);
    return out;
}

std::uint64_t StableHasher::digest64() {
    const auto d = digest();
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | d[static_cast<std::size_t>(i)];
    return v;
}

std::string StableHasher::hex() {
    static constexpr char digits[] = "0123456789abcdef";
    const auto d = digest();
    std::string out;
    out.reserve(64);
    for (auto b : d) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

std::string sha256_hex(std::string_view data) { return StableHasher{}.bytes(data).hex(); }

std::uint64_t hashed_uniform(std::string_view domain, std::uint64_t seed, std::string_view key,
                             std::uint64_t bound) {
    if (bound <= 1) return 0;
    // Values below 2^64 mod bound are rejected; the rest split evenly.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (std::uint64_t counter = 0;; ++counter) {
        const auto h = StableHasher{}.str(domain).u64(seed).str(key).u64(bound).u64(counter).digest64();
        if (h >= threshold) return h % bound;
    }
}

std::uint64_t SeededRng::next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const auto v = next();
        if (v >= threshold) return v % bound;
    }
}

}  // namespace acorn
