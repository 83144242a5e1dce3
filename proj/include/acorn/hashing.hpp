#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace acorn {

/// Incremental SHA-256 over an unambiguous encoding of typed fields.
/// Strings are length-prefixed so ("ab","c") and ("a","bc") hash differently.
class StableHasher {
public:
    StableHasher();
    ~StableHasher();
    StableHasher(const StableHasher&) = delete;
    StableHasher& operator=(const StableHasher&) = delete;

    StableHasher& bytes(std::string_view raw);
    StableHasher& str(std::string_view s);
    StableHasher& u64(std::uint64_t v);
    StableHasher& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }

    std::array<std::uint8_t, 32> digest();
    /// First eight digest bytes, big-endian.
    std::uint64_t digest64();
    std::string hex();

private:
    void* ctx_;
};

std::string sha256_hex(std::string_view data);

/// Uniform draw from {0, .., bound-1} as a pure function of the key fields.
/// Rejection on a counter keeps the reduction free of modulo bias.
std::uint64_t hashed_uniform(std::string_view domain, std::uint64_t seed,
                             std::string_view key, std::uint64_t bound);

/// splitmix64 stream, seeded from a hash so it is portable across platforms
/// (std::mt19937 + std::shuffle is not).
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Unbiased value in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace acorn
