#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "acorn/augmentor.hpp"
#include "acorn/error.hpp"
#include "acorn/hashing.hpp"

using namespace acorn;

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(StableHasher, LengthPrefixSeparatesFields) {
    StableHasher a, b;
    a.str("ab").str("c");
    b.str("a").str("bc");
    EXPECT_NE(a.hex(), b.hex());
}

TEST(StableHasher, SameFieldsSameDigest) {
    StableHasher a, b;
    a.str("x").u64(7);
    b.str("x").u64(7);
    EXPECT_EQ(a.digest64(), b.digest64());
}

TEST(HashedUniform, StaysInRange) {
    for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL}) {
        for (int i = 0; i < 200; ++i) {
            EXPECT_LT(hashed_uniform("t", 1, "k" + std::to_string(i), bound), bound);
        }
    }
}

TEST(DrawOutcome, ZeroEvidentialIsAlwaysZero) {
    for (int i = 0; i < 100; ++i) EXPECT_EQ(draw_outcome("q" + std::to_string(i), 99, 0), 0);
}

TEST(DrawOutcome, NegativeCountIsAnError) { EXPECT_THROW(draw_outcome("q", 1, -1), InputError); }

TEST(DrawOutcome, Deterministic) {
    for (int i = 0; i < 100; ++i) {
        const auto id = "id-" + std::to_string(i);
        EXPECT_EQ(draw_outcome(id, 5, 3), draw_outcome(id, 5, 3));
    }
}

TEST(DrawOutcome, DependsOnSeed) {
    int differ = 0;
    for (int i = 0; i < 200; ++i) {
        const auto id = "id-" + std::to_string(i);
        differ += draw_outcome(id, 1, 4) != draw_outcome(id, 2, 4);
    }
    EXPECT_GT(differ, 100);
}

// Every outcome frequency within 3 standard errors of 1/(N+1).
TEST(DrawOutcome, UniformWithinThreeSigma) {
    constexpr int M = 20000;
    for (int n : {1, 2, 3, 4, 5}) {
        std::map<int, int> counts;
        for (int i = 0; i < M; ++i) ++counts[draw_outcome("query-" + std::to_string(i), 424242, n)];
        const double p = 1.0 / (n + 1);
        const double tol = 3 * std::sqrt(p * (1 - p) / M);
        ASSERT_EQ(counts.size(), static_cast<std::size_t>(n + 1));
        for (const auto& [m, c] : counts) {
            EXPECT_GE(m, 0);
            EXPECT_LE(m, n);
            EXPECT_NEAR(static_cast<double>(c) / M, p, tol) << "N=" << n << " m=" << m;
        }
    }
}

TEST(SeededRng, ShuffleIsAPermutationAndReproducible) {
    std::vector<int> a(50), b;
    for (int i = 0; i < 50; ++i) a[i] = i;
    b = a;
    SeededRng r1(3), r2(3);
    r1.shuffle(a);
    r2.shuffle(b);
    EXPECT_EQ(a, b);
    std::set<int> seen(a.begin(), a.end());
    EXPECT_EQ(seen.size(), 50U);
}

TEST(SeededRng, BelowIsInRange) {
    SeededRng r(5);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7U);
}
