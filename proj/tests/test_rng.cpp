#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "confaudit/rng.hpp"

using namespace confaudit;

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        differs |= x != c.next();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, DeriveSeedSeparatesKeys) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 100; ++i)
        for (std::uint64_t j = 0; j < 10; ++j) seen.insert(derive_seed(7, {i, j}));
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_NE(derive_seed(7, {1}), derive_seed(7, {1, 0}));
    EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
    EXPECT_EQ(derive_seed(7, {3, 4}), derive_seed(7, {3, 4}));
}

TEST(Rng, GridKeyIsStableUnderRounding) {
    EXPECT_EQ(grid_key(0.7), grid_key(0.1 * 7));
    EXPECT_EQ(grid_key(0.5), 500000u);
    EXPECT_NE(grid_key(0.6), grid_key(0.7));
}

TEST(Rng, UniformMomentsAndRange) {
    Rng rng(1);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sq += u * u;
    }
    const double mean = sum / n;
    EXPECT_NEAR(mean, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(sq / n - mean * mean, 1.0 / 12.0, 0.002);
}

TEST(Rng, BelowCoversRangeUniformly) {
    Rng rng(2);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
    // Chi-square with 6 dof; 22.46 is the 0.999 quantile.
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
    EXPECT_LT(chi2, 22.46);
    EXPECT_EQ(rng.below(1), 0u);
    EXPECT_EQ(rng.below(0), 0u);
}

TEST(Rng, NormalMoments) {
    Rng rng(3);
    const int n = 200000;
    double sum = 0.0, sq = 0.0, within1 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal(2.0, 3.0);
        sum += z;
        sq += z * z;
        within1 += std::abs(z - 2.0) < 3.0;
    }
    const double mean = sum / n;
    EXPECT_NEAR(mean, 2.0, 4.0 * 3.0 / std::sqrt(n));
    EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 3.0, 0.03);
    EXPECT_NEAR(within1 / n, 0.682689, 0.005);
}

TEST(Rng, PoissonMean) {
    Rng rng(4);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double k = static_cast<double>(rng.poisson(2.5));
        sum += k;
        sq += k * k;
    }
    EXPECT_NEAR(sum / n, 2.5, 0.03);
    EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 2.5, 0.06);
    EXPECT_EQ(rng.poisson(0.0), 0u);
}

TEST(Rng, CategoricalFollowsWeights) {
    Rng rng(5);
    const std::vector<double> w{0.0, 1.0, 3.0, 0.0};
    std::vector<int> counts(4, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[rng.categorical(w)];
    EXPECT_EQ(counts[0], 0);
    EXPECT_EQ(counts[3], 0);
    EXPECT_NEAR(counts[2] / double(n), 0.75, 0.01);
}

TEST(Rng, SampleWithoutReplacement) {
    Rng rng(6);
    std::vector<int> pool(50);
    std::iota(pool.begin(), pool.end(), 0);
    auto s = rng.sample(pool, 20);
    ASSERT_EQ(s.size(), 20u);
    std::set<int> distinct(s.begin(), s.end());
    EXPECT_EQ(distinct.size(), 20u);
    for (int x : s) EXPECT_TRUE(x >= 0 && x < 50);
    EXPECT_EQ(rng.sample(pool, 80).size(), 50u);
}

TEST(Rng, SampleInclusionIsUniform) {
    Rng rng(7);
    std::vector<int> pool(10);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<int> hits(10, 0);
    const int n = 40000;
    for (int i = 0; i < n; ++i)
        for (int x : rng.sample(pool, 3)) ++hits[x];
    for (int h : hits) EXPECT_NEAR(h / double(n), 0.3, 0.015);
}

TEST(Rng, ShuffleIsPermutation) {
    Rng rng(8);
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    rng.shuffle(w);
    EXPECT_NE(v, w);
    std::sort(w.begin(), w.end());
    EXPECT_EQ(v, w);
}
