#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "fraxnet/rng.hpp"
#include "fraxnet/tensor.hpp"

using namespace fraxnet;

TEST(Tensor, ShapeAndRowMajorIndexing)
{
    Tensor<float> t({2, 3, 4});
    EXPECT_EQ(t.size(), 24u);
    EXPECT_EQ(t.rank(), 3u);
    t.at(1, 2, 3) = 5.0f;
    EXPECT_EQ(t[23], 5.0f);
    t.at(0, 1, 0) = 7.0f;
    EXPECT_EQ(t[4], 7.0f);
}

TEST(Tensor, RejectsZeroDimensionsAndDataMismatch)
{
    EXPECT_THROW(Tensor<float>({2, 0}), ShapeError);
    EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), ShapeError);
}

TEST(Tensor, AtIsBoundsChecked)
{
    Tensor<double> t({2, 2});
    EXPECT_THROW(t.at(2, 0), ShapeError);
    EXPECT_THROW(t.at(0), ShapeError);
}

TEST(Tensor, ReshapeKeepsDataAndChecksCount)
{
    Tensor<float> t({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
    auto r = t.reshaped({3, 2});
    EXPECT_EQ(r.at(2, 1), 6.0f);
    EXPECT_THROW((void)t.reshaped({4, 2}), ShapeError);
}

TEST(Tensor, CastAndEquality)
{
    Tensor<double> t({3}, std::vector<double>{0.5, -1.25, 3.0});
    auto f = t.cast<float>();
    EXPECT_EQ(f.at(1), -1.25f);
    EXPECT_EQ(f.cast<double>(), t);
}

TEST(Tensor, EnsureFiniteNamesTheSite)
{
    Tensor<float> t({2});
    EXPECT_NO_THROW(ensure_finite(t, "x"));
    t[1] = std::numeric_limits<float>::quiet_NaN();
    try {
        ensure_finite(t, "conv2d");
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("conv2d"), std::string::npos);
    }
}

TEST(Rng, SameSeedSameStream)
{
    Rng a(99), b(99), c(100);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        differs = differs || x != c.next_u64();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, UniformAndBelowRanges)
{
    Rng r(5);
    double sum = 0;
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        ASSERT_LT(r.below(7), 7u);
    }
    EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(Rng, ShuffleIsAPermutationAndSeedDependent)
{
    std::vector<int> a(50), b(50);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    Rng r1(1), r2(2);
    shuffle(a.begin(), a.end(), r1);
    shuffle(b.begin(), b.end(), r2);
    EXPECT_NE(a, b);
    std::sort(a.begin(), a.end());
    for (int i = 0; i < 50; ++i) EXPECT_EQ(a[i], i);
}

TEST(Rng, MixSeedSeparatesStreams)
{
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(mix_seed({7, i}));
    EXPECT_EQ(seen.size(), 100u);
    EXPECT_NE(mix_seed({1, 2}), mix_seed({2, 1}));
}
