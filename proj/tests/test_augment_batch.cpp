#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"

using namespace fraxnet;
using oracle::random_tensor;

TEST(Augment, DisabledIsIdentity)
{
    std::mt19937_64 gen(1);
    auto x = random_tensor<float>({9, 7, 1}, gen, 0.0, 1.0);
    AugmentConfig cfg;
    cfg.enabled = false;
    EXPECT_EQ(augment(x, cfg, 123), x);
}

TEST(Augment, ForcedFlipTwiceIsOriginal)
{
    std::mt19937_64 gen(2);
    auto x = random_tensor<double>({6, 5, 1}, gen);
    AugmentDraw flip{true, 0.0, 1.0};
    auto once = apply_augmentation(x, flip);
    EXPECT_NE(once, x);
    EXPECT_DOUBLE_EQ(once.at(2, 0, 0), x.at(2, 4, 0));
    EXPECT_EQ(apply_augmentation(once, flip), x);
}

TEST(Augment, NeutralTransformReproducesInput)
{
    std::mt19937_64 gen(3);
    auto x = random_tensor<float>({16, 12, 1}, gen, 0.0, 1.0);
    AugmentConfig cfg;
    cfg.rotation_max_degrees = 0.0;
    cfg.zoom_low = cfg.zoom_high = 1.0;
    cfg.horizontal_flip_prob = 0.0;
    EXPECT_LE(oracle::max_rel_err(augment(x, cfg, 5), x), 1e-6);
}

TEST(Augment, QuarterTurnsAreInversePermutations)
{
    std::mt19937_64 gen(4);
    auto x = random_tensor<double>({7, 7, 1}, gen);
    auto r = apply_augmentation(x, AugmentDraw{false, 90.0, 1.0});
    auto back = apply_augmentation(r, AugmentDraw{false, -90.0, 1.0});
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-9);
    std::multiset<double> a(x.data().begin(), x.data().end()), b;
    for (auto v : r.data()) b.insert(std::round(v * 1e9) / 1e9);
    std::multiset<double> a_rounded;
    for (auto v : a) a_rounded.insert(std::round(v * 1e9) / 1e9);
    EXPECT_EQ(a_rounded, b);
}

TEST(Augment, DrawsStayInConfiguredRanges)
{
    AugmentConfig cfg;
    int flips = 0;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        const auto d = draw_augmentation(cfg, s);
        ASSERT_LE(std::abs(d.angle_degrees), 15.0);
        ASSERT_GE(d.zoom, 0.9);
        ASSERT_LE(d.zoom, 1.1);
        flips += d.flip;
    }
    EXPECT_NEAR(flips / 2000.0, 0.5, 0.05);
}

TEST(Augment, DeterministicInSeedAndValuesBounded)
{
    std::mt19937_64 gen(5);
    auto x = random_tensor<float>({10, 10, 1}, gen, 0.0, 1.0);
    AugmentConfig cfg;
    auto a = augment(x, cfg, 9);
    EXPECT_EQ(a, augment(x, cfg, 9));
    for (auto v : a.data()) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(Augment, InvalidConfig)
{
    AugmentConfig cfg;
    cfg.zoom_low = 1.2;
    EXPECT_THROW(augment(Tensor<float>({2, 2, 1}), cfg, 0), ValueError);
}

namespace {

ImageDataset sized(std::size_t n)
{
    std::vector<Sample> s;
    for (std::size_t i = 0; i < n; ++i)
        s.push_back({"s" + std::to_string(i), i % 3 == 0 ? Label::fractured : Label::non_fractured, Split::train,
                     ImageBuffer(4, 4, 1, static_cast<std::uint8_t>(i))});
    return ImageDataset(std::move(s));
}

std::vector<std::size_t> batch_sizes(BatchStream<float> stream)
{
    std::vector<std::size_t> out;
    while (auto b = stream.next()) out.push_back(b->images.dim(0));
    return out;
}

}  // namespace

TEST(Batches, ShortFinalBatch)
{
    auto ten = sized(10);
    EXPECT_EQ(batch_sizes(batch_iter<float>(ten, Split::train, 32)), (std::vector<std::size_t>{10}));
    auto hundred = sized(100);
    EXPECT_EQ(batch_sizes(batch_iter<float>(hundred, Split::train, 32)), (std::vector<std::size_t>{32, 32, 32, 4}));
    EXPECT_EQ(batch_iter<float>(hundred, Split::train, 32).batch_count(), 4u);
}

TEST(Batches, ContentsAndLabels)
{
    auto data = sized(5);
    auto stream = batch_iter<float>(data, Split::train, 5, BatchOptions{.shuffle = false});
    auto b = stream.next();
    ASSERT_TRUE(b);
    EXPECT_EQ(b->images.shape(), (Shape{5, 4, 4, 1}));
    EXPECT_EQ(b->labels.shape(), (Shape{5, 1}));
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_FLOAT_EQ(b->images.at(i, 3, 3, 0), float(i / 255.0));
        EXPECT_EQ(b->labels[i], i % 3 == 0 ? 1.0f : 0.0f);
    }
    EXPECT_FALSE(stream.next());
}

TEST(Batches, SameSeedsSameOrderAndContents)
{
    auto data = oracle::toy_dataset(16);
    BatchOptions o{.shuffle_seed = 4, .epoch = 2, .augment = AugmentConfig{}, .augment_seed = 8};
    auto a = batch_iter<float>(data, Split::train, 5, o);
    auto b = batch_iter<float>(data, Split::train, 5, o);
    EXPECT_EQ(a.order(), b.order());
    while (auto x = a.next()) {
        auto y = b.next();
        ASSERT_TRUE(y);
        EXPECT_EQ(x->images, y->images);
        EXPECT_EQ(x->labels, y->labels);
    }
    o.epoch = 3;
    EXPECT_NE(batch_iter<float>(data, Split::train, 5, o).order(), batch_iter<float>(data, Split::train, 5).order());
}

TEST(Batches, AugmentationOnlyOnTrainSplit)
{
    auto data = oracle::toy_dataset(16);
    BatchOptions aug{.shuffle = false, .augment = AugmentConfig{}, .augment_seed = 3};
    BatchOptions plain{.shuffle = false};
    EXPECT_EQ(batch_iter<float>(data, Split::val, 8, aug).next()->images,
              batch_iter<float>(data, Split::val, 8, plain).next()->images);
    EXPECT_NE(batch_iter<float>(data, Split::train, 8, aug).next()->images,
              batch_iter<float>(data, Split::train, 8, plain).next()->images);
}

TEST(Batches, OversamplingBalancesClasses)
{
    auto data = sized(9);  // 3 fractured, 6 non-fractured
    BatchOptions o{.shuffle = false, .oversample_minority = true};
    auto stream = batch_iter<float>(data, Split::train, 100, o);
    EXPECT_EQ(stream.sample_count(), 12u);
    auto b = stream.next();
    float positives = 0;
    for (auto v : b->labels.data()) positives += v;
    EXPECT_EQ(positives, 6.0f);
}

TEST(Batches, EmptySplitAndZeroBatchAreErrors)
{
    auto data = sized(4);
    EXPECT_THROW(batch_iter<float>(data, Split::test, 2), ValueError);
    EXPECT_THROW(batch_iter<float>(data, Split::train, 0), ValueError);
}
