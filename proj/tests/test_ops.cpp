#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace fraxnet;
using namespace fraxnet::ops;
using oracle::max_rel_err;
using oracle::random_tensor;

// ---- conv2d ----

TEST(Conv2d, ScalarKernelScalesInput)
{
    Tensor<float> x({1, 5, 5, 1}, 2.0f);
    Tensor<float> k({1, 1, 1, 1}, 3.0f);
    Tensor<float> b({1});
    auto y = conv2d_forward(x, k, b, 1, Padding::valid);
    ASSERT_EQ(y.shape(), (Shape{1, 5, 5, 1}));
    for (auto v : y.data()) EXPECT_EQ(v, 6.0f);
}

TEST(Conv2d, ZeroKernelGivesBias)
{
    std::mt19937_64 gen(1);
    auto x = random_tensor<float>({2, 7, 6, 3}, gen);
    Tensor<float> k({3, 3, 3, 4});
    Tensor<float> b({4}, std::vector<float>{0.5f, -1.0f, 2.0f, 0.0f});
    auto y = conv2d_forward(x, k, b, 1, Padding::same);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], b[i % 4]);
}

TEST(Conv2d, StrideTwoSameMatchesDirectLoops)
{
    std::mt19937_64 gen(2);
    auto x = random_tensor<double>({1, 6, 6, 2}, gen);
    auto k = random_tensor<double>({3, 3, 2, 4}, gen);
    auto b = random_tensor<double>({4}, gen);
    auto y = conv2d_forward(x, k, b, 2, Padding::same);
    auto ref = oracle::conv2d(x, k, b, 2, true);
    EXPECT_EQ(y.shape(), (Shape{1, 3, 3, 4}));
    EXPECT_LE(max_rel_err(y, ref), 1e-6);
}

TEST(Conv2d, FuzzedAgainstDirectLoops)
{
    std::mt19937_64 gen(3);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t kh = pick(1, 4), kw = pick(1, 4);
        const std::size_t h = pick(int(kh), 9), w = pick(int(kw), 9);
        const std::size_t n = pick(1, 3), ci = pick(1, 4), co = pick(1, 5), s = pick(1, 3);
        const bool same = pick(0, 1) == 1;
        auto x = random_tensor<double>({n, h, w, ci}, gen);
        auto k = random_tensor<double>({kh, kw, ci, co}, gen);
        auto b = random_tensor<double>({co}, gen);
        auto y = conv2d_forward(x, k, b, s, same ? Padding::same : Padding::valid);
        ASSERT_LE(max_rel_err(y, oracle::conv2d(x, k, b, s, same)), 1e-6) << "trial " << trial;
    }
}

TEST(Conv2d, BackwardMatchesFiniteDifferences)
{
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t s = 1 + trial % 2;
        const auto pad = trial % 3 == 0 ? Padding::valid : Padding::same;
        auto x = random_tensor<double>({2, 5, 6, 2}, gen);
        auto k = random_tensor<double>({3, 2, 2, 3}, gen);
        auto b = random_tensor<double>({3}, gen);
        auto y0 = conv2d_forward(x, k, b, s, pad);
        auto w = random_tensor<double>(y0.shape(), gen);  // loss = sum(w * y)
        auto loss = [&] {
            auto y = conv2d_forward(x, k, b, s, pad);
            double acc = 0;
            for (std::size_t i = 0; i < y.size(); ++i) acc += w[i] * y[i];
            return acc;
        };
        auto g = conv2d_backward(x, k, w, s, pad, true);
        for (std::size_t i = 0; i < x.size(); ++i)
            ASSERT_LE(oracle::rel_err(g.input[i], oracle::central_difference(x, i, loss)), 1e-6);
        for (std::size_t i = 0; i < k.size(); ++i)
            ASSERT_LE(oracle::rel_err(g.kernels[i], oracle::central_difference(k, i, loss)), 1e-6);
        for (std::size_t i = 0; i < b.size(); ++i)
            ASSERT_LE(oracle::rel_err(g.bias[i], oracle::central_difference(b, i, loss)), 1e-6);
    }
}

TEST(Conv2d, ShapeErrors)
{
    Tensor<float> x({1, 4, 4, 2});
    EXPECT_THROW(conv2d_forward(x, Tensor<float>({3, 3, 3, 1}), Tensor<float>({1}), 1, Padding::same), ShapeError);
    EXPECT_THROW(conv2d_forward(x, Tensor<float>({3, 3, 2, 2}), Tensor<float>({1}), 1, Padding::same), ShapeError);
    EXPECT_THROW(conv2d_forward(x, Tensor<float>({5, 5, 2, 1}), Tensor<float>({1}), 1, Padding::valid), ShapeError);
}

// ---- max pool ----

TEST(MaxPool, SingleWindow)
{
    Tensor<float> x({1, 2, 2, 1}, std::vector<float>{1, 2, 3, 4});
    auto r = maxpool2d(x, 2, 2);
    ASSERT_EQ(r.output.size(), 1u);
    EXPECT_EQ(r.output[0], 4.0f);
    EXPECT_EQ(r.argmax[0], 3u);
}

TEST(MaxPool, TiesGoToFirstCellOfWindow)
{
    Tensor<float> x({1, 4, 4, 1}, 1.5f);
    auto r = maxpool2d(x, 2, 2);
    for (auto v : r.output.data()) EXPECT_EQ(v, 1.5f);
    const std::vector<std::size_t> firsts{0, 2, 8, 10};
    EXPECT_EQ(r.argmax, firsts);
}

TEST(MaxPool, FuzzedAgainstWindowScan)
{
    std::mt19937_64 gen(5);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
    {
        auto x = random_tensor<float>({1, 8, 8, 3}, gen);
        EXPECT_EQ(maxpool2d(x, 2, 2).output, oracle::maxpool(x, 2, 2));
    }
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t win = pick(1, 3), s = pick(1, 3);
        const std::size_t h = pick(int(win), 10), w = pick(int(win), 10);
        auto x = random_tensor<double>({std::size_t(pick(1, 3)), h, w, std::size_t(pick(1, 4))}, gen);
        ASSERT_EQ(maxpool2d(x, win, s).output, oracle::maxpool(x, win, s)) << "trial " << trial;
    }
}

TEST(MaxPool, BackwardRoutesToArgmax)
{
    Tensor<double> x({1, 2, 4, 1}, std::vector<double>{1, 5, 2, 2, 3, 0, 9, 2});
    auto r = maxpool2d(x, 2, 2);
    Tensor<double> g({1, 1, 2, 1}, std::vector<double>{10, 20});
    auto dx = maxpool2d_backward(g, r.argmax, x.shape());
    const std::vector<double> expected{0, 10, 0, 0, 0, 0, 20, 0};
    EXPECT_EQ(dx.storage(), expected);
}

// ---- batch norm ----

TEST(BatchNorm, TrainModeStandardizesPerChannel)
{
    std::mt19937_64 gen(6);
    auto x = random_tensor<double>({4, 3, 3, 2}, gen, -3.0, 7.0);
    Tensor<double> gamma({2}, 1.0), beta({2}, 0.0), rm({2}, 0.0), rv({2}, 1.0);
    auto y = batchnorm_forward(x, gamma, beta, rm, rv, Mode::train);
    for (std::size_t ch = 0; ch < 2; ++ch) {
        double m = 0, v = 0;
        const double n = double(y.size() / 2);
        for (std::size_t i = ch; i < y.size(); i += 2) m += y[i];
        m /= n;
        for (std::size_t i = ch; i < y.size(); i += 2) v += (y[i] - m) * (y[i] - m);
        v /= n;
        EXPECT_NEAR(m, 0.0, 1e-5);
        EXPECT_NEAR(v, 1.0, 1e-3);
    }
}

TEST(BatchNorm, AffineShift)
{
    std::mt19937_64 gen(7);
    auto x = random_tensor<double>({8, 2, 2, 3}, gen);
    Tensor<double> gamma({3}, 2.0), beta({3}, 5.0), rm({3}, 0.0), rv({3}, 1.0);
    auto y = batchnorm_forward(x, gamma, beta, rm, rv, Mode::train);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        double m = 0;
        for (std::size_t i = ch; i < y.size(); i += 3) m += y[i];
        EXPECT_NEAR(m / double(y.size() / 3), 5.0, 1e-4);
    }
}

TEST(BatchNorm, InferModeUsesRunningStatistics)
{
    // one channel, 4 values; m=1, v=3, eps=1e-3, gamma 2, beta 0.5
    Tensor<double> x({4, 1}, std::vector<double>{0.0, 1.0, 2.0, 4.0});
    Tensor<double> gamma({1}, 2.0), beta({1}, 0.5), rm({1}, 1.0), rv({1}, 3.0);
    auto y = batchnorm_forward(x, gamma, beta, rm, rv, Mode::infer);
    const double s = std::sqrt(3.001);
    EXPECT_NEAR(y[0], 2.0 * (-1.0) / s + 0.5, 1e-12);
    EXPECT_NEAR(y[1], 0.5, 1e-12);
    EXPECT_NEAR(y[2], 2.0 / s + 0.5, 1e-12);
    EXPECT_NEAR(y[3], 6.0 / s + 0.5, 1e-12);
    EXPECT_EQ(rm[0], 1.0);
    EXPECT_EQ(rv[0], 3.0);
}

TEST(BatchNorm, RunningStatisticsFollowMomentum)
{
    Tensor<double> x({4, 1}, std::vector<double>{1.0, 2.0, 3.0, 6.0});  // mean 3, biased var 3.5
    Tensor<double> gamma({1}, 1.0), beta({1}, 0.0), rm({1}, 0.0), rv({1}, 1.0);
    batchnorm_forward(x, gamma, beta, rm, rv, Mode::train);
    EXPECT_NEAR(rm[0], 0.01 * 3.0, 1e-12);
    EXPECT_NEAR(rv[0], 0.99 + 0.01 * 3.5, 1e-12);
}

TEST(BatchNorm, BackwardMatchesFiniteDifferences)
{
    std::mt19937_64 gen(8);
    auto x = random_tensor<double>({3, 2, 2, 2}, gen);
    auto gamma = random_tensor<double>({2}, gen, 0.5, 1.5);
    auto beta = random_tensor<double>({2}, gen);
    auto w = random_tensor<double>(x.shape(), gen);
    auto loss = [&] {
        Tensor<double> rm({2}), rv({2}, 1.0);
        auto y = batchnorm_forward(x, gamma, beta, rm, rv, Mode::train);
        double acc = 0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += w[i] * y[i];
        return acc;
    };
    Tensor<double> rm({2}), rv({2}, 1.0);
    BatchNormCache<double> cache;
    batchnorm_forward(x, gamma, beta, rm, rv, Mode::train, {}, &cache);
    auto g = batchnorm_backward(w, gamma, cache);
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_LE(oracle::rel_err(g.input[i], oracle::central_difference(x, i, loss)), 1e-6);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_LE(oracle::rel_err(g.gamma[i], oracle::central_difference(gamma, i, loss)), 1e-6);
        EXPECT_LE(oracle::rel_err(g.beta[i], oracle::central_difference(beta, i, loss)), 1e-6);
    }
}

// ---- dropout ----

TEST(Dropout, RateZeroAndInferAreIdentity)
{
    std::mt19937_64 gen(9);
    auto x = random_tensor<float>({4, 5}, gen);
    EXPECT_EQ(dropout_forward(x, 0.0, 1, Mode::train).output, x);
    EXPECT_EQ(dropout_forward(x, 0.0, 1, Mode::infer).output, x);
    EXPECT_EQ(dropout_forward(x, 0.7, 1, Mode::infer).output, x);
}

TEST(Dropout, HalfRateConcentrationAndScaling)
{
    Tensor<double> x({10000});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 + double(i % 13);
    auto r = dropout_forward(x, 0.5, 1234, Mode::train);
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (r.output[i] == 0.0)
            ++zeros;
        else
            EXPECT_EQ(r.output[i], 2.0 * x[i]);
    }
    EXPECT_GE(zeros, 4700u);
    EXPECT_LE(zeros, 5300u);
    EXPECT_EQ(dropout_forward(x, 0.5, 1234, Mode::train).output, r.output);
}

TEST(Dropout, RejectsRateOutOfRange)
{
    Tensor<float> x({3});
    EXPECT_THROW(dropout_forward(x, 1.0, 0, Mode::train), ValueError);
    EXPECT_THROW(dropout_forward(x, -0.1, 0, Mode::train), ValueError);
}

// ---- dense ----

TEST(Dense, IdentityWeights)
{
    std::mt19937_64 gen(10);
    auto x = random_tensor<float>({3, 4}, gen);
    Tensor<float> w({4, 4});
    for (std::size_t i = 0; i < 4; ++i) w.at(i, i) = 1.0f;
    EXPECT_EQ(dense_forward(x, w, Tensor<float>({4})), x);
}

TEST(Dense, HandArithmetic)
{
    Tensor<float> x({1, 2}, std::vector<float>{1, 2});
    Tensor<float> w({2, 2}, std::vector<float>{3, 0, 0, 3});
    Tensor<float> b({2}, std::vector<float>{1, 1});
    auto y = dense_forward(x, w, b);
    EXPECT_EQ(y.storage(), (std::vector<float>{4, 7}));
}

TEST(Dense, FuzzedAgainstTripleLoop)
{
    std::mt19937_64 gen(11);
    {
        auto x = random_tensor<double>({4, 7}, gen);
        auto w = random_tensor<double>({7, 3}, gen);
        auto b = random_tensor<double>({3}, gen);
        EXPECT_LE(max_rel_err(dense_forward(x, w, b), oracle::dense(x, w, b)), 1e-6);
    }
    auto pick = [&](int lo, int hi) { return std::size_t(std::uniform_int_distribution<int>(lo, hi)(gen)); };
    for (int trial = 0; trial < 150; ++trial) {
        const auto n = pick(1, 6), d = pick(1, 40), u = pick(1, 9);
        auto x = random_tensor<double>({n, d}, gen);
        auto w = random_tensor<double>({d, u}, gen);
        auto b = random_tensor<double>({u}, gen);
        ASSERT_LE(max_rel_err(dense_forward(x, w, b), oracle::dense(x, w, b)), 1e-6) << "trial " << trial;
    }
}

TEST(Dense, WeightGradientOfSumIsBroadcastInput)
{
    Tensor<double> x({1, 3}, std::vector<double>{0.5, -2.0, 4.0});
    Tensor<double> w({3, 2});
    Tensor<double> ones({1, 2}, 1.0);
    auto g = dense_backward(x, w, ones);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(g.weights.at(i, j), x.at(0, i));
    EXPECT_EQ(g.bias.storage(), (std::vector<double>{1, 1}));
}

// ---- activations ----

TEST(Activations, ReluAndSigmoidValues)
{
    Tensor<float> x({2}, std::vector<float>{-3, 3});
    EXPECT_EQ(relu(x).storage(), (std::vector<float>{0, 3}));
    EXPECT_EQ(sigmoid(0.0f), 0.5f);
    EXPECT_EQ(sigmoid(0.0), 0.5);
}

TEST(Activations, SigmoidTailsStayInsideOpenInterval)
{
    const double lo = sigmoid(-100.0);
    EXPECT_GT(lo, 0.0);
    EXPECT_LE(lo, 1e-40);
    EXPECT_LT(sigmoid(100.0), 1.0);
    EXPECT_GT(sigmoid(-1000.0f), 0.0f);
    EXPECT_LT(sigmoid(1000.0f), 1.0f);
    EXPECT_TRUE(std::isfinite(sigmoid(-1e30)));
}

TEST(Activations, SigmoidGradientAtZero)
{
    Tensor<double> y({1}, 0.5), g({1}, 1.0);
    EXPECT_EQ(sigmoid_backward(y, g)[0], 0.25);
}
