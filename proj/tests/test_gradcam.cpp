#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace fraxnet;

namespace {

std::size_t argmax(const Heatmap& hm)
{
    return static_cast<std::size_t>(std::max_element(hm.values.begin(), hm.values.end()) - hm.values.begin());
}

void expect_normalized(const Heatmap& hm)
{
    double mx = 0.0;
    for (double v : hm.values) {
        ASSERT_FALSE(std::isnan(v));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        mx = std::max(mx, v);
    }
    EXPECT_TRUE(mx == 0.0 || mx == 1.0) << mx;
}

Tensor<float> image_tensor(const ImageBuffer& img) { return normalize<float>(img); }

}  // namespace

TEST(GradCam, RangeAndPeakOnRandomModels)
{
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto cfg = oracle::toy_model_config(32);
        cfg.seed = seed;
        const Model<float> model(cfg);
        const auto img = synthetic_radiograph(32, seed % 2 ? Label::fractured : Label::non_fractured, seed);
        const auto hm = gradcam(model, image_tensor(img));
        EXPECT_EQ(hm.height, 32u);
        EXPECT_EQ(hm.width, 32u);
        EXPECT_EQ(hm.source_layer, "block3.conv");
        expect_normalized(hm);
    }
}

TEST(GradCam, ConstantActivationsGiveUniformMap)
{
    const auto model = oracle::passthrough_model<float>(32, 0.0);
    const auto hm = gradcam(model, image_tensor(ImageBuffer(32, 32, 1, 128)));
    expect_normalized(hm);
    for (double v : hm.values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(GradCam, DominantQuadrantHoldsArgmax)
{
    const auto model = oracle::passthrough_model<float>(32, 0.0);
    for (int q = 0; q < 4; ++q) {
        const std::size_t y0 = q / 2 ? 16 : 0, x0 = q % 2 ? 16 : 0;
        ImageBuffer img(32, 32, 1, 0);
        for (std::size_t y = y0; y < y0 + 16; ++y)
            for (std::size_t x = x0; x < x0 + 16; ++x) img.pixels[y * 32 + x] = 255;
        const auto hm = gradcam(model, image_tensor(img));
        expect_normalized(hm);
        const auto i = argmax(hm);
        EXPECT_EQ(i / 32 / 16, y0 / 16) << "quadrant " << q;
        EXPECT_EQ(i % 32 / 16, x0 / 16) << "quadrant " << q;
        // Away from the bright quadrant (beyond the 4-pixel upsampling
        // footprint of one final cell) the map is zero.
        double outside = 0.0;
        for (std::size_t y = 0; y < 32; ++y)
            for (std::size_t x = 0; x < 32; ++x)
                if (y + 4 < y0 || y >= y0 + 20 || x + 4 < x0 || x >= x0 + 20) outside = std::max(outside, hm.at(y, x));
        EXPECT_EQ(outside, 0.0) << "quadrant " << q;
    }
}

TEST(GradCam, ZeroFinalWeightsGiveZeroMap)
{
    Model<float> model(oracle::toy_model_config(32));
    model.parameter("output.weights").fill(0.0f);
    const auto hm = gradcam(model, image_tensor(synthetic_radiograph(32, Label::fractured, 3)));
    for (double v : hm.values) {
        ASSERT_FALSE(std::isnan(v));
        EXPECT_EQ(v, 0.0);
    }
}

TEST(GradCam, InvariantToPositiveOutputScaling)
{
    Model<float> model(oracle::toy_model_config(32));
    const auto img = image_tensor(synthetic_radiograph(32, Label::fractured, 9));
    const auto a = gradcam(model, img);
    for (auto& v : model.parameter("output.weights").data()) v *= 3.0f;
    const auto b = gradcam(model, img);
    ASSERT_EQ(a.values.size(), b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-5);
    EXPECT_EQ(argmax(a), argmax(b));
}

TEST(GradCam, LayerSelection)
{
    const Model<float> model(oracle::toy_model_config(32));
    const auto img = image_tensor(synthetic_radiograph(32, Label::fractured, 2));
    const auto hm = gradcam(model, img, "block1.conv");
    EXPECT_EQ(hm.source_layer, "block1.conv");
    expect_normalized(hm);
    EXPECT_THROW(gradcam(model, img, "block9.conv"), ValueError);
    EXPECT_THROW(gradcam(model, img, "block1.bn"), ValueError);
    EXPECT_THROW(gradcam(model, img, "dense1"), ValueError);
}

TEST(GradCam, DoesNotModifyModel)
{
    const Model<float> model(oracle::toy_model_config(32));
    const auto copy = model;
    gradcam(model, image_tensor(synthetic_radiograph(32, Label::fractured, 4)));
    EXPECT_TRUE(model == copy);
}

TEST(GradCam, WrongImageShapeRejected)
{
    const Model<float> model(oracle::toy_model_config(32));
    EXPECT_THROW(gradcam(model, Tensor<float>({16, 16, 1})), ShapeError);
    EXPECT_THROW(gradcam(model, Tensor<float>({32, 32})), ShapeError);
}

TEST(Overlay, AlphaZeroReplicatesGray)
{
    std::mt19937 gen(5);
    ImageBuffer img(7, 5, 1);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(gen() % 256);
    Heatmap hm{5, 7, std::vector<double>(35, 0.7), "x"};
    const auto out = overlay(img, hm, 0.0);
    ASSERT_EQ(out.channels, 3u);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        for (int c = 0; c < 3; ++c) EXPECT_EQ(out.pixels[3 * i + c], img.pixels[i]);
}

TEST(Overlay, AlphaOneFullHeatIsRed)
{
    ImageBuffer img(3, 3, 1, 77);
    Heatmap hm{3, 3, std::vector<double>(9, 1.0), "x"};
    const auto out = overlay(img, hm, 1.0);
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_EQ(out.pixels[3 * i], 255);
        EXPECT_EQ(out.pixels[3 * i + 1], 0);
        EXPECT_EQ(out.pixels[3 * i + 2], 0);
    }
}

TEST(Overlay, BlendArithmetic)
{
    ImageBuffer img(1, 1, 1, 100);
    Heatmap hm{1, 1, {0.5}, "x"};
    const auto out = overlay(img, hm);
    EXPECT_EQ(out.pixels[0], 111);
    EXPECT_EQ(out.pixels[1], 60);
    EXPECT_EQ(out.pixels[2], 60);
}

TEST(Overlay, ColorInputUsesLuma)
{
    ImageBuffer img(1, 1, 3, std::vector<std::uint8_t>{100, 100, 100});
    Heatmap hm{1, 1, {0.0}, "x"};
    EXPECT_EQ(overlay(img, hm, 0.5).pixels[0], 50);
}

TEST(Overlay, Errors)
{
    ImageBuffer img(4, 4, 1);
    Heatmap hm{4, 4, std::vector<double>(16, 0.0), "x"};
    EXPECT_THROW(overlay(img, hm, -0.1), ValueError);
    EXPECT_THROW(overlay(img, hm, 1.1), ValueError);
    EXPECT_THROW(overlay(img, hm, NAN), ValueError);
    Heatmap small{2, 4, std::vector<double>(8, 0.0), "x"};
    EXPECT_THROW(overlay(img, small), ShapeError);
}

TEST(HeatmapImage, ScalesTo255)
{
    Heatmap hm{1, 3, {0.0, 0.5, 1.0}, "x"};
    const auto img = heatmap_image(hm);
    EXPECT_EQ(img.channels, 1u);
    EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 128, 255}));
}
