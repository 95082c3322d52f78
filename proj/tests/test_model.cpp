#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace fraxnet;
using oracle::random_tensor;

TEST(ModelConfig, DefaultFlattenLength)
{
    ModelConfig c;
    EXPECT_EQ(c.feature_map_size(), (std::pair<std::size_t, std::size_t>{16, 16}));
    EXPECT_EQ(c.flatten_length(), 16u * 16u * 128u);
    EXPECT_EQ(c.flatten_length(), 32768u);
}

TEST(ModelConfig, ValidationErrors)
{
    ModelConfig c;
    c.input_height = 4;
    c.input_width = 4;
    EXPECT_THROW(c.validate(), ValueError);  // third pool would exceed a 1x1 map
    ModelConfig d;
    d.blocks[1].dropout_rate = 1.0;
    EXPECT_THROW(d.validate(), ValueError);
    ModelConfig e;
    e.blocks[0].filters = 0;
    EXPECT_THROW(e.validate(), ValueError);
}

TEST(Model, DefaultParameterCountTwoWays)
{
    const Model<float> m(ModelConfig{});
    // Layer-by-layer shape arithmetic.
    std::size_t trainable = 0, frozen = 0, in_c = 1;
    for (std::size_t f : {32, 64, 128}) {
        trainable += 3 * 3 * in_c * f + f;  // kernel + bias
        trainable += 2 * f;                 // gamma, beta
        frozen += 2 * f;                    // running mean, variance
        in_c = f;
    }
    trainable += 32768 * 128 + 128;
    trainable += 128 * 1 + 1;
    EXPECT_EQ(trainable, 4287681u);
    EXPECT_EQ(frozen, 448u);
    // Sum over the stored tensors.
    std::size_t counted = 0;
    for (const auto& p : m.parameters()) counted += p.value.size();
    EXPECT_EQ(m.parameter_count(true), trainable);
    EXPECT_EQ(m.parameter_count(false), trainable + frozen);
    EXPECT_EQ(counted, trainable + frozen);
}

TEST(Model, LayerSequence)
{
    const Model<float> m(oracle::toy_model_config(32));
    std::vector<std::string> names;
    for (const auto& l : m.layers()) names.push_back(l.name);
    const std::vector<std::string> expected{
        "block1.conv", "block1.relu", "block1.bn", "block1.pool", "block1.dropout",
        "block2.conv", "block2.relu", "block2.bn", "block2.pool", "block2.dropout",
        "block3.conv", "block3.relu", "block3.bn", "block3.pool", "block3.dropout",
        "flatten", "dense1", "dense1.relu", "dense1.dropout", "output", "output.sigmoid"};
    EXPECT_EQ(names, expected);
    EXPECT_EQ(m.last_conv_layer(), "block3.conv");
    EXPECT_EQ(m.layer("flatten")->output_shape, (Shape{4 * 4 * 128}));
}

TEST(Model, ForwardShapeAndRange)
{
    const Model<float> m(oracle::toy_model_config(32));
    std::mt19937_64 gen(1);
    auto x = random_tensor<float>({4, 32, 32, 1}, gen, 0.0, 1.0);
    auto p = m.probabilities(x);
    ASSERT_EQ(p.shape(), (Shape{4, 1}));
    for (auto v : p.data()) {
        EXPECT_GT(v, 0.0f);
        EXPECT_LT(v, 1.0f);
    }
}

TEST(Model, RejectsWrongInputShape)
{
    const Model<float> m(oracle::toy_model_config(32));
    EXPECT_THROW(m.probabilities(Tensor<float>({1, 16, 32, 1})), ShapeError);
    EXPECT_THROW(m.probabilities(Tensor<float>({32, 32, 1})), ShapeError);
}

TEST(Model, EqualSeedsGiveIdenticalParameters)
{
    const auto cfg = oracle::toy_model_config(32);
    EXPECT_TRUE(Model<float>(cfg) == Model<float>(cfg));
    auto other = cfg;
    other.seed = cfg.seed + 1;
    EXPECT_FALSE(Model<float>(cfg) == Model<float>(other));
}

TEST(Model, ZeroOutputLayerGivesOneHalf)
{
    Model<float> m(oracle::toy_model_config(32));
    m.parameter("output.weights").fill(0.0f);
    m.parameter("output.bias").fill(0.0f);
    std::mt19937_64 gen(2);
    auto p = m.probabilities(random_tensor<float>({3, 32, 32, 1}, gen, 0.0, 1.0));
    for (auto v : p.data()) EXPECT_EQ(v, 0.5f);
}

TEST(Model, InferIsPureAndTrainDiffers)
{
    Model<float> m(oracle::toy_model_config(32));
    std::mt19937_64 gen(3);
    auto x = random_tensor<float>({2, 32, 32, 1}, gen, 0.0, 1.0);
    const auto before = m;
    auto a = m.probabilities(x);
    auto b = m.probabilities(x);
    EXPECT_EQ(a, b);
    EXPECT_TRUE(m == before);

    auto pass = m.forward(x, ops::Mode::train, 9);
    EXPECT_NE(pass.graph.value(pass.taps.at("dense1")), m.forward_infer(x).graph.value(m.forward_infer(x).taps.at("dense1")));
    EXPECT_NE(m.parameter("block1.bn.running_mean"), before.parameter("block1.bn.running_mean"));
}

TEST(Model, TrainModeDropoutChangesOutputs)
{
    // Default flatten on 128x128: 32768 units, so masks differ in output.
    Model<float> m(ModelConfig{});
    std::mt19937_64 gen(4);
    auto x = random_tensor<float>({1, 128, 128, 1}, gen, 0.0, 1.0);
    auto train = m.forward(x, ops::Mode::train, 1);
    auto again = m.forward(x, ops::Mode::train, 2);
    EXPECT_NE(train.graph.value(train.taps.at("block3.dropout")), again.graph.value(again.taps.at("block3.dropout")));
}

TEST(Model, CastPreservesStructure)
{
    Model<float> m(oracle::toy_model_config(32));
    auto d = m.cast<double>();
    EXPECT_EQ(d.parameter_count(false), m.parameter_count(false));
    EXPECT_TRUE(d.cast<float>() == m);
}

TEST(Predict, ThresholdIsInclusive)
{
    EXPECT_EQ(classify(0.88), Label::fractured);
    EXPECT_EQ(classify(0.5), Label::fractured);
    EXPECT_EQ(classify(0.4999999), Label::non_fractured);
    EXPECT_EQ(classify(0.3, 0.25), Label::fractured);
}

TEST(Predict, ZeroOutputLayerPredictsFractured)
{
    Model<float> m(oracle::toy_model_config(32));
    m.parameter("output.weights").fill(0.0f);
    auto r = predict(m, Tensor<float>({32, 32, 1}, 0.3f));
    EXPECT_EQ(r.probability, 0.5);
    EXPECT_EQ(r.label, Label::fractured);
    EXPECT_THROW(predict(m, Tensor<float>({32, 32, 1}, 2.0f)), ValueError);
}

TEST(Model, FullArchitectureGradientsMatchFiniteDifferences)
{
    Model<double> m(oracle::toy_model_config(16));
    std::mt19937_64 gen(5);
    auto x = random_tensor<double>({2, 16, 16, 1}, gen, 0.0, 1.0);
    Tensor<double> y({2, 1}, std::vector<double>{1, 0});
    const auto rows = oracle::model_gradient_check(m, x, y, 8);
    EXPECT_EQ(rows.size(), 16u);
    for (const auto& r : rows) EXPECT_LT(r.max_rel_error, 1e-4) << r.name;
}
