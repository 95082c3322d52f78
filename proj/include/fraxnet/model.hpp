#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fraxnet/autograd.hpp"
#include "fraxnet/error.hpp"
#include "fraxnet/ops.hpp"
#include "fraxnet/rng.hpp"
#include "fraxnet/tensor.hpp"

namespace fraxnet {

using ops::Mode;

/// Class encoding used everywhere: fractured is the positive class.
enum class Label : int { non_fractured = 0, fractured = 1 };

inline std::string_view label_name(Label l)
{
    return l == Label::fractured ? "fractured" : "non_fractured";
}

struct BlockConfig {
    std::size_t filters = 32;
    std::size_t kernel = 3;
    std::size_t pool = 2;
    double dropout_rate = 0.25;

    friend bool operator==(const BlockConfig&, const BlockConfig&) = default;
};

/// Architecture hyperparameters. Each block is
/// conv(same, stride 1) -> ReLU -> batch norm -> max pool -> dropout; the head
/// is flatten -> [dense -> ReLU -> dropout]* -> dense(1) -> sigmoid.
struct ModelConfig {
    std::size_t input_height = 128;
    std::size_t input_width = 128;
    std::size_t input_channels = 1;
    std::vector<BlockConfig> blocks{{32, 3, 2, 0.25}, {64, 3, 2, 0.25}, {128, 3, 2, 0.25}};
    std::vector<std::size_t> dense_units{128};
    double dense_dropout = 0.5;
    double bn_momentum = 0.99;
    double bn_epsilon = 1e-3;
    std::uint64_t seed = 42;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;

    /// Spatial size after every block, checked against the pooling schedule.
    std::pair<std::size_t, std::size_t> feature_map_size() const
    {
        auto h = input_height, w = input_width;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const auto& b = blocks[i];
            if (b.pool > h || b.pool > w)
                throw ValueError("block " + std::to_string(i + 1) + ": pool " + std::to_string(b.pool) +
                                 " exceeds feature map " + std::to_string(h) + "x" + std::to_string(w));
            h = (h - b.pool) / b.pool + 1;
            w = (w - b.pool) / b.pool + 1;
        }
        return {h, w};
    }

    std::size_t flatten_length() const
    {
        auto [h, w] = feature_map_size();
        return h * w * (blocks.empty() ? input_channels : blocks.back().filters);
    }

    void validate() const
    {
        if (input_height < 1 || input_width < 1) throw ValueError("input size must be positive");
        if (input_channels < 1) throw ValueError("input channels must be positive");
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const auto& b = blocks[i];
            const auto tag = "block " + std::to_string(i + 1) + ": ";
            if (b.filters < 1) throw ValueError(tag + "filters must be positive");
            if (b.kernel < 1) throw ValueError(tag + "kernel must be positive");
            if (b.pool < 1) throw ValueError(tag + "pool must be positive");
            if (!(b.dropout_rate >= 0.0 && b.dropout_rate < 1.0)) throw ValueError(tag + "dropout must be in [0,1)");
        }
        for (auto u : dense_units)
            if (u < 1) throw ValueError("dense units must be positive");
        if (!(dense_dropout >= 0.0 && dense_dropout < 1.0)) throw ValueError("dense dropout must be in [0,1)");
        if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ValueError("bn momentum must be in [0,1]");
        if (!(bn_epsilon > 0.0)) throw ValueError("bn epsilon must be positive");
        feature_map_size();
    }
};

enum class LayerKind { conv2d, relu, batch_norm, max_pool, dropout, flatten, dense, sigmoid };

struct LayerDescriptor {
    LayerKind kind;
    std::string name;  // e.g. "block2.conv", "dense1", "output"
    Shape output_shape;  // per-sample, without the batch axis
    std::size_t window = 0;  // kernel size for conv, pool size for pooling
    double rate = 0.0;  // dropout rate
};

template <Real T>
struct NamedTensor {
    std::string name;
    Tensor<T> value;
    bool trainable = true;
};

template <Real T>
struct ForwardPass {
    Graph<T> graph;
    Var logits;         // [N,1], pre-sigmoid
    Var probabilities;  // [N,1]
    std::map<std::string, Var> taps;  // layer name -> output node
};

/// The sequential fracture classifier. Owns trainable parameters and the
/// batch-norm running statistics (stored as non-trainable named tensors).
template <Real T>
class Model {
public:
    Model() = default;

    explicit Model(ModelConfig config) : config_(std::move(config))
    {
        config_.validate();
        build_layers();
        init_parameters();
    }

    const ModelConfig& config() const noexcept { return config_; }
    const std::vector<LayerDescriptor>& layers() const noexcept { return layers_; }

    std::span<NamedTensor<T>> parameters() noexcept { return params_; }
    std::span<const NamedTensor<T>> parameters() const noexcept { return params_; }

    Tensor<T>& parameter(std::string_view name) { return params_[index_of(name)].value; }
    const Tensor<T>& parameter(std::string_view name) const { return params_[index_of(name)].value; }
    bool has_parameter(std::string_view name) const { return find(name).has_value(); }

    std::size_t parameter_count(bool trainable_only = true) const
    {
        std::size_t n = 0;
        for (const auto& p : params_)
            if (p.trainable || !trainable_only) n += p.value.size();
        return n;
    }

    /// Name of the last convolution layer (the default Grad-CAM target).
    std::string last_conv_layer() const
    {
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
            if (it->kind == LayerKind::conv2d) return it->name;
        throw ValueError("model has no convolution layer");
    }

    const LayerDescriptor* layer(std::string_view name) const
    {
        for (const auto& l : layers_)
            if (l.name == name) return &l;
        return nullptr;
    }

    /// Train mode records batch statistics (updating running statistics) and
    /// applies dropout with masks derived from `dropout_seed`.
    ForwardPass<T> forward(const Tensor<T>& batch, Mode mode, std::uint64_t dropout_seed = 0)
    {
        if (mode == Mode::infer) return forward_infer(batch);
        return run(batch, Mode::train, dropout_seed, this);
    }

    /// Deterministic, state-preserving forward pass.
    ForwardPass<T> forward_infer(const Tensor<T>& batch) const { return run(batch, Mode::infer, 0, nullptr); }

    /// Infer-mode probabilities, shape [N,1].
    Tensor<T> probabilities(const Tensor<T>& batch) const
    {
        auto pass = forward_infer(batch);
        return pass.graph.value(pass.probabilities);
    }

    template <Real U>
    Model<U> cast() const
    {
        Model<U> m;
        m.config_ = config_;
        m.layers_ = layers_;
        for (const auto& p : params_) m.params_.push_back({p.name, p.value.template cast<U>(), p.trainable});
        return m;
    }

    friend bool operator==(const Model& a, const Model& b)
    {
        if (!(a.config_ == b.config_) || a.params_.size() != b.params_.size()) return false;
        for (std::size_t i = 0; i < a.params_.size(); ++i)
            if (a.params_[i].name != b.params_[i].name || !(a.params_[i].value == b.params_[i].value)) return false;
        return true;
    }

private:
    template <Real U>
    friend class Model;

    std::optional<std::size_t> find(std::string_view name) const
    {
        for (std::size_t i = 0; i < params_.size(); ++i)
            if (params_[i].name == name) return i;
        return std::nullopt;
    }

    std::size_t index_of(std::string_view name) const
    {
        auto i = find(name);
        if (!i) throw ValueError("unknown parameter '" + std::string(name) + "'");
        return *i;
    }

    void build_layers()
    {
        auto h = config_.input_height, w = config_.input_width;
        for (std::size_t b = 0; b < config_.blocks.size(); ++b) {
            const auto& blk = config_.blocks[b];
            const auto p = "block" + std::to_string(b + 1) + ".";
            layers_.push_back({LayerKind::conv2d, p + "conv", {h, w, blk.filters}, blk.kernel, 0.0});
            layers_.push_back({LayerKind::relu, p + "relu", {h, w, blk.filters}});
            layers_.push_back({LayerKind::batch_norm, p + "bn", {h, w, blk.filters}});
            h = (h - blk.pool) / blk.pool + 1;
            w = (w - blk.pool) / blk.pool + 1;
            layers_.push_back({LayerKind::max_pool, p + "pool", {h, w, blk.filters}, blk.pool, 0.0});
            layers_.push_back({LayerKind::dropout, p + "dropout", {h, w, blk.filters}, 0, blk.dropout_rate});
        }
        std::size_t width = config_.flatten_length();
        layers_.push_back({LayerKind::flatten, "flatten", {width}});
        for (std::size_t d = 0; d < config_.dense_units.size(); ++d) {
            const auto u = config_.dense_units[d];
            const auto p = "dense" + std::to_string(d + 1);
            layers_.push_back({LayerKind::dense, p, {u}});
            layers_.push_back({LayerKind::relu, p + ".relu", {u}});
            layers_.push_back({LayerKind::dropout, p + ".dropout", {u}, 0, config_.dense_dropout});
        }
        layers_.push_back({LayerKind::dense, "output", {1}});
        layers_.push_back({LayerKind::sigmoid, "output.sigmoid", {1}});
    }

    // Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases,
    // gamma 1, beta 0, running mean 0, running variance 1. Each tensor draws
    // from its own stream seeded by (config seed, tensor index).
    void init_parameters()
    {
        auto glorot = [this](std::string name, Shape shape, std::size_t fan_in, std::size_t fan_out) {
            Rng rng(mix_seed({config_.seed, params_.size()}));
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            Tensor<T> t(std::move(shape));
            for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-limit, limit));
            params_.push_back({std::move(name), std::move(t), true});
        };
        auto constant = [this](std::string name, std::size_t n, T value, bool trainable) {
            params_.push_back({std::move(name), Tensor<T>({n}, value), trainable});
        };

        auto channels = config_.input_channels;
        for (std::size_t b = 0; b < config_.blocks.size(); ++b) {
            const auto& blk = config_.blocks[b];
            const auto p = "block" + std::to_string(b + 1) + ".";
            const auto area = blk.kernel * blk.kernel;
            glorot(p + "conv.kernel", {blk.kernel, blk.kernel, channels, blk.filters}, area * channels,
                   area * blk.filters);
            constant(p + "conv.bias", blk.filters, T{0}, true);
            constant(p + "bn.gamma", blk.filters, T{1}, true);
            constant(p + "bn.beta", blk.filters, T{0}, true);
            constant(p + "bn.running_mean", blk.filters, T{0}, false);
            constant(p + "bn.running_var", blk.filters, T{1}, false);
            channels = blk.filters;
        }
        auto width = config_.flatten_length();
        for (std::size_t d = 0; d < config_.dense_units.size(); ++d) {
            const auto u = config_.dense_units[d];
            const auto p = "dense" + std::to_string(d + 1) + ".";
            glorot(p + "weights", {width, u}, width, u);
            constant(p + "bias", u, T{0}, true);
            width = u;
        }
        glorot("output.weights", {width, 1}, width, 1);
        constant("output.bias", 1, T{0}, true);
    }

    // One shared path for both modes. `stats` is null in infer mode, so the
    // infer path cannot reach the running statistics mutably.
    ForwardPass<T> run(const Tensor<T>& batch, Mode mode, std::uint64_t dropout_seed, Model* stats) const
    {
        const Shape expected{config_.input_height, config_.input_width, config_.input_channels};
        if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != expected)
            throw ShapeError("model expects a batch of shape [N," + std::to_string(expected[0]) + "," +
                             std::to_string(expected[1]) + "," + std::to_string(expected[2]) + "], got " +
                             shape_string(batch.shape()));

        ForwardPass<T> pass;
        auto& g = pass.graph;
        std::map<std::string, Var> vars;
        for (const auto& p : params_)
            if (p.trainable) vars.emplace(p.name, g.parameter(p.name, p.value));
        const ops::BatchNormOptions bn{config_.bn_momentum, config_.bn_epsilon};

        Var x = g.constant(batch);
        std::size_t dropout_index = 0;
        auto next_seed = [&] { return mix_seed({dropout_seed, dropout_index++}); };

        for (std::size_t b = 0; b < config_.blocks.size(); ++b) {
            const auto& blk = config_.blocks[b];
            const auto p = "block" + std::to_string(b + 1) + ".";
            x = g.conv2d(x, vars.at(p + "conv.kernel"), vars.at(p + "conv.bias"), 1, ops::Padding::same);
            pass.taps[p + "conv.linear"] = x;
            x = g.relu(x);
            pass.taps[p + "conv"] = x;
            if (stats) {
                x = g.batch_norm_train(x, vars.at(p + "bn.gamma"), vars.at(p + "bn.beta"),
                                       stats->parameter(p + "bn.running_mean"), stats->parameter(p + "bn.running_var"),
                                       bn);
            } else {
                x = g.batch_norm_infer(x, vars.at(p + "bn.gamma"), vars.at(p + "bn.beta"),
                                       parameter(p + "bn.running_mean"), parameter(p + "bn.running_var"),
                                       config_.bn_epsilon);
            }
            pass.taps[p + "bn"] = x;
            x = g.max_pool(x, blk.pool, blk.pool);
            pass.taps[p + "pool"] = x;
            x = g.dropout(x, blk.dropout_rate, next_seed(), mode);
            pass.taps[p + "dropout"] = x;
        }
        x = g.flatten(x);
        pass.taps["flatten"] = x;
        for (std::size_t d = 0; d < config_.dense_units.size(); ++d) {
            const auto p = "dense" + std::to_string(d + 1);
            x = g.dense(x, vars.at(p + ".weights"), vars.at(p + ".bias"));
            pass.taps[p] = x;
            x = g.relu(x);
            x = g.dropout(x, config_.dense_dropout, next_seed(), mode);
        }
        pass.logits = g.dense(x, vars.at("output.weights"), vars.at("output.bias"));
        pass.taps["output"] = pass.logits;
        pass.probabilities = g.sigmoid(pass.logits);
        pass.taps["output.sigmoid"] = pass.probabilities;
        return pass;
    }

    ModelConfig config_;
    std::vector<LayerDescriptor> layers_;
    std::vector<NamedTensor<T>> params_;
};

template <Real T>
Model<T> build_custom_cnn(const ModelConfig& config)
{
    return Model<T>(config);
}

struct Prediction {
    double probability;
    Label label;
};

/// Decision rule: fractured iff probability >= threshold (inclusive).
inline Label classify(double probability, double threshold = 0.5)
{
    return probability >= threshold ? Label::fractured : Label::non_fractured;
}

/// Classifies one preprocessed image [H,W,C] with values in [0,1].
template <Real T>
Prediction predict(const Model<T>& model, const Tensor<T>& image, double threshold = 0.5)
{
    require_rank(image, 3, "predict image");
    for (auto v : image.data())
        if (!(v >= T{0} && v <= T{1}))
            throw ValueError("predict expects pixel values in [0,1]; normalize the image first");
    Shape s{1};
    s.insert(s.end(), image.shape().begin(), image.shape().end());
    const auto probs = model.probabilities(image.reshaped(std::move(s)));
    const double p = probs[0];
    return {p, classify(p, threshold)};
}

}  // namespace fraxnet
