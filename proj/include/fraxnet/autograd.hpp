#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fraxnet/error.hpp"
#include "fraxnet/ops.hpp"
#include "fraxnet/tensor.hpp"

namespace fraxnet {

enum class OpTag {
    constant,
    parameter,
    conv2d,
    relu,
    sigmoid,
    batch_norm,
    max_pool,
    dropout,
    dense,
    flatten,
    sum,
    bce_with_logits,
};

/// Handle to a node on a Graph.
struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
};

template <Real T>
class Graph;

/// Result of Graph::backward. Parameter gradients are keyed by parameter
/// name; intermediate node gradients are kept only for nodes listed in the
/// `retain` argument of backward().
template <Real T>
class Gradients {
public:
    const std::map<std::string, Tensor<T>>& params() const noexcept { return params_; }
    const Tensor<T>& param(const std::string& name) const
    {
        auto it = params_.find(name);
        if (it == params_.end()) throw GraphError("no gradient recorded for parameter '" + name + "'");
        return it->second;
    }
    const Tensor<T>& of(Var v) const
    {
        auto it = retained_.find(v.id);
        if (it == retained_.end()) throw GraphError("gradient for node was not retained");
        return it->second;
    }

private:
    friend class Graph<T>;
    std::map<std::string, Tensor<T>> params_;
    std::map<std::size_t, Tensor<T>> retained_;
};

/// Tape of recorded operations. Nodes are appended in evaluation order, so
/// the tape is a topological order and reverse iteration visits each node
/// exactly once after all of its consumers. A graph is single-use: backward()
/// consumes it. Not thread-safe; confine one recording to one thread.
template <Real T>
class Graph {
public:
    // Receives the output gradient and a flag per input saying whether that
    // input needs a gradient; returns one tensor per input (empty if unused).
    using BackwardFn = std::function<std::vector<Tensor<T>>(const Tensor<T>&, const std::vector<bool>&)>;

    Var constant(Tensor<T> value) { return push(OpTag::constant, {}, std::move(value), {}, false); }

    Var parameter(std::string name, Tensor<T> value)
    {
        for (const auto& n : nodes_)
            if (n.op == OpTag::parameter && n.name == name)
                throw GraphError("parameter '" + name + "' recorded twice");
        auto v = push(OpTag::parameter, {}, std::move(value), {}, true);
        nodes_[v.id].name = std::move(name);
        return v;
    }

    const Tensor<T>& value(Var v) const { return node(v).value; }
    OpTag op(Var v) const { return node(v).op; }
    std::span<const std::size_t> inputs(Var v) const { return node(v).inputs; }
    std::size_t size() const noexcept { return nodes_.size(); }
    bool consumed() const noexcept { return consumed_; }

    Var conv2d(Var x, Var kernels, Var bias, std::size_t stride, ops::Padding padding)
    {
        auto out = ops::conv2d_forward(value(x), value(kernels), value(bias), stride, padding);
        auto xin = value(x);
        auto kin = value(kernels);
        return push(OpTag::conv2d, {x.id, kernels.id, bias.id}, std::move(out),
                    [xin = std::move(xin), kin = std::move(kin), stride, padding](const Tensor<T>& g,
                                                                                  const std::vector<bool>& need) {
                        auto r = ops::conv2d_backward(xin, kin, g, stride, padding, need[0]);
                        return std::vector<Tensor<T>>{std::move(r.input), std::move(r.kernels), std::move(r.bias)};
                    });
    }

    Var relu(Var x)
    {
        auto xin = value(x);
        auto out = ops::relu(xin);
        return push(OpTag::relu, {x.id}, std::move(out),
                    [xin = std::move(xin)](const Tensor<T>& g, const std::vector<bool>&) {
                        return std::vector<Tensor<T>>{ops::relu_backward(xin, g)};
                    });
    }

    Var sigmoid(Var x)
    {
        auto out = ops::sigmoid(value(x));
        auto saved = out;
        return push(OpTag::sigmoid, {x.id}, std::move(out),
                    [saved = std::move(saved)](const Tensor<T>& g, const std::vector<bool>&) {
                        return std::vector<Tensor<T>>{ops::sigmoid_backward(saved, g)};
                    });
    }

    /// Train mode: batch statistics, running statistics updated in place.
    Var batch_norm_train(Var x, Var gamma, Var beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                         const ops::BatchNormOptions& opts)
    {
        ops::BatchNormCache<T> cache;
        auto out = ops::batchnorm_forward(value(x), value(gamma), value(beta), running_mean, running_var,
                                          ops::Mode::train, opts, &cache);
        auto gin = value(gamma);
        return push(OpTag::batch_norm, {x.id, gamma.id, beta.id}, std::move(out),
                    [cache = std::move(cache), gin = std::move(gin)](const Tensor<T>& g, const std::vector<bool>&) {
                        auto r = ops::batchnorm_backward(g, gin, cache);
                        return std::vector<Tensor<T>>{std::move(r.input), std::move(r.gamma), std::move(r.beta)};
                    });
    }

    /// Infer mode: running statistics are read, never written.
    Var batch_norm_infer(Var x, Var gamma, Var beta, const Tensor<T>& running_mean, const Tensor<T>& running_var,
                         double epsilon)
    {
        const auto& xv = value(x);
        auto out = ops::batchnorm_infer(xv, value(gamma), value(beta), running_mean, running_var, epsilon);
        auto gin = value(gamma);
        auto rm = running_mean;
        auto rv = running_var;
        return push(OpTag::batch_norm, {x.id, gamma.id, beta.id}, std::move(out),
                    [xv, gin = std::move(gin), rm = std::move(rm), rv = std::move(rv), epsilon](
                        const Tensor<T>& g, const std::vector<bool>& need) {
                        std::vector<Tensor<T>> r(3);
                        if (need[0]) r[0] = ops::batchnorm_infer_backward(g, gin, rv, epsilon);
                        const auto c = gin.size();
                        Tensor<T> dg({c}), db({c});
                        for (std::size_t i = 0; i < g.size(); ++i) {
                            const auto ch = i % c;
                            const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(rv[ch]) + epsilon));
                            dg[ch] += g[i] * (xv[i] - rm[ch]) * inv;
                            db[ch] += g[i];
                        }
                        r[1] = std::move(dg);
                        r[2] = std::move(db);
                        return r;
                    });
    }

    Var max_pool(Var x, std::size_t window, std::size_t stride)
    {
        auto r = ops::maxpool2d(value(x), window, stride);
        auto in_shape = value(x).shape();
        return push(OpTag::max_pool, {x.id}, std::move(r.output),
                    [argmax = std::move(r.argmax), in_shape = std::move(in_shape)](const Tensor<T>& g,
                                                                                   const std::vector<bool>&) {
                        return std::vector<Tensor<T>>{ops::maxpool2d_backward(g, argmax, in_shape)};
                    });
    }

    Var dropout(Var x, double rate, std::uint64_t seed, ops::Mode mode)
    {
        auto r = ops::dropout_forward(value(x), rate, seed, mode);
        if (r.mask.empty()) {
            return push(OpTag::dropout, {x.id}, std::move(r.output),
                        [](const Tensor<T>& g, const std::vector<bool>&) { return std::vector<Tensor<T>>{g}; });
        }
        return push(OpTag::dropout, {x.id}, std::move(r.output),
                    [mask = std::move(r.mask)](const Tensor<T>& g, const std::vector<bool>&) {
                        Tensor<T> dx(g);
                        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask[i];
                        return std::vector<Tensor<T>>{std::move(dx)};
                    });
    }

    Var dense(Var x, Var weights, Var bias)
    {
        auto out = ops::dense_forward(value(x), value(weights), value(bias));
        auto xin = value(x);
        auto win = value(weights);
        return push(OpTag::dense, {x.id, weights.id, bias.id}, std::move(out),
                    [xin = std::move(xin), win = std::move(win)](const Tensor<T>& g, const std::vector<bool>& need) {
                        auto r = ops::dense_backward(xin, win, g, need[0]);
                        return std::vector<Tensor<T>>{std::move(r.input), std::move(r.weights), std::move(r.bias)};
                    });
    }

    Var flatten(Var x)
    {
        auto in_shape = value(x).shape();
        return push(OpTag::flatten, {x.id}, ops::flatten(value(x)),
                    [in_shape = std::move(in_shape)](const Tensor<T>& g, const std::vector<bool>&) {
                        return std::vector<Tensor<T>>{g.reshaped(in_shape)};
                    });
    }

    /// Sum of all elements, as a one-element tensor.
    Var sum(Var x)
    {
        const auto& xv = value(x);
        double s = 0.0;
        for (auto v : xv.data()) s += v;
        auto in_shape = xv.shape();
        return push(OpTag::sum, {x.id}, Tensor<T>::scalar(static_cast<T>(s)),
                    [in_shape = std::move(in_shape)](const Tensor<T>& g, const std::vector<bool>&) {
                        return std::vector<Tensor<T>>{Tensor<T>(in_shape, g[0])};
                    });
    }

    /// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels, in
    /// the fused form max(z,0) - z*y + log(1+exp(-|z|)). Positive samples are
    /// weighted by `positive_weight`.
    Var bce_with_logits(Var logits, const Tensor<T>& labels, double positive_weight = 1.0);

    /// Reverse-mode sweep from a one-element node. Consumes the graph.
    Gradients<T> backward(Var output, std::span<const Var> retain = {})
    {
        if (consumed_) throw GraphError("backward called on a consumed graph");
        const auto& out = node(output);
        if (out.value.size() != 1)
            throw GraphError("backward needs a scalar output, got shape " + shape_string(out.value.shape()));
        consumed_ = true;

        std::vector<bool> keep(nodes_.size(), false);
        for (auto v : retain) keep[node_index(v)] = true;

        std::vector<Tensor<T>> grads(nodes_.size());
        grads[output.id] = Tensor<T>(out.value.shape(), T{1});
        Gradients<T> result;
        for (std::size_t i = output.id + 1; i-- > 0;) {
            auto& n = nodes_[i];
            if (grads[i].empty()) {
                if (n.op == OpTag::parameter) result.params_.emplace(n.name, Tensor<T>(n.value.shape()));
                continue;
            }
            if (keep[i]) result.retained_.emplace(i, grads[i]);
            if (n.op == OpTag::parameter) {
                result.params_.emplace(n.name, std::move(grads[i]));
                continue;
            }
            if (n.backward) {
                std::vector<bool> need(n.inputs.size());
                for (std::size_t k = 0; k < n.inputs.size(); ++k) need[k] = nodes_[n.inputs[k]].requires_grad;
                auto in_grads = n.backward(grads[i], need);
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    if (!need[k] || in_grads[k].empty()) continue;
                    auto& dst = grads[n.inputs[k]];
                    if (dst.empty()) {
                        dst = std::move(in_grads[k]);
                    } else {
                        for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += in_grads[k][e];
                    }
                }
            }
            grads[i] = Tensor<T>();
            n.backward = nullptr;  // release saved tensors
        }
        // Parameters never reached from the output get zero gradients.
        for (const auto& n : nodes_)
            if (n.op == OpTag::parameter && !result.params_.contains(n.name))
                result.params_.emplace(n.name, Tensor<T>(n.value.shape()));
        return result;
    }

private:
    struct Node {
        OpTag op;
        std::vector<std::size_t> inputs;
        Tensor<T> value;
        BackwardFn backward;
        bool requires_grad = false;
        std::string name;
    };

    std::size_t node_index(Var v) const
    {
        if (v.id >= nodes_.size()) throw GraphError("variable does not belong to this graph");
        return v.id;
    }

    const Node& node(Var v) const { return nodes_[node_index(v)]; }

    Var push(OpTag op, std::vector<std::size_t> inputs, Tensor<T> value, BackwardFn backward, bool leaf_grad = false)
    {
        if (consumed_) throw GraphError("cannot record on a consumed graph");
        if (op != OpTag::constant && op != OpTag::parameter) ensure_finite(value, op_name(op));
        bool needs_grad = leaf_grad;
        for (auto i : inputs) needs_grad = needs_grad || nodes_[i].requires_grad;
        nodes_.push_back(Node{op, std::move(inputs), std::move(value), needs_grad ? std::move(backward) : nullptr,
                              needs_grad, {}});
        return Var{nodes_.size() - 1};
    }

    static const char* op_name(OpTag op)
    {
        switch (op) {
        case OpTag::constant: return "constant";
        case OpTag::parameter: return "parameter";
        case OpTag::conv2d: return "conv2d";
        case OpTag::relu: return "relu";
        case OpTag::sigmoid: return "sigmoid";
        case OpTag::batch_norm: return "batch_norm";
        case OpTag::max_pool: return "max_pool";
        case OpTag::dropout: return "dropout";
        case OpTag::dense: return "dense";
        case OpTag::flatten: return "flatten";
        case OpTag::sum: return "sum";
        case OpTag::bce_with_logits: return "bce_with_logits";
        }
        return "op";
    }

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

namespace detail {

template <Real T>
void check_binary_labels(const Tensor<T>& labels)
{
    for (auto y : labels.data())
        if (y != T{0} && y != T{1}) throw ValueError("labels must be 0 or 1");
}

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace detail

template <Real T>
Var Graph<T>::bce_with_logits(Var logits, const Tensor<T>& labels, double positive_weight)
{
    const auto& z = value(logits);
    if (z.size() != labels.size()) throw ShapeError("bce: logits and labels differ in size");
    detail::check_binary_labels(labels);
    const auto n = static_cast<double>(z.size());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double zi = z[i];
        // y*softplus(-z) + (1-y)*softplus(z)
        total += labels[i] == T{1} ? positive_weight * detail::softplus(-zi) : detail::softplus(zi);
    }
    auto zs = z;
    auto ys = labels;
    return push(OpTag::bce_with_logits, {logits.id}, Tensor<T>::scalar(static_cast<T>(total / n)),
                [zs = std::move(zs), ys = std::move(ys), positive_weight, n](const Tensor<T>& g,
                                                                             const std::vector<bool>&) {
                    Tensor<T> dz(zs.shape());
                    const double scale = static_cast<double>(g[0]) / n;
                    for (std::size_t i = 0; i < zs.size(); ++i) {
                        const double p = ops::sigmoid(static_cast<double>(zs[i]));
                        const double d = ys[i] == T{1} ? positive_weight * (p - 1.0) : p;
                        dz[i] = static_cast<T>(d * scale);
                    }
                    return std::vector<Tensor<T>>{std::move(dz)};
                });
}

}  // namespace fraxnet
