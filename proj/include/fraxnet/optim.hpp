#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>

#include "fraxnet/autograd.hpp"
#include "fraxnet/error.hpp"
#include "fraxnet/model.hpp"
#include "fraxnet/ops.hpp"
#include "fraxnet/tensor.hpp"

namespace fraxnet {

// ---------------------------------------------------------------------------
// Binary cross-entropy
// ---------------------------------------------------------------------------

/// Mean BCE of sigmoid(logits) against 0/1 labels, evaluated in the fused
/// form so it stays finite for any finite logit.
template <Real T>
double bce_with_logits(const Tensor<T>& logits, const Tensor<T>& labels, double positive_weight = 1.0)
{
    if (logits.size() != labels.size()) throw ShapeError("bce: logits and labels differ in size");
    detail::check_binary_labels(labels);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        total += labels[i] == T{1} ? positive_weight * detail::softplus(-z) : detail::softplus(z);
    }
    return total / static_cast<double>(logits.size());
}

/// Mean BCE over probabilities in (0,1). The probabilities are mapped back to
/// logits and the fused form is used.
template <Real T>
double bce_loss(const Tensor<T>& probabilities, const Tensor<T>& labels)
{
    Tensor<double> logits(probabilities.shape());
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double p = probabilities[i];
        if (!(p > 0.0 && p < 1.0)) throw ValueError("bce probabilities must lie strictly inside (0,1)");
        logits[i] = std::log(p) - std::log1p(-p);
    }
    return bce_with_logits(logits, labels.template cast<double>());
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
};

template <Real T>
struct AdamState {
    std::map<std::string, Tensor<T>> m;
    std::map<std::string, Tensor<T>> v;
    std::uint64_t t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;

    AdamState() = default;
    explicit AdamState(const AdamOptions& o) : lr(o.lr), beta1(o.beta1), beta2(o.beta2), epsilon(o.epsilon) {}
};

/// One bias-corrected Adam step over every trainable tensor in `params`:
///   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2,
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps).
/// Non-finite gradients abort the step before anything is written.
template <Real T>
void adam_step(std::span<NamedTensor<T>> params, const std::map<std::string, Tensor<T>>& grads, AdamState<T>& state)
{
    if (!(state.lr > 0.0)) throw ValueError("adam learning rate must be positive");
    for (const auto& p : params) {
        if (!p.trainable) continue;
        auto it = grads.find(p.name);
        if (it == grads.end()) throw ValueError("missing gradient for parameter '" + p.name + "'");
        if (it->second.shape() != p.value.shape()) throw ShapeError("gradient shape mismatch for '" + p.name + "'");
        if (!it->second.all_finite()) throw NumericError("non-finite gradient for parameter '" + p.name + "'");
    }

    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
    for (auto& p : params) {
        if (!p.trainable) continue;
        const auto& g = grads.at(p.name);
        auto& m = state.m.try_emplace(p.name, p.value.shape()).first->second;
        auto& v = state.v.try_emplace(p.name, p.value.shape()).first->second;
        for (std::size_t i = 0; i < g.size(); ++i) {
            m[i] = b1 * m[i] + (T{1} - b1) * g[i];
            v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p.value[i] -= static_cast<T>(state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
        }
    }
}

// ---------------------------------------------------------------------------
// Reduce-on-plateau
// ---------------------------------------------------------------------------

struct PlateauState {
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::size_t epochs_since_improvement = 0;
    double factor = 0.1;
    std::size_t patience = 5;
    double min_delta = 1e-4;
    double min_lr = 1e-6;
};

/// Returns the learning rate for the next epoch. The counter counts
/// non-improving epochs; once it exceeds `patience` the rate is multiplied by
/// `factor` (floored at `min_lr`) and the counter restarts.
inline double plateau_update(PlateauState& s, double val_loss, double current_lr)
{
    if (!std::isfinite(val_loss)) throw ValueError("plateau_update needs a finite validation loss");
    if (!(s.factor > 0.0 && s.factor < 1.0)) throw ValueError("plateau factor must lie in (0,1)");
    if (val_loss < s.best_val_loss - s.min_delta) {
        s.best_val_loss = val_loss;
        s.epochs_since_improvement = 0;
        return current_lr;
    }
    s.epochs_since_improvement += 1;
    if (s.epochs_since_improvement > s.patience) {
        s.epochs_since_improvement = 0;
        return std::max(std::min(current_lr * s.factor, current_lr), std::min(s.min_lr, current_lr));
    }
    return current_lr;
}

}  // namespace fraxnet
