#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fraxnet/error.hpp"
#include "fraxnet/rng.hpp"
#include "fraxnet/tensor.hpp"

// Numerical kernels. Every function here is a pure function of its arguments
// (plus an explicit seed for dropout). Layout is N,H,W,C row-major.
namespace fraxnet::ops {

enum class Padding { same, valid };
enum class Mode { train, infer };

namespace detail {

// C[M,N] = (accumulate ? C : 0) + A[M,K] * B[K,N], all row-major.
template <Real T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate)
{
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * n;
        if (!accumulate) std::fill(crow, crow + n, T{0});
        const T* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = arow[p];
            if (av == T{0}) continue;
            const T* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[K,N] += A[M,K]^T * B[M,N]
template <Real T>
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c)
{
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        const T* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = arow[p];
            if (av == T{0}) continue;
            T* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <Real T>
std::vector<T> transpose(const T* src, std::size_t rows, std::size_t cols)
{
    std::vector<T> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

struct ConvGeometry {
    std::size_t batch, in_h, in_w, in_c;
    std::size_t k_h, k_w, out_c;
    std::size_t stride;
    std::size_t out_h, out_w;
    std::size_t pad_top, pad_left;

    std::size_t patch() const { return k_h * k_w * in_c; }
};

inline std::size_t same_output(std::size_t in, std::size_t stride) { return (in + stride - 1) / stride; }

/// Output size and padding for a 2-D convolution. "same" pads like the common
/// framework convention: total = max((out-1)*stride + k - in, 0), top gets the
/// smaller half.
inline ConvGeometry conv_geometry(const Shape& input, const Shape& kernels, std::size_t stride, Padding padding)
{
    if (input.size() != 4) throw ShapeError("conv2d input must be N,H,W,C, got " + shape_string(input));
    if (kernels.size() != 4) throw ShapeError("conv2d kernels must be Kh,Kw,Cin,Cout, got " + shape_string(kernels));
    if (stride < 1) throw ValueError("conv2d stride must be >= 1");
    ConvGeometry g{};
    g.batch = input[0];
    g.in_h = input[1];
    g.in_w = input[2];
    g.in_c = input[3];
    g.k_h = kernels[0];
    g.k_w = kernels[1];
    g.out_c = kernels[3];
    g.stride = stride;
    if (kernels[2] != g.in_c)
        throw ShapeError("conv2d channel mismatch: input has " + std::to_string(g.in_c) + ", kernels expect " +
                         std::to_string(kernels[2]));
    if (padding == Padding::same) {
        g.out_h = same_output(g.in_h, stride);
        g.out_w = same_output(g.in_w, stride);
        const auto total = [](std::size_t out, std::size_t s, std::size_t k, std::size_t in) -> std::size_t {
            const std::size_t need = (out - 1) * s + k;
            return need > in ? need - in : 0;
        };
        const auto pad_h = total(g.out_h, stride, g.k_h, g.in_h);
        const auto pad_w = total(g.out_w, stride, g.k_w, g.in_w);
        g.pad_top = pad_h / 2;
        g.pad_left = pad_w / 2;
        if (g.k_h > g.in_h + pad_h || g.k_w > g.in_w + pad_w)
            throw ShapeError("conv2d kernel larger than padded input");
    } else {
        if (g.k_h > g.in_h || g.k_w > g.in_w)
            throw ShapeError("conv2d kernel " + std::to_string(g.k_h) + "x" + std::to_string(g.k_w) +
                             " larger than input " + std::to_string(g.in_h) + "x" + std::to_string(g.in_w));
        g.out_h = (g.in_h - g.k_h) / stride + 1;
        g.out_w = (g.in_w - g.k_w) / stride + 1;
        g.pad_top = g.pad_left = 0;
    }
    if (g.out_h == 0 || g.out_w == 0) throw ShapeError("conv2d produces an empty spatial output");
    return g;
}

namespace detail {

// Patch matrix for one image: rows = out_h*out_w, cols = k_h*k_w*in_c.
template <Real T>
void im2col(const ConvGeometry& g, const T* image, std::vector<T>& cols)
{
    const std::size_t patch = g.patch();
    cols.assign(g.out_h * g.out_w * patch, T{0});
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            T* row = cols.data() + (oy * g.out_w + ox) * patch;
            for (std::size_t ky = 0; ky < g.k_h; ++ky) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
                for (std::size_t kx = 0; kx < g.k_w; ++kx) {
                    const auto ix =
                        static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
                    const T* src = image + (static_cast<std::size_t>(iy) * g.in_w + static_cast<std::size_t>(ix)) * g.in_c;
                    std::copy(src, src + g.in_c, row + (ky * g.k_w + kx) * g.in_c);
                }
            }
        }
    }
}

template <Real T>
void col2im_add(const ConvGeometry& g, const std::vector<T>& cols, T* image)
{
    const std::size_t patch = g.patch();
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const T* row = cols.data() + (oy * g.out_w + ox) * patch;
            for (std::size_t ky = 0; ky < g.k_h; ++ky) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
                for (std::size_t kx = 0; kx < g.k_w; ++kx) {
                    const auto ix =
                        static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
                    T* dst = image + (static_cast<std::size_t>(iy) * g.in_w + static_cast<std::size_t>(ix)) * g.in_c;
                    const T* src = row + (ky * g.k_w + kx) * g.in_c;
                    for (std::size_t c = 0; c < g.in_c; ++c) dst[c] += src[c];
                }
            }
        }
    }
}

}  // namespace detail

/// Cross-correlation (no kernel flip) plus per-output-channel bias.
/// input [N,H,W,Cin], kernels [Kh,Kw,Cin,Cout], bias [Cout].
template <Real T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias, std::size_t stride,
                         Padding padding)
{
    const auto g = conv_geometry(input.shape(), kernels.shape(), stride, padding);
    if (bias.size() != g.out_c) throw ShapeError("conv2d bias must have Cout entries");
    Tensor<T> out({g.batch, g.out_h, g.out_w, g.out_c});
    const std::size_t pixels = g.out_h * g.out_w;
    std::vector<T> cols;
    for (std::size_t n = 0; n < g.batch; ++n) {
        detail::im2col(g, input.data().data() + n * g.in_h * g.in_w * g.in_c, cols);
        T* dst = out.data().data() + n * pixels * g.out_c;
        for (std::size_t p = 0; p < pixels; ++p) std::copy(bias.data().begin(), bias.data().end(), dst + p * g.out_c);
        detail::gemm_nn(pixels, g.out_c, g.patch(), cols.data(), kernels.data().data(), dst, true);
    }
    return out;
}

template <Real T>
struct ConvGrads {
    Tensor<T> input;  // empty when not requested
    Tensor<T> kernels;
    Tensor<T> bias;
};

template <Real T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& grad_out,
                             std::size_t stride, Padding padding, bool need_input = true)
{
    const auto g = conv_geometry(input.shape(), kernels.shape(), stride, padding);
    if (grad_out.shape() != Shape{g.batch, g.out_h, g.out_w, g.out_c})
        throw ShapeError("conv2d gradient shape mismatch");
    ConvGrads<T> grads;
    grads.kernels = Tensor<T>(kernels.shape());
    grads.bias = Tensor<T>({g.out_c});
    if (need_input) grads.input = Tensor<T>(input.shape());

    const std::size_t pixels = g.out_h * g.out_w;
    const std::size_t patch = g.patch();
    const auto kernels_t = detail::transpose(kernels.data().data(), patch, g.out_c);
    std::vector<T> cols;
    std::vector<T> dcols(pixels * patch);
    for (std::size_t n = 0; n < g.batch; ++n) {
        const T* dy = grad_out.data().data() + n * pixels * g.out_c;
        for (std::size_t p = 0; p < pixels; ++p)
            for (std::size_t c = 0; c < g.out_c; ++c) grads.bias[c] += dy[p * g.out_c + c];
        detail::im2col(g, input.data().data() + n * g.in_h * g.in_w * g.in_c, cols);
        detail::gemm_tn_acc(pixels, g.out_c, patch, cols.data(), dy, grads.kernels.data().data());
        if (need_input) {
            detail::gemm_nn(pixels, patch, g.out_c, dy, kernels_t.data(), dcols.data(), false);
            detail::col2im_add(g, dcols, grads.input.data().data() + n * g.in_h * g.in_w * g.in_c);
        }
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Max pooling
// ---------------------------------------------------------------------------

template <Real T>
struct MaxPoolResult {
    Tensor<T> output;
    std::vector<std::size_t> argmax;  // flat input index per output cell
};

/// Valid-padded max pooling. Ties resolve to the first cell in row-major scan
/// order of the window.
template <Real T>
MaxPoolResult<T> maxpool2d(const Tensor<T>& input, std::size_t window, std::size_t stride)
{
    require_rank(input, 4, "maxpool2d");
    if (window < 1 || stride < 1) throw ValueError("maxpool2d window and stride must be >= 1");
    const auto n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
    if (window > h || window > w)
        throw ShapeError("maxpool2d window " + std::to_string(window) + " larger than input " + std::to_string(h) +
                         "x" + std::to_string(w));
    const auto oh = (h - window) / stride + 1;
    const auto ow = (w - window) / stride + 1;
    MaxPoolResult<T> r{Tensor<T>({n, oh, ow, c}), std::vector<std::size_t>(n * oh * ow * c)};
    const auto& x = input.storage();
    std::size_t o = 0;
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
                for (std::size_t ch = 0; ch < c; ++ch, ++o) {
                    std::size_t best = ((b * h + oy * stride) * w + ox * stride) * c + ch;
                    for (std::size_t ky = 0; ky < window; ++ky)
                        for (std::size_t kx = 0; kx < window; ++kx) {
                            const auto idx = ((b * h + oy * stride + ky) * w + ox * stride + kx) * c + ch;
                            if (x[idx] > x[best]) best = idx;
                        }
                    r.output[o] = x[best];
                    r.argmax[o] = best;
                }
    return r;
}

template <Real T>
Tensor<T> maxpool2d_backward(const Tensor<T>& grad_out, const std::vector<std::size_t>& argmax, const Shape& input_shape)
{
    if (grad_out.size() != argmax.size()) throw ShapeError("maxpool2d gradient/argmax size mismatch");
    Tensor<T> dx(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += grad_out[i];
    return dx;
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

struct BatchNormOptions {
    double momentum = 0.99;
    double epsilon = 1e-3;
};

template <Real T>
struct BatchNormCache {
    std::vector<T> inv_std;  // per channel, 1/sqrt(var+eps)
    Tensor<T> normalized;    // x_hat
    std::vector<T> batch_mean;
    std::vector<T> batch_var;  // biased
};

namespace detail {

template <Real T>
void check_bn_shapes(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta, const Tensor<T>& rm,
                     const Tensor<T>& rv)
{
    if (input.rank() < 2) throw ShapeError("batchnorm input needs a channel axis");
    const auto c = input.shape().back();
    if (gamma.size() != c || beta.size() != c || rm.size() != c || rv.size() != c)
        throw ShapeError("batchnorm parameter length must equal channel count " + std::to_string(c));
}

}  // namespace detail

/// Per-channel normalization with running statistics (inference semantics).
template <Real T>
Tensor<T> batchnorm_infer(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                          const Tensor<T>& running_mean, const Tensor<T>& running_var, double epsilon)
{
    detail::check_bn_shapes(input, gamma, beta, running_mean, running_var);
    const auto c = input.shape().back();
    std::vector<T> scale(c), shift(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[ch]) + epsilon));
        scale[ch] = gamma[ch] * inv;
        shift[ch] = beta[ch] - running_mean[ch] * scale[ch];
    }
    Tensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const auto ch = i % c;
        out[i] = input[i] * scale[ch] + shift[ch];
    }
    return out;
}

/// Train mode normalizes with batch statistics over every axis but the last
/// and folds them into the running statistics:
/// running = momentum*running + (1-momentum)*batch (biased batch variance).
/// Infer mode reads the running statistics and mutates nothing.
template <Real T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                            Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode,
                            const BatchNormOptions& opts = {}, BatchNormCache<T>* cache = nullptr)
{
    if (mode == Mode::infer) return batchnorm_infer(input, gamma, beta, running_mean, running_var, opts.epsilon);

    detail::check_bn_shapes(input, gamma, beta, running_mean, running_var);
    const auto c = input.shape().back();
    const auto count = input.size() / c;
    if (count < 2) throw ShapeError("batchnorm train mode needs at least 2 values per channel");

    std::vector<double> mean(c, 0.0), var(c, 0.0);
    for (std::size_t i = 0; i < input.size(); ++i) mean[i % c] += input[i];
    for (auto& m : mean) m /= static_cast<double>(count);
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double d = input[i] - mean[i % c];
        var[i % c] += d * d;
    }
    for (auto& v : var) v /= static_cast<double>(count);

    BatchNormCache<T> local;
    BatchNormCache<T>& k = cache ? *cache : local;
    k.inv_std.resize(c);
    k.batch_mean.resize(c);
    k.batch_var.resize(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        k.inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var[ch] + opts.epsilon));
        k.batch_mean[ch] = static_cast<T>(mean[ch]);
        k.batch_var[ch] = static_cast<T>(var[ch]);
    }
    k.normalized = Tensor<T>(input.shape());
    Tensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const auto ch = i % c;
        const T xh = (input[i] - k.batch_mean[ch]) * k.inv_std[ch];
        k.normalized[i] = xh;
        out[i] = gamma[ch] * xh + beta[ch];
    }
    const T mom = static_cast<T>(opts.momentum);
    for (std::size_t ch = 0; ch < c; ++ch) {
        running_mean[ch] = mom * running_mean[ch] + (T{1} - mom) * k.batch_mean[ch];
        running_var[ch] = mom * running_var[ch] + (T{1} - mom) * k.batch_var[ch];
    }
    return out;
}

template <Real T>
struct BatchNormGrads {
    Tensor<T> input;
    Tensor<T> gamma;
    Tensor<T> beta;
};

/// Backward of train-mode batch normalization.
template <Real T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const Tensor<T>& gamma, const BatchNormCache<T>& cache)
{
    const auto c = gamma.size();
    const auto count = static_cast<double>(grad_out.size() / c);
    BatchNormGrads<T> g{Tensor<T>(grad_out.shape()), Tensor<T>({c}), Tensor<T>({c})};
    std::vector<double> sum_dy(c, 0.0), sum_dy_xh(c, 0.0);
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        const auto ch = i % c;
        sum_dy[ch] += grad_out[i];
        sum_dy_xh[ch] += static_cast<double>(grad_out[i]) * cache.normalized[i];
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
        g.beta[ch] = static_cast<T>(sum_dy[ch]);
        g.gamma[ch] = static_cast<T>(sum_dy_xh[ch]);
    }
    // dx = gamma*inv_std/N * (N*dy - sum(dy) - x_hat*sum(dy*x_hat))
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        const auto ch = i % c;
        const double k = static_cast<double>(gamma[ch]) * cache.inv_std[ch] / count;
        g.input[i] = static_cast<T>(k * (count * grad_out[i] - sum_dy[ch] - cache.normalized[i] * sum_dy_xh[ch]));
    }
    return g;
}

/// Backward of infer-mode batch normalization w.r.t. its input only
/// (running statistics are constants).
template <Real T>
Tensor<T> batchnorm_infer_backward(const Tensor<T>& grad_out, const Tensor<T>& gamma, const Tensor<T>& running_var,
                                   double epsilon)
{
    const auto c = gamma.size();
    Tensor<T> dx(grad_out.shape());
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        const auto ch = i % c;
        dx[i] = grad_out[i] * gamma[ch] * static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[ch]) + epsilon));
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

template <Real T>
struct DropoutResult {
    Tensor<T> output;
    Tensor<T> mask;  // 0 or 1/(1-rate) per element; empty in infer mode
};

/// Inverted dropout. Deterministic in `seed`.
template <Real T>
DropoutResult<T> dropout_forward(const Tensor<T>& input, double rate, std::uint64_t seed, Mode mode)
{
    if (!(rate >= 0.0 && rate < 1.0)) throw ValueError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    if (mode == Mode::infer || rate == 0.0) return {input, {}};
    Rng rng(seed);
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    DropoutResult<T> r{Tensor<T>(input.shape()), Tensor<T>(input.shape())};
    for (std::size_t i = 0; i < input.size(); ++i) {
        const T m = rng.uniform() < rate ? T{0} : keep_scale;
        r.mask[i] = m;
        r.output[i] = input[i] * m;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

template <Real T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias)
{
    require_rank(input, 2, "dense input");
    require_rank(weights, 2, "dense weights");
    const auto n = input.dim(0), d = input.dim(1), u = weights.dim(1);
    if (weights.dim(0) != d)
        throw ShapeError("dense dimension mismatch: input " + shape_string(input.shape()) + " vs weights " +
                         shape_string(weights.shape()));
    if (bias.size() != u) throw ShapeError("dense bias must have " + std::to_string(u) + " entries");
    Tensor<T> out({n, u});
    for (std::size_t i = 0; i < n; ++i) std::copy(bias.data().begin(), bias.data().end(), out.data().begin() + i * u);
    detail::gemm_nn(n, u, d, input.data().data(), weights.data().data(), out.data().data(), true);
    return out;
}

template <Real T>
struct DenseGrads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> bias;
};

template <Real T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& grad_out,
                             bool need_input = true)
{
    const auto n = input.dim(0), d = input.dim(1), u = weights.dim(1);
    DenseGrads<T> g{{}, Tensor<T>(weights.shape()), Tensor<T>({u})};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < u; ++j) g.bias[j] += grad_out[i * u + j];
    detail::gemm_tn_acc(n, u, d, input.data().data(), grad_out.data().data(), g.weights.data().data());
    if (need_input) {
        g.input = Tensor<T>(input.shape());
        const auto wt = detail::transpose(weights.data().data(), d, u);
        detail::gemm_nn(n, d, u, grad_out.data().data(), wt.data(), g.input.data().data(), false);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Elementwise and reshaping
// ---------------------------------------------------------------------------

template <Real T>
Tensor<T> relu(const Tensor<T>& input)
{
    Tensor<T> out(input);
    for (auto& v : out.data()) v = v > T{0} ? v : T{0};
    return out;
}

template <Real T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out)
{
    Tensor<T> dx(grad_out);
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (!(input[i] > T{0})) dx[i] = T{0};
    return dx;
}

/// Logistic function, evaluated without overflow on either tail. Results are
/// kept strictly inside (0, 1) even where the exact value rounds to 0 or 1.
template <Real T>
T sigmoid(T x)
{
    T p;
    if (x >= T{0}) {
        p = T{1} / (T{1} + std::exp(-x));
    } else {
        const T e = std::exp(x);
        p = e / (T{1} + e);
    }
    constexpr T lo = std::numeric_limits<T>::denorm_min();
    const T hi = std::nextafter(T{1}, T{0});
    return std::clamp(p, lo, hi);
}

template <Real T>
Tensor<T> sigmoid(const Tensor<T>& input)
{
    Tensor<T> out(input);
    for (auto& v : out.data()) v = sigmoid(v);
    return out;
}

template <Real T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& grad_out)
{
    Tensor<T> dx(grad_out);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= output[i] * (T{1} - output[i]);
    return dx;
}

/// [N, ...] -> [N, prod(...)], data order untouched.
template <Real T>
Tensor<T> flatten(const Tensor<T>& input)
{
    if (input.rank() < 1) throw ShapeError("flatten needs a batch axis");
    const auto n = input.dim(0);
    return input.reshaped({n, input.size() / n});
}

}  // namespace fraxnet::ops
