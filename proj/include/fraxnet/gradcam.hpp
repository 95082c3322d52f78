#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fraxnet/autograd.hpp"
#include "fraxnet/error.hpp"
#include "fraxnet/image.hpp"
#include "fraxnet/model.hpp"
#include "fraxnet/tensor.hpp"

namespace fraxnet {

/// Saliency map at input resolution, values in [0,1].
struct Heatmap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;
    std::string source_layer;

    double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

namespace detail {

inline void normalize_by_max(std::vector<double>& v)
{
    const double mx = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    if (mx > 0.0) {
        for (auto& x : v) x /= mx;
    } else {
        std::fill(v.begin(), v.end(), 0.0);
    }
}

}  // namespace detail

/// Grad-CAM for the fractured logit of a single image [H,W,C].
///
/// Channel weights are the spatial means of d(logit)/d(activation) at the
/// target convolution layer (post-ReLU). The map is ReLU(sum_k w_k * A_k),
/// scaled by its maximum, resized bilinearly to the input size and scaled by
/// its maximum again so the peak is exactly 1. A map with no positive
/// evidence stays all zero. The model is run in infer mode and is not
/// modified.
template <Real T>
Heatmap gradcam(const Model<T>& model, const Tensor<T>& image, std::string_view layer = {})
{
    require_rank(image, 3, "gradcam image");
    const std::string target = layer.empty() ? model.last_conv_layer() : std::string(layer);
    const auto* desc = model.layer(target);
    if (!desc) throw ValueError("unknown layer '" + target + "'");
    if (desc->kind != LayerKind::conv2d) throw ValueError("layer '" + target + "' is not a convolution layer");

    Shape s{1};
    s.insert(s.end(), image.shape().begin(), image.shape().end());
    auto pass = model.forward_infer(image.reshaped(std::move(s)));
    const Var act = pass.taps.at(target);
    const Var retain[] = {act};
    const auto grads = pass.graph.backward(pass.logits, retain);

    const auto& a = pass.graph.value(act);
    const auto& g = grads.of(act);
    const auto h = a.dim(1), w = a.dim(2), c = a.dim(3);

    std::vector<double> weights(c, 0.0);
    for (std::size_t i = 0; i < h * w; ++i)
        for (std::size_t k = 0; k < c; ++k) weights[k] += g[i * c + k];
    for (auto& wk : weights) wk /= static_cast<double>(h * w);

    std::vector<double> cam(h * w, 0.0);
    for (std::size_t i = 0; i < h * w; ++i) {
        double v = 0.0;
        for (std::size_t k = 0; k < c; ++k) v += weights[k] * a[i * c + k];
        cam[i] = std::max(v, 0.0);
    }
    detail::normalize_by_max(cam);

    Heatmap hm;
    hm.height = image.dim(0);
    hm.width = image.dim(1);
    hm.source_layer = target;
    hm.values.resize(hm.height * hm.width);
    auto get = [&](std::size_t y, std::size_t x) { return cam[y * w + x]; };
    for (std::size_t y = 0; y < hm.height; ++y) {
        const double sy = half_pixel_source(y, h, hm.height);
        for (std::size_t x = 0; x < hm.width; ++x)
            hm.values[y * hm.width + x] = bilinear_at(get, h, w, sy, half_pixel_source(x, w, hm.width));
    }
    detail::normalize_by_max(hm.values);
    return hm;
}

/// Heatmap as an 8-bit gray image (value * 255, rounded half-up).
inline ImageBuffer heatmap_image(const Heatmap& hm)
{
    ImageBuffer img(hm.width, hm.height, 1);
    for (std::size_t i = 0; i < hm.values.size(); ++i) img.pixels[i] = round_to_u8(hm.values[i] * 255.0);
    return img;
}

/// Blends a red ramp (v -> (255v, 0, 0)) over the grayscale image:
/// out = (1-alpha)*gray + alpha*ramp, rounded half-up, three channels.
inline ImageBuffer overlay(const ImageBuffer& image, const Heatmap& hm, double alpha = 0.4)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValueError("overlay alpha must lie in [0,1]");
    if (image.width != hm.width || image.height != hm.height)
        throw ShapeError("overlay: image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                         ", heatmap is " + std::to_string(hm.width) + "x" + std::to_string(hm.height));
    const auto gray = with_channels(image, 1);
    ImageBuffer out(image.width, image.height, 3);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
        const double base = (1.0 - alpha) * gray.pixels[i];
        out.pixels[3 * i] = round_to_u8(base + alpha * 255.0 * hm.values[i]);
        out.pixels[3 * i + 1] = round_to_u8(base);
        out.pixels[3 * i + 2] = round_to_u8(base);
    }
    return out;
}

}  // namespace fraxnet
