#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

#include "fraxnet/error.hpp"
#include "fraxnet/image.hpp"
#include "fraxnet/rng.hpp"
#include "fraxnet/tensor.hpp"

namespace fraxnet {

struct AugmentConfig {
    bool enabled = true;
    double rotation_max_degrees = 15.0;
    double zoom_low = 0.9;
    double zoom_high = 1.1;
    double horizontal_flip_prob = 0.5;

    void validate() const
    {
        if (!(rotation_max_degrees >= 0.0)) throw ValueError("rotation range must be non-negative");
        if (!(zoom_low > 0.0 && zoom_low <= 1.0 && zoom_high >= 1.0))
            throw ValueError("zoom range must satisfy 0 < low <= 1 <= high");
        if (!(horizontal_flip_prob >= 0.0 && horizontal_flip_prob <= 1.0))
            throw ValueError("flip probability must lie in [0,1]");
    }
};

/// The concrete transform drawn for one sample.
struct AugmentDraw {
    bool flip = false;
    double angle_degrees = 0.0;
    double zoom = 1.0;
};

/// Draw order is fixed (flip, angle, zoom) and all three values are always
/// drawn, so a seed maps to the same transform regardless of configuration.
inline AugmentDraw draw_augmentation(const AugmentConfig& cfg, std::uint64_t seed)
{
    Rng rng(seed);
    AugmentDraw d;
    d.flip = rng.bernoulli(cfg.horizontal_flip_prob);
    d.angle_degrees = rng.uniform(-cfg.rotation_max_degrees, cfg.rotation_max_degrees);
    d.zoom = rng.uniform(cfg.zoom_low, cfg.zoom_high);
    return d;
}

/// Applies flip, then rotation about the centre, then zoom about the centre,
/// by inverse-mapping each output pixel and sampling bilinearly with border
/// replication. zoom > 1 magnifies.
template <Real T>
Tensor<T> apply_augmentation(const Tensor<T>& sample, const AugmentDraw& d)
{
    require_rank(sample, 3, "augment");
    const auto h = sample.dim(0), w = sample.dim(1), c = sample.dim(2);
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    const double theta = d.angle_degrees * std::numbers::pi / 180.0;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);

    Tensor<T> out(sample.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
        auto get = [&](std::size_t y, std::size_t x) { return static_cast<double>(sample.at(y, x, ch)); };
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                // undo zoom
                const double qy = (static_cast<double>(y) - cy) / d.zoom;
                const double qx = (static_cast<double>(x) - cx) / d.zoom;
                // undo rotation (rotate by -theta)
                const double ry = cy + (-sin_t * qx + cos_t * qy);
                const double rx = cx + (cos_t * qx + sin_t * qy);
                // undo flip
                const double sx = d.flip ? (static_cast<double>(w) - 1.0 - rx) : rx;
                out.at(y, x, ch) = static_cast<T>(bilinear_at(get, h, w, ry, sx));
            }
        }
    }
    return out;
}

/// Random augmentation of one normalized sample [H,W,C]; identity when the
/// configuration is disabled. Deterministic in `seed`.
template <Real T>
Tensor<T> augment(const Tensor<T>& sample, const AugmentConfig& cfg, std::uint64_t seed)
{
    if (!cfg.enabled) return sample;
    cfg.validate();
    return apply_augmentation(sample, draw_augmentation(cfg, seed));
}

}  // namespace fraxnet
