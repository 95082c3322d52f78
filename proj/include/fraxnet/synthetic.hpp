#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

#include "fraxnet/error.hpp"
#include "fraxnet/image.hpp"
#include "fraxnet/model.hpp"
#include "fraxnet/rng.hpp"

// Synthetic "radiographs" for tests and demos: a bright bar (bone) on a dark
// noisy background. Fractured images have a dark diagonal gap across the bar.
namespace fraxnet {

inline ImageBuffer synthetic_radiograph(std::size_t size, Label label, std::uint64_t seed)
{
    if (size < 8) throw ValueError("synthetic images need at least 8x8 pixels");
    Rng rng(seed);
    ImageBuffer img(size, size, 1);
    const double s = static_cast<double>(size);
    const double center = s * rng.uniform(0.35, 0.65);
    const double half_width = s * rng.uniform(0.10, 0.16);
    const double gap_at = s * rng.uniform(0.3, 0.7);
    const double gap_half = std::max(1.0, s * 0.06);
    const double slope = rng.uniform(-0.5, 0.5);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            double v = 30.0 + 20.0 * rng.uniform();
            const double fx = static_cast<double>(x) + 0.5, fy = static_cast<double>(y) + 0.5;
            if (std::abs(fy - center) <= half_width) {
                v = 190.0 + 30.0 * rng.uniform();
                if (label == Label::fractured && std::abs(fx - gap_at - slope * (fy - center)) <= gap_half)
                    v = 40.0 + 20.0 * rng.uniform();
            }
            img.pixels[y * size + x] = round_to_u8(v);
        }
    }
    return img;
}

/// Writes `per_class` images per class under root/fractured and
/// root/non_fractured as PGM files.
inline void write_synthetic_dataset(const std::filesystem::path& root, std::size_t per_class, std::size_t size,
                                    std::uint64_t seed)
{
    for (int cls = 0; cls < 2; ++cls) {
        const auto label = static_cast<Label>(cls);
        const char* cls_name = label == Label::fractured ? "fractured" : "non_fractured";
        const auto dir = root / cls_name;
        std::filesystem::create_directories(dir);
        for (std::size_t i = 0; i < per_class; ++i) {
            char name[48];
            std::snprintf(name, sizeof name, "%s_%03zu.pgm", cls_name, i);
            write_image(dir / name, synthetic_radiograph(size, label, mix_seed({seed, std::uint64_t(cls), i})));
        }
    }
}

}  // namespace fraxnet
