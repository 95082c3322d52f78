#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "fraxnet/error.hpp"
#include "fraxnet/tensor.hpp"

namespace fraxnet {

/// 8-bit raster, row-major, channels interleaved.
struct ImageBuffer {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> pixels;

    ImageBuffer() = default;
    ImageBuffer(std::size_t w, std::size_t h, std::size_t c, std::vector<std::uint8_t> px)
        : width(w), height(h), channels(c), pixels(std::move(px))
    {
        if (channels != 1 && channels != 3) throw ValueError("image channels must be 1 or 3");
        if (pixels.size() != width * height * channels)
            throw ValueError("image pixel count does not match " + std::to_string(width) + "x" +
                             std::to_string(height) + "x" + std::to_string(channels));
    }
    ImageBuffer(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0)
        : ImageBuffer(w, h, c, std::vector<std::uint8_t>(w * h * c, fill))
    {
    }

    std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c = 0) { return pixels[(y * width + x) * channels + c]; }
    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c = 0) const
    {
        return pixels[(y * width + x) * channels + c];
    }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

/// floor(v + 0.5), clamped to the 8-bit range.
inline std::uint8_t round_to_u8(double v)
{
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

/// Integer luma 0.299R + 0.587G + 0.114B, rounded half-up.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
    return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

namespace detail {

class NetpbmHeaderReader {
public:
    explicit NetpbmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t read_number(const char* field)
    {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
            throw FormatError(std::string("netpbm header: expected ") + field);
        std::size_t v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_++] - '0');
            if (v > 100'000'000) throw FormatError(std::string("netpbm header: ") + field + " too large");
        }
        return v;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void end_of_header()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw FormatError("netpbm header: missing whitespace before raster");
        ++pos_;
    }

    std::size_t position() const { return pos_; }

private:
    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 2;
};

}  // namespace detail

/// Decodes binary PGM (P5) or PPM (P6) with maxval 255. PPM input is
/// collapsed to grayscale with integer luma.
inline ImageBuffer decode_image(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw FormatError("unsupported image: expected binary PGM (P5) or PPM (P6) magic");
    const bool color = bytes[1] == '6';
    detail::NetpbmHeaderReader reader(bytes);
    const auto width = reader.read_number("width");
    const auto height = reader.read_number("height");
    const auto maxval = reader.read_number("maxval");
    reader.end_of_header();
    if (width == 0 || height == 0) throw FormatError("netpbm image has zero size");
    if (maxval != 255) throw FormatError("netpbm maxval must be 255, got " + std::to_string(maxval));

    const std::size_t src_channels = color ? 3 : 1;
    const std::size_t need = width * height * src_channels;
    const std::size_t start = reader.position();
    if (bytes.size() - start < need)
        throw FormatError("truncated netpbm raster: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(bytes.size() - start));

    std::vector<std::uint8_t> gray(width * height);
    const auto* raster = bytes.data() + start;
    if (color) {
        for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = luma(raster[3 * i], raster[3 * i + 1], raster[3 * i + 2]);
    } else {
        std::copy(raster, raster + need, gray.begin());
    }
    return ImageBuffer(width, height, 1, std::move(gray));
}

/// P5 for one channel, P6 for three.
inline std::vector<std::uint8_t> encode_netpbm(const ImageBuffer& img)
{
    const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width) + " " +
                               std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline ImageBuffer read_image(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    try {
        return decode_image(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void write_image(const std::filesystem::path& path, const ImageBuffer& img)
{
    write_file_bytes(path, encode_netpbm(img));
}

/// Source coordinate for destination index `dst` under the half-pixel
/// convention, clamped to [0, in-1].
inline double half_pixel_source(std::size_t dst, std::size_t in, std::size_t out)
{
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    const double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
}

/// Bilinear sample of a row-major single-plane grid at (y, x), clamped.
template <typename Get>
double bilinear_at(Get&& get, std::size_t h, std::size_t w, double y, double x)
{
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const auto x0 = static_cast<std::size_t>(std::floor(x));
    const auto y1 = std::min(y0 + 1, h - 1);
    const auto x1 = std::min(x0 + 1, w - 1);
    const double fy = y - static_cast<double>(y0);
    const double fx = x - static_cast<double>(x0);
    const double top = get(y0, x0) * (1.0 - fx) + get(y0, x1) * fx;
    const double bottom = get(y1, x0) * (1.0 - fx) + get(y1, x1) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

/// Bilinear resize, half-pixel centers, borders clamped, results rounded
/// half-up to 8 bits.
inline ImageBuffer resize_bilinear(const ImageBuffer& img, std::size_t out_h, std::size_t out_w)
{
    if (out_h < 1 || out_w < 1) throw ValueError("resize target must be at least 1x1");
    if (img.width < 1 || img.height < 1) throw ValueError("cannot resize an empty image");
    if (out_h == img.height && out_w == img.width) return img;
    ImageBuffer out(out_w, out_h, img.channels);
    for (std::size_t c = 0; c < img.channels; ++c) {
        auto get = [&](std::size_t y, std::size_t x) { return static_cast<double>(img.at(y, x, c)); };
        for (std::size_t y = 0; y < out_h; ++y) {
            const double sy = half_pixel_source(y, img.height, out_h);
            for (std::size_t x = 0; x < out_w; ++x) {
                const double sx = half_pixel_source(x, img.width, out_w);
                out.at(y, x, c) = round_to_u8(bilinear_at(get, img.height, img.width, sy, sx));
            }
        }
    }
    return out;
}

/// 8-bit samples to [0,1] by division by 255, shape [H,W,C].
template <Real T = float>
Tensor<T> normalize(const ImageBuffer& img)
{
    Tensor<T> t({img.height, img.width, img.channels});
    for (std::size_t i = 0; i < img.pixels.size(); ++i) t[i] = static_cast<T>(img.pixels[i] / 255.0);
    return t;
}

/// Gray image replicated to `channels` planes (1 or 3).
inline ImageBuffer with_channels(const ImageBuffer& img, std::size_t channels)
{
    if (img.channels == channels) return img;
    if (img.channels == 3 && channels == 1) {
        ImageBuffer out(img.width, img.height, 1);
        for (std::size_t i = 0; i < img.width * img.height; ++i)
            out.pixels[i] = luma(img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]);
        return out;
    }
    if (img.channels == 1 && channels == 3) {
        ImageBuffer out(img.width, img.height, 3);
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = img.pixels[i];
        return out;
    }
    throw ValueError("unsupported channel conversion");
}

/// Decode-independent preprocessing to the model's input geometry.
inline ImageBuffer prepare_image(const ImageBuffer& img, std::size_t h, std::size_t w, std::size_t channels)
{
    return with_channels(resize_bilinear(img, h, w), channels);
}

}  // namespace fraxnet
