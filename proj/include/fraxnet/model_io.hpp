#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "fraxnet/error.hpp"
#include "fraxnet/image.hpp"
#include "fraxnet/model.hpp"

// Model file layout (all integers and floats little-endian):
//
//   magic        8 bytes   "FRAXNET1"
//   version      u32       1
//   config_len   u32       byte length of the config block
//   config       input_height u32, input_width u32, input_channels u32,
//                block_count u32, then per block: filters u32, kernel u32,
//                pool u32, dropout f64; dense_count u32, then units u32 each;
//                dense_dropout f64, bn_momentum f64, bn_epsilon f64, seed u64
//   entry_count  u32
//   entries      name_len u32, name bytes, rank u32, dims u32 x rank,
//                data f32 x prod(dims)
//   checksum     u32       CRC-32 of every preceding byte
//
// Entries appear in the model's parameter order and include the batch-norm
// running statistics. Optimizer state is not stored.
namespace fraxnet {

class ModelFileError : public Error {
public:
    enum class Kind { truncated, bad_magic, checksum_mismatch, version_mismatch, shape_inconsistency };

    ModelFileError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline constexpr char model_magic[8] = {'F', 'R', 'A', 'X', 'N', 'E', 'T', '1'};
inline constexpr std::uint32_t model_format_version = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class ByteWriter {
public:
    void bytes(const void* p, std::size_t n)
    {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }

    template <typename U>
    void little(U v)
    {
        std::uint8_t buf[sizeof(U)];
        std::memcpy(buf, &v, sizeof(U));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(U));
        bytes(buf, sizeof(U));
    }

    void u32(std::size_t v)
    {
        if (v > 0xffffffffu) throw ValueError("value does not fit the model file's 32-bit field");
        little(static_cast<std::uint32_t>(v));
    }

    std::vector<std::uint8_t>& buffer() { return out_; }

private:
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    template <typename U>
    U little()
    {
        need(sizeof(U));
        std::uint8_t buf[sizeof(U)];
        std::memcpy(buf, in_.data() + pos_, sizeof(U));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(U));
        pos_ += sizeof(U);
        U v;
        std::memcpy(&v, buf, sizeof(U));
        return v;
    }

    std::uint32_t u32() { return little<std::uint32_t>(); }

    std::string string(std::size_t n)
    {
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }

private:
    void need(std::size_t n) const
    {
        if (in_.size() - pos_ < n) throw ModelFileError(ModelFileError::Kind::truncated, "model file is truncated");
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes)
{
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        crc = crc32(crc, bytes.data() + off, n);
        off += n;
    }
    return static_cast<std::uint32_t>(crc);
}

inline std::vector<std::uint8_t> encode_config(const ModelConfig& c)
{
    ByteWriter w;
    w.u32(c.input_height);
    w.u32(c.input_width);
    w.u32(c.input_channels);
    w.u32(c.blocks.size());
    for (const auto& b : c.blocks) {
        w.u32(b.filters);
        w.u32(b.kernel);
        w.u32(b.pool);
        w.little(b.dropout_rate);
    }
    w.u32(c.dense_units.size());
    for (auto u : c.dense_units) w.u32(u);
    w.little(c.dense_dropout);
    w.little(c.bn_momentum);
    w.little(c.bn_epsilon);
    w.little(c.seed);
    return std::move(w.buffer());
}

inline ModelConfig decode_config(ByteReader& r)
{
    ModelConfig c;
    c.input_height = r.u32();
    c.input_width = r.u32();
    c.input_channels = r.u32();
    const auto blocks = r.u32();
    if (blocks > 64) throw ModelFileError(ModelFileError::Kind::shape_inconsistency, "implausible block count");
    c.blocks.clear();
    for (std::uint32_t i = 0; i < blocks; ++i) {
        BlockConfig b;
        b.filters = r.u32();
        b.kernel = r.u32();
        b.pool = r.u32();
        b.dropout_rate = r.little<double>();
        c.blocks.push_back(b);
    }
    const auto dense = r.u32();
    if (dense > 64) throw ModelFileError(ModelFileError::Kind::shape_inconsistency, "implausible dense layer count");
    c.dense_units.clear();
    for (std::uint32_t i = 0; i < dense; ++i) c.dense_units.push_back(r.u32());
    c.dense_dropout = r.little<double>();
    c.bn_momentum = r.little<double>();
    c.bn_epsilon = r.little<double>();
    c.seed = r.little<std::uint64_t>();
    return c;
}

}  // namespace detail

/// Canonical byte image of a model (float32 payload).
template <Real T>
std::vector<std::uint8_t> serialize_model(const Model<T>& model)
{
    detail::ByteWriter w;
    w.bytes(model_magic, sizeof model_magic);
    w.little(model_format_version);
    const auto config = detail::encode_config(model.config());
    w.u32(config.size());
    w.bytes(config.data(), config.size());
    w.u32(model.parameters().size());
    for (const auto& p : model.parameters()) {
        w.u32(p.name.size());
        w.bytes(p.name.data(), p.name.size());
        w.u32(p.value.rank());
        for (auto d : p.value.shape()) w.u32(d);
        for (auto v : p.value.data()) w.little(static_cast<float>(v));
    }
    auto& out = w.buffer();
    const auto crc = detail::crc32_of(out);
    w.little(crc);
    return std::move(out);
}

inline Model<float> deserialize_model(std::span<const std::uint8_t> bytes)
{
    using Kind = ModelFileError::Kind;
    if (bytes.size() < sizeof model_magic) throw ModelFileError(Kind::truncated, "model file is truncated");
    if (std::memcmp(bytes.data(), model_magic, sizeof model_magic) != 0)
        throw ModelFileError(Kind::bad_magic, "not a model file (bad magic)");
    if (bytes.size() < sizeof model_magic + 8) throw ModelFileError(Kind::truncated, "model file is truncated");

    const auto body = bytes.first(bytes.size() - 4);
    detail::ByteReader tail(bytes.last(4));
    if (tail.u32() != detail::crc32_of(body))
        throw ModelFileError(Kind::checksum_mismatch, "model file checksum mismatch (file is corrupt)");

    detail::ByteReader r(body);
    r.string(sizeof model_magic);
    const auto version = r.u32();
    if (version != model_format_version)
        throw ModelFileError(Kind::version_mismatch, "unsupported model file version " + std::to_string(version) +
                                                         " (expected " + std::to_string(model_format_version) + ")");
    const auto config_len = r.u32();
    const auto config_start = r.position();
    ModelConfig config = detail::decode_config(r);
    if (r.position() - config_start != config_len)
        throw ModelFileError(Kind::shape_inconsistency, "config block length does not match its contents");

    Model<float> model;
    try {
        model = Model<float>(config);
    } catch (const ValueError& e) {
        throw ModelFileError(Kind::shape_inconsistency, std::string("invalid stored config: ") + e.what());
    }

    const auto count = r.u32();
    if (count != model.parameters().size())
        throw ModelFileError(Kind::shape_inconsistency, "model file stores " + std::to_string(count) +
                                                            " tensors, architecture needs " +
                                                            std::to_string(model.parameters().size()));
    for (auto& p : model.parameters()) {
        const auto name = r.string(r.u32());
        if (name != p.name)
            throw ModelFileError(Kind::shape_inconsistency, "expected tensor '" + p.name + "', found '" + name + "'");
        const auto rank = r.u32();
        if (rank != p.value.rank())
            throw ModelFileError(Kind::shape_inconsistency, "rank mismatch for '" + name + "'");
        Shape shape(rank);
        for (auto& d : shape) d = r.u32();
        if (shape != p.value.shape())
            throw ModelFileError(Kind::shape_inconsistency, "tensor '" + name + "' has shape " + shape_string(shape) +
                                                                ", architecture needs " +
                                                                shape_string(p.value.shape()));
        if (r.remaining() < p.value.size() * 4)
            throw ModelFileError(Kind::shape_inconsistency, "tensor '" + name + "' data shorter than its shape");
        for (auto& v : p.value.data()) v = r.little<float>();
    }
    if (r.remaining() != 0) throw ModelFileError(Kind::shape_inconsistency, "trailing bytes after last tensor");
    return model;
}

/// Returns the number of bytes written.
template <Real T>
std::size_t save_model(const Model<T>& model, const std::filesystem::path& path)
{
    const auto bytes = serialize_model(model);
    write_file_bytes(path, bytes);
    return bytes.size();
}

inline Model<float> load_model(const std::filesystem::path& path)
{
    return deserialize_model(read_file_bytes(path));
}

}  // namespace fraxnet
