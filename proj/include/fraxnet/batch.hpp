#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fraxnet/augment.hpp"
#include "fraxnet/dataset.hpp"
#include "fraxnet/error.hpp"
#include "fraxnet/image.hpp"
#include "fraxnet/model.hpp"
#include "fraxnet/rng.hpp"
#include "fraxnet/tensor.hpp"

namespace fraxnet {

struct Sample {
    std::string path;
    Label label = Label::non_fractured;
    Split split = Split::unassigned;
    ImageBuffer image;  // already at model resolution and channel count
};

/// Decoded, resized images held in memory, so every epoch sees byte-identical
/// inputs before augmentation.
class ImageDataset {
public:
    ImageDataset() = default;
    explicit ImageDataset(std::vector<Sample> samples) : samples_(std::move(samples))
    {
        for (const auto& s : samples_) {
            if (s.image.width != samples_.front().image.width || s.image.height != samples_.front().image.height ||
                s.image.channels != samples_.front().image.channels)
                throw ShapeError("all dataset images must share one geometry");
        }
    }

    /// Reads every image in the manifest and prepares it for a model input of
    /// h x w x channels.
    static ImageDataset load(const DatasetManifest& manifest, std::size_t h, std::size_t w, std::size_t channels)
    {
        std::vector<Sample> samples;
        samples.reserve(manifest.records.size());
        for (const auto& r : manifest.records)
            samples.push_back({r.path, r.label, r.split, prepare_image(read_image(r.path), h, w, channels)});
        return ImageDataset(std::move(samples));
    }

    const std::vector<Sample>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

    std::vector<std::size_t> indices(Split split) const
    {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < samples_.size(); ++i)
            if (samples_[i].split == split) idx.push_back(i);
        return idx;
    }

    std::size_t count(Split split) const { return indices(split).size(); }

private:
    std::vector<Sample> samples_;
};

/// Duplicates fractured entries of `indices` (cycling in order) until both
/// classes are equally represented.
inline std::vector<std::size_t> oversample_minority(const ImageDataset& data, std::vector<std::size_t> indices)
{
    std::vector<std::size_t> pos, neg;
    for (auto i : indices) (data.samples()[i].label == Label::fractured ? pos : neg).push_back(i);
    const auto& minority = pos.size() < neg.size() ? pos : neg;
    const auto target = std::max(pos.size(), neg.size());
    if (minority.empty()) return indices;
    for (std::size_t k = minority.size(); k < target; ++k) indices.push_back(minority[k % minority.size()]);
    return indices;
}

template <Real T>
struct Batch {
    Tensor<T> images;  // [B,H,W,C]
    Tensor<T> labels;  // [B,1]
    std::vector<std::size_t> sample_indices;
};

struct BatchOptions {
    std::uint64_t shuffle_seed = 0;
    std::uint64_t epoch = 0;
    bool shuffle = true;
    AugmentConfig augment{.enabled = false};
    std::uint64_t augment_seed = 0;
    bool oversample_minority = false;
};

/// Sequential batches over one split. Order is reshuffled per epoch from
/// (shuffle_seed, epoch); the final batch may be short. Augmentation is only
/// ever applied to the train split.
template <Real T>
class BatchStream {
public:
    BatchStream(const ImageDataset& data, Split split, std::size_t batch_size, BatchOptions opts = {})
        : data_(&data), split_(split), batch_size_(batch_size), opts_(std::move(opts))
    {
        if (batch_size_ < 1) throw ValueError("batch size must be at least 1");
        order_ = data.indices(split);
        if (order_.empty()) throw ValueError("split '" + std::string(split_name(split)) + "' is empty");
        if (split != Split::train) {
            opts_.augment.enabled = false;
            opts_.oversample_minority = false;
        }
        if (opts_.oversample_minority) order_ = oversample_minority(data, std::move(order_));
        if (opts_.shuffle) {
            Rng rng(mix_seed({opts_.shuffle_seed, opts_.epoch}));
            shuffle(order_.begin(), order_.end(), rng);
        }
    }

    std::size_t sample_count() const noexcept { return order_.size(); }
    std::size_t batch_count() const noexcept { return (order_.size() + batch_size_ - 1) / batch_size_; }
    const std::vector<std::size_t>& order() const noexcept { return order_; }

    std::optional<Batch<T>> next()
    {
        if (cursor_ >= order_.size()) return std::nullopt;
        const auto begin = cursor_;
        const auto end = std::min(order_.size(), cursor_ + batch_size_);
        cursor_ = end;

        const auto& first = data_->samples()[order_[begin]].image;
        const auto per = first.height * first.width * first.channels;
        Batch<T> b{Tensor<T>({end - begin, first.height, first.width, first.channels}), Tensor<T>({end - begin, 1}), {}};
        for (auto pos = begin; pos < end; ++pos) {
            const auto& s = data_->samples()[order_[pos]];
            auto x = normalize<T>(s.image);
            if (opts_.augment.enabled) x = augment(x, opts_.augment, mix_seed({opts_.augment_seed, opts_.epoch, pos}));
            std::copy(x.data().begin(), x.data().end(), b.images.data().begin() + (pos - begin) * per);
            b.labels[pos - begin] = static_cast<T>(static_cast<int>(s.label));
            b.sample_indices.push_back(order_[pos]);
        }
        return b;
    }

private:
    const ImageDataset* data_;
    Split split_;
    std::size_t batch_size_;
    BatchOptions opts_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

template <Real T>
BatchStream<T> batch_iter(const ImageDataset& data, Split split, std::size_t batch_size, BatchOptions opts = {})
{
    return BatchStream<T>(data, split, batch_size, std::move(opts));
}

}  // namespace fraxnet
