#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fraxnet/error.hpp"

namespace fraxnet {

template <typename T>
concept Real = std::same_as<T, float> || std::same_as<T, double>;

enum class Precision { single, double_precision };

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

/// Dense row-major N-dimensional array. All image and activation tensors use
/// N,H,W,C layout.
template <Real T>
class Tensor {
public:
    using value_type = T;
    static constexpr Precision precision = std::same_as<T, float> ? Precision::single : Precision::double_precision;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape))
    {
        check_dims();
        data_.assign(element_count(shape_), fill);
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data))
    {
        check_dims();
        if (element_count(shape_) != data_.size())
            throw ShapeError("tensor shape " + shape_string(shape_) + " needs " +
                             std::to_string(element_count(shape_)) + " values, got " +
                             std::to_string(data_.size()));
    }

    static Tensor scalar(T value) { return Tensor({1}, std::vector<T>{value}); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    template <std::integral... I>
    T& at(I... idx)
    {
        return data_[offset({static_cast<std::size_t>(idx)...})];
    }

    template <std::integral... I>
    const T& at(I... idx) const
    {
        return data_[offset({static_cast<std::size_t>(idx)...})];
    }

    Tensor reshaped(Shape shape) const&
    {
        return Tensor(std::move(shape), data_);
    }

    Tensor reshaped(Shape shape) &&
    {
        return Tensor(std::move(shape), std::move(data_));
    }

    template <Real U>
    Tensor<U> cast() const
    {
        std::vector<U> out(data_.size());
        std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
        return Tensor<U>(shape_, std::move(out));
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    void check_dims() const
    {
        for (auto d : shape_)
            if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
    }

    std::size_t offset(std::initializer_list<std::size_t> idx) const
    {
        if (idx.size() != shape_.size()) throw ShapeError("index rank does not match tensor rank");
        std::size_t off = 0;
        std::size_t axis = 0;
        for (auto i : idx) {
            if (i >= shape_[axis]) throw ShapeError("index out of range on axis " + std::to_string(axis));
            off = off * shape_[axis] + i;
            ++axis;
        }
        return off;
    }

    Shape shape_;
    std::vector<T> data_;
};

/// Throws NumericError naming `where` when a tensor carries NaN or infinity.
template <Real T>
void ensure_finite(const Tensor<T>& t, std::string_view where)
{
    if (!t.all_finite()) throw NumericError("non-finite value produced by " + std::string(where));
}

template <Real T>
void require_rank(const Tensor<T>& t, std::size_t rank, std::string_view what)
{
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + " expects rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
}

}  // namespace fraxnet
