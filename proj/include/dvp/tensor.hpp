#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "dvp/error.hpp"

namespace dvp {

/// Planar (channel, row, column) activation tensor used inside the generator.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    Tensor(int channels, int height, int width, T fill = T(0))
        : c_(channels), h_(height), w_(width),
          data_(static_cast<std::size_t>(channels) * height * width, fill) {}

    int channels() const noexcept { return c_; }
    int height() const noexcept { return h_; }
    int width() const noexcept { return w_; }
    std::size_t plane() const noexcept { return static_cast<std::size_t>(h_) * w_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> span() noexcept { return data_; }
    std::span<const T> span() const noexcept { return data_; }

    T* channel(int c) noexcept { return data_.data() + c * plane(); }
    const T* channel(int c) const noexcept { return data_.data() + c * plane(); }

    T& at(int c, int y, int x) noexcept { return data_[(c * plane()) + static_cast<std::size_t>(y) * w_ + x]; }
    T at(int c, int y, int x) const noexcept { return data_[(c * plane()) + static_cast<std::size_t>(y) * w_ + x]; }

    bool same_shape(const Tensor& o) const noexcept { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    int c_ = 0;
    int h_ = 0;
    int w_ = 0;
    std::vector<T> data_;
};

}  // namespace dvp
