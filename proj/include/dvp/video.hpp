#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "dvp/error.hpp"

namespace dvp {

/// One image, stored row-major with interleaved channels (RGBRGB... or gray).
/// Values are nominally in [0,1] but network outputs may stray outside until
/// clamped.
class Frame {
public:
    Frame() = default;
    Frame(int height, int width, int channels, float fill = 0.0f);
    Frame(int height, int width, int channels, std::vector<float> data);

    int height() const noexcept { return h_; }
    int width() const noexcept { return w_; }
    int channels() const noexcept { return c_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(h_) * w_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    float& at(int y, int x, int c) noexcept { return data_[(static_cast<std::size_t>(y) * w_ + x) * c_ + c]; }
    float at(int y, int x, int c) const noexcept { return data_[(static_cast<std::size_t>(y) * w_ + x) * c_ + c]; }

    bool same_shape(const Frame& o) const noexcept { return h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }

    /// Copy with every value clamped to [0,1]; NaN becomes 0.
    Frame clamped() const;

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    int h_ = 0;
    int w_ = 0;
    int c_ = 0;
    std::vector<float> data_;
};

/// Ordered, non-empty run of equally shaped frames (T >= 2).
class VideoClip {
public:
    VideoClip() = default;
    explicit VideoClip(std::vector<Frame> frames);

    int length() const noexcept { return static_cast<int>(frames_.size()); }
    int height() const noexcept { return frames_.empty() ? 0 : frames_.front().height(); }
    int width() const noexcept { return frames_.empty() ? 0 : frames_.front().width(); }
    int channels() const noexcept { return frames_.empty() ? 0 : frames_.front().channels(); }

    const Frame& operator[](int t) const { return frames_.at(static_cast<std::size_t>(t)); }
    const std::vector<Frame>& frames() const noexcept { return frames_; }
    auto begin() const noexcept { return frames_.begin(); }
    auto end() const noexcept { return frames_.end(); }

    bool same_shape(const VideoClip& o) const noexcept {
        return length() == o.length() && height() == o.height() && width() == o.width() &&
               channels() == o.channels();
    }

    friend bool operator==(const VideoClip&, const VideoClip&) = default;

private:
    std::vector<Frame> frames_;
};

void require_same_shape(const Frame& a, const Frame& b, const char* what);
void require_same_shape(const VideoClip& a, const VideoClip& b, const char* what);

/// Mean absolute difference over all pixels and channels.
double frame_distance_l1(const Frame& a, const Frame& b);

/// Decode a PNG into [0,1] at 8-bit precision. Gray and gray+alpha become one
/// channel, RGB and RGBA become three; alpha is dropped.
Frame load_frame(const std::filesystem::path& path);

/// Clamp to [0,1] and write an 8-bit PNG (gray or RGB).
void save_frame(const Frame& frame, const std::filesystem::path& path);

/// Load every PNG in `dir` in lexicographic filename order.
VideoClip load_clip(const std::filesystem::path& dir);

/// Write `frame_%06d.png` files, numbered from 1, creating `dir` if needed.
void save_clip(const VideoClip& clip, const std::filesystem::path& dir);

}  // namespace dvp
