#pragma once

// Iteratively reweighted training: a binary per-pixel map picks, for each
// pixel of a processed frame, whether the main or the minor output head is
// responsible for it. The main head is trained only on pixels it already
// explains at least as well as the minor head.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dvp/loss.hpp"
#include "dvp/video.hpp"

namespace dvp {

/// Hard main-mode assignment, one value in {0,1} per pixel.
class ConfidenceMap {
public:
    ConfidenceMap() = default;
    ConfidenceMap(int height, int width, std::uint8_t fill = 1);

    int height() const noexcept { return h_; }
    int width() const noexcept { return w_; }
    std::uint8_t at(int y, int x) const noexcept { return v_[static_cast<std::size_t>(y) * w_ + x]; }
    std::uint8_t& at(int y, int x) noexcept { return v_[static_cast<std::size_t>(y) * w_ + x]; }
    std::size_t count() const noexcept;

    /// Single-channel frame with values 0 or 1, for dumping.
    Frame to_frame() const;

    friend bool operator==(const ConfidenceMap&, const ConfidenceMap&) = default;

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<std::uint8_t> v_;
};

/// Mean absolute channel difference between two pixels.
double pixel_distance(const Frame& a, const Frame& b, int y, int x) noexcept;

/// C(x) = 1 iff d(main(x), P(x)) < max(d(minor(x), P(x)), delta).
ConfidenceMap compute_confidence(const Frame& main, const Frame& minor, const Frame& processed, double delta);

/// Value and gradients of
///   data_term(C * main, C * P) + data_term((1 - C) * minor, (1 - C) * P)
/// with C broadcast over channels and held constant.
struct IrtLossValue {
    double loss = 0.0;
    Frame grad_main;
    Frame grad_minor;
};
IrtLossValue irt_loss_and_grad(const Frame& main, const Frame& minor, const Frame& processed,
                               const ConfidenceMap& conf, const DataTerm& term);

double irt_loss(const Frame& main, const Frame& minor, const Frame& processed, const ConfidenceMap& conf,
                const DataTerm& term);

/// Which frame to train on at global iteration `iteration`: the anchor frame
/// (index 0) while iteration < anchor_iterations, afterwards `normal_order`
/// restarted from its beginning and cycled.
struct ScheduledFrame {
    int frame = 0;
    bool anchored = false;
};
ScheduledFrame anchored_schedule(long iteration, long anchor_iterations, const std::vector<int>& normal_order);

/// Write each map as an 8-bit gray PNG (0 or 255), named `conf_%06d.png`
/// with 1-based frame numbers.
void save_confidence_maps(const std::vector<ConfidenceMap>& maps, const std::filesystem::path& dir);

}  // namespace dvp
