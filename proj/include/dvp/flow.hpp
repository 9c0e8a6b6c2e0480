#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dvp/video.hpp"

namespace dvp {

/// Dense displacement field. flow(x) points from pixel x of frame t to its
/// correspondence in frame s, so backward_warp(frame_s, flow) aligns frame s
/// onto frame t.
class FlowField {
public:
    FlowField() = default;
    FlowField(int height, int width, float u = 0.0f, float v = 0.0f);

    int height() const noexcept { return h_; }
    int width() const noexcept { return w_; }

    float u(int y, int x) const noexcept { return uv_[2 * (static_cast<std::size_t>(y) * w_ + x)]; }
    float v(int y, int x) const noexcept { return uv_[2 * (static_cast<std::size_t>(y) * w_ + x) + 1]; }
    void set(int y, int x, float u, float v) noexcept {
        uv_[2 * (static_cast<std::size_t>(y) * w_ + x)] = u;
        uv_[2 * (static_cast<std::size_t>(y) * w_ + x) + 1] = v;
    }

    /// Interleaved (u, v) pairs, row-major.
    std::span<const float> data() const noexcept { return uv_; }
    std::span<float> data() noexcept { return uv_; }

    friend bool operator==(const FlowField&, const FlowField&) = default;

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<float> uv_;
};

/// 1 = valid correspondence, 0 = occluded or out of frame.
class OcclusionMask {
public:
    OcclusionMask() = default;
    OcclusionMask(int height, int width, std::uint8_t fill = 1);

    int height() const noexcept { return h_; }
    int width() const noexcept { return w_; }
    std::uint8_t at(int y, int x) const noexcept { return m_[static_cast<std::size_t>(y) * w_ + x]; }
    std::uint8_t& at(int y, int x) noexcept { return m_[static_cast<std::size_t>(y) * w_ + x]; }
    std::span<const std::uint8_t> data() const noexcept { return m_; }
    std::size_t count() const noexcept;

    friend bool operator==(const OcclusionMask&, const OcclusionMask&) = default;

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<std::uint8_t> m_;
};

/// Forward-backward consistency thresholds.
struct OcclusionThresholds {
    double a = 0.01;
    double b = 0.5;
};

/// True when (px, py) lies inside [0, w-1] x [0, h-1], i.e. bilinear sampling
/// needs no data from outside the frame.
inline bool sample_in_bounds(double px, double py, int h, int w) noexcept {
    return px >= 0.0 && py >= 0.0 && px <= w - 1 && py <= h - 1;
}

/// output(x) = source(x + flow(x)), bilinear; out-of-frame samples give 0.
Frame backward_warp(const Frame& source, const FlowField& flow);

/// Bilinear sample of a flow field at a real position (caller guarantees in bounds).
void sample_flow(const FlowField& flow, double px, double py, double& u, double& v) noexcept;

/// Pixel x is occluded when x + fwd(x) leaves the frame or
/// |fwd(x) + bwd(x + fwd(x))|^2 > a (|fwd(x)|^2 + |bwd(x + fwd(x))|^2) + b.
OcclusionMask occlusion_from_flows(const FlowField& fwd, const FlowField& bwd, OcclusionThresholds th = {});

/// Flows relating frame t to an earlier frame s, plus the mask built from them.
struct FlowPair {
    FlowField forward;   // t -> s
    FlowField backward;  // s -> t
    OcclusionMask mask;
};

/// Short-term (t -> t-1) and long-term (t -> first) pairs for t = 2..T. Index
/// i of each vector belongs to frame t = i + 2 (1-based), i.e. clip index i + 1.
struct FlowSet {
    std::vector<FlowPair> short_term;
    std::vector<FlowPair> long_term;
};

/// Flows for a camera translating (dx, dy) pixels per frame: F(t -> t-1) = (dx, dy),
/// F(t -> 1) = ((t-1) dx, (t-1) dy), backward flows are the negations.
FlowSet synth_translation_flows(int frames, double dx, double dy, int height, int width,
                                OcclusionThresholds th = {});

/// Middlebury .flo: float32 magic 202021.25, int32 width, int32 height, then
/// interleaved float32 (u, v), row-major, little-endian.
void write_flow_file(const FlowField& flow, const std::filesystem::path& path);
FlowField read_flow_file(const std::filesystem::path& path);

/// Flow directory layout used by the CLI: for t = 2..T (1-based)
///   short_%06d_fwd.flo  short_%06d_bwd.flo  long_%06d_fwd.flo  long_%06d_bwd.flo
/// Masks are recomputed on load.
void write_flow_set(const FlowSet& flows, const std::filesystem::path& dir);
FlowSet read_flow_set(const std::filesystem::path& dir, int frames, OcclusionThresholds th = {});

}  // namespace dvp
