#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dvp/flow.hpp"
#include "dvp/video.hpp"

namespace dvp {

/// Clean clip with exactly known motion.
struct MovingClip {
    VideoClip clip;
    FlowSet flows;
};

/// Camera pan over a fixed, seeded procedural texture: frame k shows the
/// texture shifted so that frame k at x matches frame k-1 at x + (dx, dy).
/// Requires |dx| (T-1) < width and |dy| (T-1) < height.
MovingClip make_moving_clip(int frames, int height, int width, double dx, double dy, std::uint64_t seed,
                            int channels = 3);

/// P_t = clamp(I_t + g_t I_t + n_t), g_t ~ U(-sigma, sigma) per frame,
/// n_t ~ N(0, sigma/2) per sample. sigma = 0 returns the input unchanged.
VideoClip apply_unimodal_flicker(const VideoClip& clip, double sigma, std::uint64_t seed);

/// Affine colour transform P = clamp(gain * I + bias). Gray clips use
/// gain[0][0] and bias[0].
struct ModeTransform {
    std::array<std::array<double, 3>, 3> gain{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    std::array<double, 3> bias{0, 0, 0};

    static ModeTransform identity() { return {}; }
    friend bool operator==(const ModeTransform&, const ModeTransform&) = default;
};

enum class SynthKind { unimodal, multimodal };

struct SynthSpec {
    SynthKind kind = SynthKind::unimodal;
    double sigma = 0.0;                  // unimodal noise scale, or extra jitter for multimodal
    std::vector<ModeTransform> modes;    // multimodal only
    std::vector<int> switch_pattern;     // multimodal only, one mode index per frame
    std::uint64_t seed = 0;

    /// Throws InvalidArgument; `frames` is the clip length the spec will be applied to.
    void validate(int frames) const;
};

/// Two tints half a unit apart in red and blue: a per-pixel frame-mean L1 gap
/// of exactly 1/3 between the renditions of any clip.
std::vector<ModeTransform> default_two_modes();

/// `count` frames alternating 0, 1, 0, 1, ...
std::vector<int> alternating_pattern(int count);

Frame apply_mode(const Frame& frame, const ModeTransform& mode);
VideoClip render_mode(const VideoClip& clip, const ModeTransform& mode);

struct MultimodalResult {
    VideoClip processed;
    std::vector<int> labels;
};

/// P_t = clamp(A_m(t) I_t + b_m(t)), plus unimodal jitter when spec.sigma > 0.
MultimodalResult apply_multimodal_flicker(const VideoClip& clip, const SynthSpec& spec);

/// Mean over frames of the frame-mean L1 distance between the renditions of
/// two modes.
double mode_gap(const VideoClip& clip, const ModeTransform& a, const ModeTransform& b);

}  // namespace dvp
