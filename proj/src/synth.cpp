#include "dvp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace dvp {

namespace {

// Sum of oriented sinusoids plus a few soft blobs, defined on continuous world
// coordinates so any sub-pixel shift is rendered exactly.
class Texture {
public:
    // Blobs are scattered over [x0, x1] x [y0, y1] plus a margin.
    Texture(std::uint64_t seed, int channels, double x0, double x1, double y0, double y1) : channels_(channels) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (auto& w : waves_) {
            const double period = 6.0 + 26.0 * unit(rng);
            const double angle = 2.0 * std::numbers::pi * unit(rng);
            w.kx = std::cos(angle) * 2.0 * std::numbers::pi / period;
            w.ky = std::sin(angle) * 2.0 * std::numbers::pi / period;
            w.phase = 2.0 * std::numbers::pi * unit(rng);
            for (auto& a : w.amp) a = 0.08 * (unit(rng) * 2.0 - 1.0);
        }
        blobs_.resize(static_cast<std::size_t>(std::max(10.0, (x1 - x0) * (y1 - y0) / 400.0)));
        for (auto& b : blobs_) {
            b.x = x0 - 16.0 + (x1 - x0 + 32.0) * unit(rng);
            b.y = y0 - 16.0 + (y1 - y0 + 32.0) * unit(rng);
            b.r = 4.0 + 10.0 * unit(rng);
            for (auto& a : b.amp) a = 0.3 * (unit(rng) * 2.0 - 1.0);
        }
        for (auto& base : base_) base = 0.35 + 0.3 * unit(rng);
    }

    double operator()(double x, double y, int c) const {
        double v = base_[static_cast<std::size_t>(c)];
        for (const auto& w : waves_) v += w.amp[static_cast<std::size_t>(c)] * std::sin(w.kx * x + w.ky * y + w.phase);
        for (const auto& b : blobs_) {
            const double d2 = ((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y)) / (b.r * b.r);
            v += b.amp[static_cast<std::size_t>(c)] * std::exp(-d2);
        }
        return std::clamp(v, 0.05, 0.95);
    }

    int channels() const noexcept { return channels_; }

private:
    struct Wave {
        double kx, ky, phase;
        std::array<double, 3> amp;
    };
    struct Blob {
        double x, y, r;
        std::array<double, 3> amp;
    };
    int channels_;
    std::array<Wave, 6> waves_{};
    std::vector<Blob> blobs_;
    std::array<double, 3> base_{};
};

std::mt19937_64 frame_rng(std::uint64_t seed, int frame) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(frame)};
    return std::mt19937_64(seq);
}

}  // namespace

MovingClip make_moving_clip(int frames, int height, int width, double dx, double dy, std::uint64_t seed,
                            int channels) {
    if (frames < 2) throw InvalidArgument("make_moving_clip: need at least 2 frames");
    if (std::fabs(dx) * (frames - 1) >= width || std::fabs(dy) * (frames - 1) >= height)
        throw InvalidArgument("make_moving_clip: total motion exceeds the frame");
    const double span_x = dx * (frames - 1), span_y = dy * (frames - 1);
    const Texture texture(seed, channels, std::min(0.0, span_x), width + std::max(0.0, span_x), std::min(0.0, span_y),
                          height + std::max(0.0, span_y));
    std::vector<Frame> out;
    out.reserve(static_cast<std::size_t>(frames));
    for (int k = 0; k < frames; ++k) {
        Frame f(height, width, channels);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                for (int c = 0; c < channels; ++c)
                    f.at(y, x, c) = static_cast<float>(texture(x + k * dx, y + k * dy, c));
        out.push_back(std::move(f));
    }
    return {VideoClip(std::move(out)), synth_translation_flows(frames, dx, dy, height, width)};
}

VideoClip apply_unimodal_flicker(const VideoClip& clip, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw InvalidArgument("unimodal flicker: sigma must be non-negative");
    if (sigma == 0.0) return clip;
    std::vector<Frame> out;
    out.reserve(static_cast<std::size_t>(clip.length()));
    for (int t = 0; t < clip.length(); ++t) {
        auto rng = frame_rng(seed, t);
        std::uniform_real_distribution<double> gain_dist(-sigma, sigma);
        std::normal_distribution<double> noise(0.0, sigma / 2.0);
        const double gain = gain_dist(rng);
        Frame f = clip[t];
        for (auto& v : f.data()) v = static_cast<float>(std::clamp(v + gain * v + noise(rng), 0.0, 1.0));
        out.push_back(std::move(f));
    }
    return VideoClip(std::move(out));
}

void SynthSpec::validate(int frames) const {
    if (!(sigma >= 0.0)) throw InvalidArgument("synth spec: sigma must be non-negative");
    if (kind == SynthKind::unimodal) return;
    if (modes.size() < 2) throw InvalidArgument("synth spec: multimodal flicker needs at least 2 modes");
    if (switch_pattern.size() != static_cast<std::size_t>(frames))
        throw InvalidArgument("synth spec: switch pattern has " + std::to_string(switch_pattern.size()) +
                              " entries for " + std::to_string(frames) + " frames");
    for (int m : switch_pattern)
        if (m < 0 || m >= static_cast<int>(modes.size()))
            throw InvalidArgument("synth spec: mode index " + std::to_string(m) + " out of range");
}

std::vector<ModeTransform> default_two_modes() {
    ModeTransform warm, cool;
    for (int c = 0; c < 3; ++c) {
        warm.gain[c][c] = 0.5;
        cool.gain[c][c] = 0.5;
    }
    warm.bias = {0.5, 0.25, 0.0};
    cool.bias = {0.0, 0.25, 0.5};
    return {warm, cool};
}

std::vector<int> alternating_pattern(int count) {
    std::vector<int> p(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) p[static_cast<std::size_t>(i)] = i % 2;
    return p;
}

Frame apply_mode(const Frame& frame, const ModeTransform& mode) {
    Frame out = frame;
    const int C = frame.channels();
    for (std::size_t p = 0; p < frame.pixel_count(); ++p) {
        const float* in = frame.data().data() + p * C;
        float* dst = out.data().data() + p * C;
        if (C == 1) {
            dst[0] = static_cast<float>(std::clamp(mode.gain[0][0] * in[0] + mode.bias[0], 0.0, 1.0));
            continue;
        }
        for (int r = 0; r < 3; ++r) {
            double v = mode.bias[static_cast<std::size_t>(r)];
            for (int c = 0; c < 3; ++c) v += mode.gain[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] * in[c];
            dst[r] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

VideoClip render_mode(const VideoClip& clip, const ModeTransform& mode) {
    std::vector<Frame> out;
    out.reserve(static_cast<std::size_t>(clip.length()));
    for (const auto& f : clip) out.push_back(apply_mode(f, mode));
    return VideoClip(std::move(out));
}

MultimodalResult apply_multimodal_flicker(const VideoClip& clip, const SynthSpec& spec) {
    if (spec.kind != SynthKind::multimodal) throw InvalidArgument("multimodal flicker: spec kind is not multimodal");
    spec.validate(clip.length());
    std::vector<Frame> out;
    out.reserve(static_cast<std::size_t>(clip.length()));
    for (int t = 0; t < clip.length(); ++t)
        out.push_back(apply_mode(clip[t], spec.modes[static_cast<std::size_t>(spec.switch_pattern[static_cast<std::size_t>(t)])]));
    VideoClip processed(std::move(out));
    if (spec.sigma > 0.0) processed = apply_unimodal_flicker(processed, spec.sigma, spec.seed);
    return {std::move(processed), spec.switch_pattern};
}

double mode_gap(const VideoClip& clip, const ModeTransform& a, const ModeTransform& b) {
    double sum = 0.0;
    for (const auto& f : clip) sum += frame_distance_l1(apply_mode(f, a), apply_mode(f, b));
    return sum / clip.length();
}

}  // namespace dvp
