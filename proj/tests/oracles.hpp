#pragma once

// Brute-force re-implementations used as ground truth by the tests. They are
// written straight from the definitions, pixel by pixel in double precision,
// and share no code with the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dvp/flow.hpp"
#include "dvp/video.hpp"

namespace oracle {

using dvp::FlowField;
using dvp::Frame;
using dvp::OcclusionMask;
using dvp::VideoClip;

inline Frame random_frame(std::mt19937_64& rng, int h, int w, int c, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Frame f(h, w, c);
    for (auto& v : f.data()) v = static_cast<float>(u(rng));
    return f;
}

inline VideoClip random_clip(std::mt19937_64& rng, int T, int h, int w, int c) {
    std::vector<Frame> frames;
    for (int t = 0; t < T; ++t) frames.push_back(random_frame(rng, h, w, c));
    return VideoClip(std::move(frames));
}

inline FlowField random_flow(std::mt19937_64& rng, int h, int w, double mag) {
    std::uniform_real_distribution<double> u(-mag, mag);
    FlowField f(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.set(y, x, static_cast<float>(u(rng)), static_cast<float>(u(rng)));
    return f;
}

// Negated copy of `fwd` with added noise of the given amplitude.
inline FlowField perturbed_inverse(std::mt19937_64& rng, const FlowField& fwd, double noise) {
    std::uniform_real_distribution<double> u(-noise, noise);
    FlowField b(fwd.height(), fwd.width());
    for (int y = 0; y < fwd.height(); ++y)
        for (int x = 0; x < fwd.width(); ++x)
            b.set(y, x, static_cast<float>(-fwd.u(y, x) + u(rng)), static_cast<float>(-fwd.v(y, x) + u(rng)));
    return b;
}

// Value of plane `get` at real position (px, py); nullopt-like flag when the
// position is outside [0, w-1] x [0, h-1].
template <typename Get>
bool bilinear(Get get, int h, int w, double px, double py, double& out) {
    if (!(px >= 0.0 && py >= 0.0 && px <= w - 1 && py <= h - 1)) return false;
    const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0, fy = py - y0;
    double acc = 0.0;
    for (int dy = 0; dy <= 1; ++dy)
        for (int dx = 0; dx <= 1; ++dx) {
            const double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
            if (wgt == 0.0) continue;
            acc += wgt * get(std::min(y0 + dy, h - 1), std::min(x0 + dx, w - 1));
        }
    out = acc;
    return true;
}

inline double warp_sample(const Frame& src, const FlowField& flow, int y, int x, int c, bool& valid) {
    double v = 0.0;
    valid = bilinear([&](int yy, int xx) { return static_cast<double>(src.at(yy, xx, c)); }, src.height(),
                     src.width(), x + static_cast<double>(flow.u(y, x)), y + static_cast<double>(flow.v(y, x)), v);
    return valid ? v : 0.0;
}

inline double e_pair(const Frame& ot, const Frame& os, const FlowField& flow, const OcclusionMask& mask) {
    double sum = 0.0;
    long count = 0;
    for (int y = 0; y < ot.height(); ++y)
        for (int x = 0; x < ot.width(); ++x) {
            if (!mask.at(y, x)) continue;
            ++count;
            for (int c = 0; c < ot.channels(); ++c) {
                bool valid = false;
                const double w = warp_sample(os, flow, y, x, c, valid);
                sum += std::fabs(static_cast<double>(ot.at(y, x, c)) - w);
            }
        }
    return count ? sum / static_cast<double>(count) : -1.0;
}

inline double e_warp(const VideoClip& clip, const dvp::FlowSet& flows) {
    double sum = 0.0;
    for (int t = 1; t < clip.length(); ++t) {
        const auto& s = flows.short_term[static_cast<std::size_t>(t - 1)];
        const auto& l = flows.long_term[static_cast<std::size_t>(t - 1)];
        sum += oracle::e_pair(clip[t], clip[t - 1], s.forward, s.mask);
        sum += oracle::e_pair(clip[t], clip[0], l.forward, l.mask);
    }
    return sum / (clip.length() - 1);
}

inline double psnr(const Frame& a, const Frame& b) {
    double sse = 0.0;
    long n = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            for (int c = 0; c < a.channels(); ++c, ++n) {
                const double d = static_cast<double>(a.at(y, x, c)) - b.at(y, x, c);
                sse += d * d;
            }
    if (sse == 0.0) return 99.0;
    return std::min(99.0, -10.0 * std::log10(sse / static_cast<double>(n)));
}

inline double f_data(const VideoClip& p, const VideoClip& o) {
    double sum = 0.0;
    for (int t = 1; t < p.length(); ++t) sum += oracle::psnr(p[t], o[t]);
    return sum / (p.length() - 1);
}

inline std::vector<std::uint8_t> confidence(const Frame& main, const Frame& minor, const Frame& p, double delta) {
    std::vector<std::uint8_t> out;
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) {
            double dm = 0.0, dn = 0.0;
            for (int c = 0; c < p.channels(); ++c) {
                dm += std::fabs(static_cast<double>(main.at(y, x, c)) - p.at(y, x, c));
                dn += std::fabs(static_cast<double>(minor.at(y, x, c)) - p.at(y, x, c));
            }
            dm /= p.channels();
            dn /= p.channels();
            out.push_back(dm < std::max(dn, delta) ? 1 : 0);
        }
    return out;
}

inline std::vector<std::uint8_t> occlusion(const FlowField& fwd, const FlowField& bwd, double a, double b) {
    const int h = fwd.height(), w = fwd.width();
    std::vector<std::uint8_t> out;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double fu = fwd.u(y, x), fv = fwd.v(y, x);
            double bu = 0.0, bv = 0.0;
            const bool in_u = bilinear([&](int yy, int xx) { return static_cast<double>(bwd.u(yy, xx)); }, h, w,
                                       x + fu, y + fv, bu);
            bilinear([&](int yy, int xx) { return static_cast<double>(bwd.v(yy, xx)); }, h, w, x + fu, y + fv, bv);
            if (!in_u) {
                out.push_back(0);
                continue;
            }
            const double lhs = (fu + bu) * (fu + bu) + (fv + bv) * (fv + bv);
            const double rhs = a * (fu * fu + fv * fv + bu * bu + bv * bv) + b;
            out.push_back(lhs > rhs ? 0 : 1);
        }
    return out;
}

inline double frame_l1(const Frame& a, const Frame& b) {
    double s = 0.0;
    long n = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            for (int c = 0; c < a.channels(); ++c, ++n) s += std::fabs(static_cast<double>(a.at(y, x, c)) - b.at(y, x, c));
    return s / static_cast<double>(n);
}

// Parameter count of the generator derived layer by layer from the
// architecture description, without the library's layer table.
inline long generator_parameter_count(int in_ch, int heads, int base, int depth) {
    auto conv = [](long ci, long co, long k) { return ci * co * k * k + co; };
    long total = 0;
    long ch = in_ch;
    std::vector<long> skips;
    for (int l = 0; l < depth; ++l) {
        const long wl = static_cast<long>(base) << l;
        total += conv(ch, wl, 3) + conv(wl, wl, 3);
        skips.push_back(wl);
        ch = wl;
    }
    const long mid = depth > 0 ? (static_cast<long>(base) << (depth - 1)) : base;
    total += conv(ch, mid, 3) + conv(mid, mid, 3);
    ch = mid;
    for (int l = depth - 1; l >= 0; --l) {
        const long wl = static_cast<long>(base) << l;
        total += conv(ch + skips[static_cast<std::size_t>(l)], wl, 3) + conv(wl, wl, 3);
        ch = wl;
    }
    total += conv(ch, static_cast<long>(heads) * in_ch, 1);
    return total;
}

}  // namespace oracle
