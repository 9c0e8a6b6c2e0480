#include "dvp/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace dvp {

double e_pair(const Frame& o_t, const Frame& o_s, const FlowField& flow_ts, const OcclusionMask& mask) {
    require_same_shape(o_t, o_s, "e_pair");
    if (flow_ts.height() != o_t.height() || flow_ts.width() != o_t.width() || mask.height() != o_t.height() ||
        mask.width() != o_t.width())
        throw ShapeError("e_pair: flow or mask size differs from frames");
    const std::size_t valid = mask.count();
    if (valid == 0) throw EmptyMask("e_pair: occlusion mask has no valid pixel");

    const Frame warped = backward_warp(o_s, flow_ts);
    const int C = o_t.channels();
    double sum = 0.0;
    for (int y = 0; y < o_t.height(); ++y)
        for (int x = 0; x < o_t.width(); ++x) {
            if (!mask.at(y, x)) continue;
            for (int c = 0; c < C; ++c)
                sum += std::fabs(static_cast<double>(o_t.at(y, x, c)) - warped.at(y, x, c));
        }
    return sum / static_cast<double>(valid);
}

WarpBreakdown e_warp_breakdown(const VideoClip& clip, const FlowSet& flows) {
    const int T = clip.length();
    if (T < 2) throw InvalidArgument("e_warp: clip needs at least 2 frames");
    if (flows.short_term.size() != static_cast<std::size_t>(T - 1) ||
        flows.long_term.size() != static_cast<std::size_t>(T - 1))
        throw ShapeError("e_warp: expected " + std::to_string(T - 1) + " short- and long-term flows, got " +
                         std::to_string(flows.short_term.size()) + " and " + std::to_string(flows.long_term.size()));

    WarpBreakdown b;
    b.short_term.assign(static_cast<std::size_t>(T - 1), 0.0);
    b.long_term.assign(static_cast<std::size_t>(T - 1), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < T - 1; ++i) {
        const auto& s = flows.short_term[static_cast<std::size_t>(i)];
        const auto& l = flows.long_term[static_cast<std::size_t>(i)];
        b.short_term[static_cast<std::size_t>(i)] = e_pair(clip[i + 1], clip[i], s.forward, s.mask);
        b.long_term[static_cast<std::size_t>(i)] = e_pair(clip[i + 1], clip[0], l.forward, l.mask);
    }
    double sum = 0.0;
    for (int i = 0; i < T - 1; ++i)
        sum += b.long_term[static_cast<std::size_t>(i)] + b.short_term[static_cast<std::size_t>(i)];
    b.e_warp = sum / (T - 1);
    return b;
}

double e_warp(const VideoClip& clip, const FlowSet& flows) { return e_warp_breakdown(clip, flows).e_warp; }

double psnr(const Frame& a, const Frame& b) {
    require_same_shape(a, b, "psnr");
    const auto x = a.data();
    const auto y = b.data();
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - y[i];
        sse += d * d;
    }
    const double mse = sse / static_cast<double>(x.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double f_data(const VideoClip& processed, const VideoClip& output) {
    require_same_shape(processed, output, "f_data");
    const int T = processed.length();
    if (T < 2) throw InvalidArgument("f_data: clips need at least 2 frames");
    std::vector<double> per_frame(static_cast<std::size_t>(T), 0.0);
#pragma omp parallel for schedule(static)
    for (int t = 1; t < T; ++t) per_frame[static_cast<std::size_t>(t)] = psnr(processed[t], output[t]);
    double sum = 0.0;
    for (int t = 1; t < T; ++t) sum += per_frame[static_cast<std::size_t>(t)];
    return sum / (T - 1);
}

std::vector<double> mean_intensity_trace(const VideoClip& clip) {
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(clip.length()));
    for (const auto& f : clip) {
        double sum = 0.0;
        for (float v : f.data()) sum += v;
        trace.push_back(sum / static_cast<double>(f.size()));
    }
    return trace;
}

void MetricsTrace::append(MetricsRecord r) {
    if (!records_.empty() && r.epoch <= records_.back().epoch)
        throw InvalidArgument("metrics trace: epochs must strictly increase");
    if (r.e_warp && *r.e_warp < 0.0) throw InvalidArgument("metrics trace: E_warp must be non-negative");
    records_.push_back(r);
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

void MetricsTrace::write_csv(const std::filesystem::path& path, bool include_timing) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "epoch,F_data,E_warp,wall_seconds\n";
    for (const auto& r : records_) {
        os << r.epoch << ',' << num(r.f_data) << ',' << (r.e_warp ? num(*r.e_warp) : "") << ','
           << (include_timing ? num(r.wall_seconds) : "") << '\n';
    }
    if (!os) throw IoError("cannot write " + path.string());
}

MetricsReport evaluate_clip(const VideoClip& clip, const FlowSet& flows, const VideoClip* reference) {
    MetricsReport r;
    auto b = e_warp_breakdown(clip, flows);
    r.e_pair_short = std::move(b.short_term);
    r.e_pair_long = std::move(b.long_term);
    r.e_warp = b.e_warp;
    r.mean_intensity = mean_intensity_trace(clip);
    if (reference) {
        require_same_shape(*reference, clip, "metrics reference");
        for (int t = 0; t < clip.length(); ++t) r.psnr.push_back(psnr((*reference)[t], clip[t]));
        r.f_data = f_data(*reference, clip);
    }
    return r;
}

void write_metrics_csv(const MetricsReport& r, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "t,e_pair_short,e_pair_long,psnr,mean_intensity\n";
    for (std::size_t i = 0; i < r.mean_intensity.size(); ++i) {
        os << (i + 1) << ',';
        if (i > 0) os << num(r.e_pair_short[i - 1]) << ',' << num(r.e_pair_long[i - 1]) << ',';
        else os << ",,";
        os << (r.psnr.empty() ? "" : num(r.psnr[i])) << ',' << num(r.mean_intensity[i]) << '\n';
    }
    os << "aggregate,E_warp=" << num(r.e_warp) << ",F_data=" << (r.f_data ? num(*r.f_data) : "") << ",,\n";
    if (!os) throw IoError("cannot write " + path.string());
}

}  // namespace dvp
