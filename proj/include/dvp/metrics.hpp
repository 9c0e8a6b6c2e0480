#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "dvp/flow.hpp"
#include "dvp/video.hpp"

namespace dvp {

/// PSNR returned for identical frames.
inline constexpr double kPsnrCap = 99.0;

/// Masked warping error between o_t and o_s aligned by flow (t -> s): mean over
/// unmasked pixels of the channel-summed absolute difference. Throws EmptyMask
/// when no pixel is valid.
double e_pair(const Frame& o_t, const Frame& o_s, const FlowField& flow_ts, const OcclusionMask& mask);

/// Average over t = 2..T of E_pair against the previous frame and against the
/// first frame.
double e_warp(const VideoClip& clip, const FlowSet& flows);

/// Per-frame breakdown of e_warp: entry i belongs to clip index i + 1.
struct WarpBreakdown {
    std::vector<double> short_term;
    std::vector<double> long_term;
    double e_warp = 0.0;
};
WarpBreakdown e_warp_breakdown(const VideoClip& clip, const FlowSet& flows);

/// Peak 1.0; identical frames give kPsnrCap.
double psnr(const Frame& a, const Frame& b);

/// Mean PSNR(P_t, O_t) over t = 2..T; the first frame never contributes.
double f_data(const VideoClip& processed, const VideoClip& output);

std::vector<double> mean_intensity_trace(const VideoClip& clip);

struct MetricsRecord {
    int epoch = 0;
    double f_data = 0.0;
    std::optional<double> e_warp;
    double wall_seconds = 0.0;
};

/// Per-epoch record of training quality; epochs strictly increase.
class MetricsTrace {
public:
    void append(MetricsRecord r);
    const std::vector<MetricsRecord>& records() const noexcept { return records_; }
    bool empty() const noexcept { return records_.empty(); }
    std::size_t size() const noexcept { return records_.size(); }
    const MetricsRecord& operator[](std::size_t i) const { return records_.at(i); }

    /// trace.csv: epoch,F_data,E_warp,wall_seconds. E_warp is empty without
    /// flow; wall_seconds is empty unless include_timing.
    void write_csv(const std::filesystem::path& path, bool include_timing) const;

private:
    std::vector<MetricsRecord> records_;
};

struct MetricsReport {
    std::vector<double> e_pair_short;  // T-1 entries
    std::vector<double> e_pair_long;   // T-1 entries
    std::vector<double> psnr;          // T entries when a reference is given, else empty
    std::vector<double> mean_intensity;
    double e_warp = 0.0;
    std::optional<double> f_data;
};

MetricsReport evaluate_clip(const VideoClip& clip, const FlowSet& flows, const VideoClip* reference = nullptr);

/// metrics.csv: t,e_pair_short,e_pair_long,psnr,mean_intensity, then a footer
/// row `aggregate,E_warp=<v>,F_data=<v>,,`. Frame 1 has empty E_pair cells.
void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace dvp
