#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dvp/flow.hpp"
#include "dvp/generator.hpp"
#include "dvp/irt.hpp"
#include "dvp/loss.hpp"
#include "dvp/metrics.hpp"
#include "dvp/video.hpp"

namespace dvp {

enum class FrameOrder { sequential, shuffled };

/// Adam hyper-parameters.
struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    int epochs = 25;
    /// One frame pair per update; fixed, stored for the manifest.
    int batch_size = 1;
    bool irt_enabled = false;
    double delta = 0.02;
    /// IRT warm-up iterations on the first frame; unset means one per frame (T).
    std::optional<long> anchor_iterations;
    DataTerm data_term = DataTerm::l1();
    std::uint64_t seed = 0;
    FrameOrder frame_order = FrameOrder::sequential;
    /// Keep full-clip inference results every this many epochs (0 = never).
    int snapshot_every = 5;
    AdamConfig adam;

    /// Throws InvalidArgument.
    void validate() const;
};

struct Snapshot {
    int epoch = 0;
    VideoClip main;
    std::optional<VideoClip> minor;
};

struct TrainResult {
    GeneratorParams params;
    std::vector<Snapshot> snapshots;
    MetricsTrace trace;
};

/// Observers for instrumentation and progress output. All optional.
struct TrainHooks {
    /// Called before each update with the epoch (0 during anchoring, else
    /// 1-based), the global iteration count and the frame index being read.
    std::function<void(int epoch, long iteration, int frame, bool anchored)> on_iteration;
    /// Called after each epoch's evaluation with the fresh trace record.
    std::function<void(const MetricsRecord&, const GeneratorParams&)> on_epoch;
};

/// Adam state congruent with the generator parameters.
class AdamOptimizer {
public:
    AdamOptimizer(const GeneratorParams& params, double learning_rate, AdamConfig cfg = {});
    void step(GeneratorParams& params, const GeneratorParams& grad);
    long steps() const noexcept { return t_; }

private:
    double lr_;
    AdamConfig cfg_;
    long t_ = 0;
    GeneratorParams m_;
    GeneratorParams v_;
};

/// Iteration-level driver behind train_dvp: owns the parameters and the Adam
/// state and performs one single-frame update per step().
class DvpTrainer {
public:
    DvpTrainer(const VideoClip& input, const VideoClip& processed, const GeneratorConfig& net_cfg,
               const TrainConfig& train_cfg);

    /// Train on frame `t`. `anchored` forces an all-ones confidence map under
    /// IRT. Returns the loss; throws NonFiniteLoss (epoch -1) on divergence.
    double step(int t, bool anchored = false);

    const GeneratorParams& params() const noexcept { return params_; }
    long iterations() const noexcept { return adam_.steps(); }
    const TrainConfig& config() const noexcept { return cfg_; }

private:
    const VideoClip& input_;
    const VideoClip& processed_;
    TrainConfig cfg_;
    GeneratorParams params_;
    AdamOptimizer adam_;
};

/// Fit the generator to map input frames to processed frames, one frame pair
/// per iteration, epochs x T iterations (plus the anchoring warm-up under
/// IRT). With flows given, each epoch's trace record also carries E_warp of
/// the current main output.
TrainResult train_dvp(const VideoClip& input, const VideoClip& processed, const GeneratorConfig& net_cfg,
                      const TrainConfig& train_cfg, const FlowSet* flows = nullptr, const TrainHooks& hooks = {});

struct InferenceResult {
    VideoClip main;
    std::optional<VideoClip> minor;
};

/// Per-frame forward pass, outputs clamped to [0,1].
InferenceResult infer_clip(const GeneratorParams& params, const VideoClip& input);

/// Confidence maps of the final network on every frame (for visualisation).
std::vector<ConfidenceMap> confidence_maps(const GeneratorParams& params, const VideoClip& input,
                                           const VideoClip& processed, double delta);

struct StopPolicy {
    enum class Kind { fixed, knee } kind = Kind::fixed;
    int epoch = 25;       // fixed
    double lambda = 1.0;  // knee
};

/// Fixed: the configured epoch (capped at the last recorded one). Knee: the
/// recorded epoch maximising F_data - lambda * E_norm, where E_norm maps the
/// recorded E_warp range onto [0,1]. Ties go to the earlier epoch.
int select_stop_epoch(const MetricsTrace& trace, const StopPolicy& policy);

}  // namespace dvp
