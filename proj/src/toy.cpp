#include "dvp/toy.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>

#include "dvp/irt.hpp"
#include "dvp/trainer.hpp"

namespace dvp {

void ToyConfig::validate() const {
    if (iterations < 1) throw InvalidArgument("toy: iterations must be positive");
    if (record_every < 1 || record_every > iterations)
        throw InvalidArgument("toy: record_every must be between 1 and iterations");
    if (frames < 2) throw InvalidArgument("toy: need at least 2 frames");
    if (size < 4) throw InvalidArgument("toy: frames must be at least 4x4");
    if (sigma < 0.0) throw InvalidArgument("toy: sigma must be non-negative");
    if (irt && mode != SynthKind::multimodal) throw InvalidArgument("toy: --irt needs the multimodal mode");
}

namespace {

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double mean_pairwise_distance(const VideoClip& clip) {
    double sum = 0.0;
    long n = 0;
    for (int s = 0; s < clip.length(); ++s)
        for (int t = s + 1; t < clip.length(); ++t, ++n) sum += frame_distance_l1(clip[s], clip[t]);
    return sum / static_cast<double>(n);
}

double ToyRecord::mean_pairwise() const {
    const std::size_t T = pairwise.size();
    double sum = 0.0;
    for (std::size_t s = 0; s < T; ++s)
        for (std::size_t t = s + 1; t < T; ++t) sum += pairwise[s][t];
    return sum / static_cast<double>(T * (T - 1) / 2);
}

double ToyRecord::mean_to_processed() const { return mean_of(to_processed); }
double ToyRecord::mean_to_truth() const { return mean_of(to_truth); }

ToyTrace toy_experiment(const ToyConfig& cfg) {
    cfg.validate();
    const bool multimodal = cfg.mode == SynthKind::multimodal;
    // Slow pan so neighbouring inputs differ a little, as in a real video.
    const auto clean = make_moving_clip(cfg.frames, cfg.size, cfg.size, cfg.motion, 0.0, cfg.seed).clip;

    std::vector<ModeTransform> modes;
    std::optional<VideoClip> render_a, render_b;
    VideoClip processed = clean;
    if (multimodal) {
        SynthSpec spec;
        spec.kind = SynthKind::multimodal;
        spec.modes = default_two_modes();
        spec.switch_pattern = alternating_pattern(cfg.frames);
        spec.seed = cfg.seed + 1;
        processed = apply_multimodal_flicker(clean, spec).processed;
        render_a = render_mode(clean, spec.modes[0]);
        render_b = render_mode(clean, spec.modes[1]);
    } else {
        processed = apply_unimodal_flicker(clean, cfg.sigma, cfg.seed + 1);
    }

    GeneratorConfig net;
    net.in_channels = clean.channels();
    net.out_heads = cfg.irt ? 2 : 1;
    net.base_width = cfg.base_width;
    net.depth = cfg.depth;
    net.seed = cfg.seed;

    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.irt_enabled = cfg.irt;
    DvpTrainer trainer(clean, processed, net, tc);
    const long anchor = cfg.irt ? cfg.frames : 0;

    std::vector<int> order(static_cast<std::size_t>(cfg.frames));
    std::iota(order.begin(), order.end(), 0);

    ToyTrace trace;
    trace.config = cfg;
    trace.processed_pairwise = mean_pairwise_distance(processed);
    const auto T = static_cast<std::size_t>(cfg.frames);

    auto record = [&](long iteration) {
        const auto out = infer_clip(trainer.params(), clean).main;
        ToyRecord r;
        r.iteration = iteration;
        r.pairwise.assign(T, std::vector<double>(T, 0.0));
        for (std::size_t s = 0; s < T; ++s)
            for (std::size_t t = s + 1; t < T; ++t)
                r.pairwise[s][t] = r.pairwise[t][s] = frame_distance_l1(out[static_cast<int>(s)], out[static_cast<int>(t)]);
        for (int t = 0; t < cfg.frames; ++t) {
            r.to_processed.push_back(frame_distance_l1(out[t], processed[t]));
            r.to_truth.push_back(frame_distance_l1(out[t], clean[t]));
            if (multimodal) {
                r.to_mode_a.push_back(frame_distance_l1(out[t], (*render_a)[t]));
                r.to_mode_b.push_back(frame_distance_l1(out[t], (*render_b)[t]));
            }
        }
        trace.records.push_back(std::move(r));
    };

    record(0);
    for (long it = 0; it < cfg.iterations; ++it) {
        const auto sf = anchored_schedule(it, anchor, order);
        trainer.step(sf.frame, sf.anchored);
        if ((it + 1) % cfg.record_every == 0) record(it + 1);
    }
    return trace;
}

void ToyTrace::write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    const bool modes = config.mode == SynthKind::multimodal;
    os << "iteration,mean_pairwise_output,mean_output_to_processed,mean_output_to_truth";
    if (modes) os << ",mean_output_to_mode_a,mean_output_to_mode_b";
    os << '\n';
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.9g", v);
        os << buf;
    };
    for (const auto& r : records) {
        os << r.iteration;
        put(r.mean_pairwise());
        put(r.mean_to_processed());
        put(r.mean_to_truth());
        if (modes) {
            put(mean_of(r.to_mode_a));
            put(mean_of(r.to_mode_b));
        }
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace dvp
