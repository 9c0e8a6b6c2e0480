#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dvp/synth.hpp"

namespace dvp {

struct ToyConfig {
    SynthKind mode = SynthKind::unimodal;
    long iterations = 20000;
    long record_every = 1000;
    bool irt = false;
    std::uint64_t seed = 0;

    // The data and network behind the experiment.
    int frames = 8;
    int size = 8;
    double motion = 0.25;  // horizontal pan per frame, pixels
    double sigma = 0.15;
    int base_width = 32;
    int depth = 1;
    double learning_rate = 1e-3;

    void validate() const;
};

/// One checkpoint. Distances are frame-mean L1 (mean absolute difference over
/// all samples of the frame).
struct ToyRecord {
    long iteration = 0;
    std::vector<std::vector<double>> pairwise;  // frames x frames, among outputs
    std::vector<double> to_processed;           // |O_t - P_t|
    std::vector<double> to_truth;               // |O_t - I_t|
    std::vector<double> to_mode_a;              // multimodal only
    std::vector<double> to_mode_b;

    double mean_pairwise() const;
    double mean_to_processed() const;
    double mean_to_truth() const;
};

struct ToyTrace {
    ToyConfig config;
    /// Mean pairwise distance among the processed frames, the yardstick for
    /// the output spread.
    double processed_pairwise = 0.0;
    std::vector<ToyRecord> records;  // iterations / record_every + 1 rows

    /// toy_trace.csv
    void write_csv(const std::filesystem::path& path) const;
};

double mean_pairwise_distance(const VideoClip& clip);

/// Trains a small generator on a synthetic clip, recording the spread of the
/// outputs at iteration 0 and every record_every iterations. Multimodal runs
/// use an alternating two-mode clip; with irt set they use the two-head
/// generator, anchored on frame 0 (a mode-A frame) for `frames` iterations.
ToyTrace toy_experiment(const ToyConfig& cfg);

}  // namespace dvp
