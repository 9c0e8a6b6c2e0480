#include "dvp/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace dvp {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw InvalidArgument("train config: learning rate must be positive");
    if (epochs < 1) throw InvalidArgument("train config: epochs must be at least 1");
    if (batch_size != 1) throw InvalidArgument("train config: only batch size 1 is supported");
    if (!(delta > 0.0)) throw InvalidArgument("train config: delta must be positive");
    if (anchor_iterations && *anchor_iterations < 0)
        throw InvalidArgument("train config: anchor iterations must be non-negative");
    if (snapshot_every < 0) throw InvalidArgument("train config: snapshot_every must be non-negative");
    if (data_term.kind == DataTermKind::hook && !data_term.hook)
        throw InvalidArgument("train config: hook data term selected without a hook");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0))
        throw InvalidArgument("train config: invalid Adam parameters");
}

AdamOptimizer::AdamOptimizer(const GeneratorParams& params, double learning_rate, AdamConfig cfg)
    : lr_(learning_rate), cfg_(cfg), m_(params.zeros_like()), v_(params.zeros_like()) {}

void AdamOptimizer::step(GeneratorParams& params, const GeneratorParams& grad) {
    if (grad.layers.size() != params.layers.size()) throw ShapeError("adam: gradient does not match parameters");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const float b1 = static_cast<float>(cfg_.beta1), b2 = static_cast<float>(cfg_.beta2);
    const float step = static_cast<float>(lr_ / c1);
    const float inv_c2 = static_cast<float>(1.0 / c2);
    const float eps = static_cast<float>(cfg_.epsilon);

    auto update = [&](std::vector<float>& p, const std::vector<float>& g, std::vector<float>& m, std::vector<float>& v) {
        const auto n = static_cast<std::ptrdiff_t>(p.size());
#pragma omp parallel for simd schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (1.0f - b1) * g[i];
            v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
            p[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& pl = params.layers[l];
        const auto& gl = grad.layers[l];
        if (gl.weight.size() != pl.weight.size() || gl.bias.size() != pl.bias.size())
            throw ShapeError("adam: gradient layer " + pl.name + " does not match parameters");
        update(pl.weight, gl.weight, m_.layers[l].weight, v_.layers[l].weight);
        update(pl.bias, gl.bias, m_.layers[l].bias, v_.layers[l].bias);
    }
}

InferenceResult infer_clip(const GeneratorParams& params, const VideoClip& input) {
    if (input.channels() != params.config.in_channels)
        throw ShapeError("infer_clip: clip has " + std::to_string(input.channels()) + " channels, network expects " +
                         std::to_string(params.config.in_channels));
    std::vector<Frame> main, minor;
    main.reserve(static_cast<std::size_t>(input.length()));
    for (const auto& f : input) {
        auto out = forward(params, f);
        main.push_back(out.main.clamped());
        if (out.minor) minor.push_back(out.minor->clamped());
    }
    InferenceResult r{VideoClip(std::move(main)), std::nullopt};
    if (!minor.empty()) r.minor = VideoClip(std::move(minor));
    return r;
}

std::vector<ConfidenceMap> confidence_maps(const GeneratorParams& params, const VideoClip& input,
                                           const VideoClip& processed, double delta) {
    require_same_shape(input, processed, "confidence_maps");
    if (params.config.out_heads != 2) throw InvalidArgument("confidence_maps: network has no minor head");
    std::vector<ConfidenceMap> maps;
    for (int t = 0; t < input.length(); ++t) {
        const auto out = forward(params, input[t]);
        maps.push_back(compute_confidence(out.main, *out.minor, processed[t], delta));
    }
    return maps;
}

DvpTrainer::DvpTrainer(const VideoClip& input, const VideoClip& processed, const GeneratorConfig& net_cfg,
                       const TrainConfig& train_cfg)
    : input_(input), processed_(processed), cfg_(train_cfg), params_(), adam_(GeneratorParams{}, 1.0) {
    cfg_.validate();
    net_cfg.validate();
    require_same_shape(input, processed, "train_dvp");
    if (input.length() < 2) throw InvalidArgument("train_dvp: clips need at least 2 frames");
    if (input.channels() != net_cfg.in_channels)
        throw ShapeError("train_dvp: clip has " + std::to_string(input.channels()) + " channels, network expects " +
                         std::to_string(net_cfg.in_channels));
    if (cfg_.irt_enabled && net_cfg.out_heads != 2)
        throw InvalidArgument("train_dvp: IRT needs a generator with two output heads");
    params_ = init_generator<float>(net_cfg);
    adam_ = AdamOptimizer(params_, cfg_.learning_rate, cfg_.adam);
}

double DvpTrainer::step(int t, bool anchored) {
    const Frame& target = processed_[t];
    auto loss_fn = [&](const GeneratorOutput& out, GeneratorOutput& grad) -> double {
        if (!cfg_.irt_enabled) return data_term_grad(out.main, target, cfg_.data_term, grad.main);
        // During anchoring every pixel belongs to the main mode, so the minor
        // term (and the minor head's gradient) vanishes.
        const ConfidenceMap conf = anchored ? ConfidenceMap(target.height(), target.width(), 1)
                                            : compute_confidence(out.main, *out.minor, target, cfg_.delta);
        auto r = irt_loss_and_grad(out.main, *out.minor, target, conf, cfg_.data_term);
        grad.main = std::move(r.grad_main);
        *grad.minor = std::move(r.grad_minor);
        return r.loss;
    };
    LossGradient lg;
    try {
        lg = loss_gradient(params_, input_[t], loss_fn);
    } catch (const NonFiniteLoss&) {
        throw NonFiniteLoss("non-finite loss on frame " + std::to_string(t + 1), -1, t + 1);
    }
    adam_.step(params_, lg.gradient);
    return lg.loss;
}

TrainResult train_dvp(const VideoClip& input, const VideoClip& processed, const GeneratorConfig& net_cfg,
                      const TrainConfig& cfg, const FlowSet* flows, const TrainHooks& hooks) {
    DvpTrainer trainer(input, processed, net_cfg, cfg);
    const int T = input.length();
    const auto start = std::chrono::steady_clock::now();
    TrainResult result;
    const long anchor = cfg.irt_enabled ? cfg.anchor_iterations.value_or(T) : 0;

    auto train_one = [&](int epoch, long iteration, int t, bool anchored) {
        if (hooks.on_iteration) hooks.on_iteration(epoch, iteration, t, anchored);
        try {
            trainer.step(t, anchored);
        } catch (const NonFiniteLoss&) {
            throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch) + ", frame " + std::to_string(t + 1),
                                epoch, t + 1);
        }
    };

    long iteration = 0;
    for (; iteration < anchor; ++iteration) train_one(0, iteration, 0, true);

    std::vector<int> order(static_cast<std::size_t>(T));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        if (cfg.frame_order == FrameOrder::shuffled) {
            std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(epoch));
            std::shuffle(order.begin(), order.end(), rng);
        }
        for (int t : order) train_one(epoch, iteration++, t, false);

        auto inferred = infer_clip(trainer.params(), input);
        MetricsRecord rec;
        rec.epoch = epoch;
        rec.f_data = f_data(processed, inferred.main);
        if (flows) rec.e_warp = e_warp(inferred.main, *flows);
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.trace.append(rec);
        if (cfg.snapshot_every > 0 && epoch % cfg.snapshot_every == 0)
            result.snapshots.push_back({epoch, std::move(inferred.main), std::move(inferred.minor)});
        if (hooks.on_epoch) hooks.on_epoch(rec, trainer.params());
    }
    result.params = trainer.params();
    return result;
}

int select_stop_epoch(const MetricsTrace& trace, const StopPolicy& policy) {
    if (trace.empty()) throw InvalidArgument("select_stop_epoch: empty trace");
    const auto& recs = trace.records();
    if (policy.kind == StopPolicy::Kind::fixed) return std::min(policy.epoch, recs.back().epoch);

    double min_e = std::numeric_limits<double>::infinity(), max_e = 0.0;
    for (const auto& r : recs) {
        if (!r.e_warp) throw InvalidArgument("select_stop_epoch: knee policy needs E_warp in every record");
        min_e = std::min(min_e, *r.e_warp);
        max_e = std::max(max_e, *r.e_warp);
    }
    const double range = max_e - min_e;
    int best = recs.front().epoch;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& r : recs) {
        const double e = range > 0.0 ? (*r.e_warp - min_e) / range : 0.0;
        const double score = r.f_data - policy.lambda * e;
        if (score > best_score) {
            best_score = score;
            best = r.epoch;
        }
    }
    return best;
}

}  // namespace dvp
