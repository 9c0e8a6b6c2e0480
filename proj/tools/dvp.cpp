// dvp: command-line front end.
//
//   dvp run      train on a (input, processed) clip pair and write the result
//   dvp synth    render a synthetic clip, its flickering version and flows
//   dvp metrics  E_warp / F_data of a clip
//   dvp toy      small-scale training dynamics experiment
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dvp/flow.hpp"
#include "dvp/generator.hpp"
#include "dvp/irt.hpp"
#include "dvp/metrics.hpp"
#include "dvp/synth.hpp"
#include "dvp/toy.hpp"
#include "dvp/trainer.hpp"
#include "dvp/video.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(const char* f, long v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// "a,b" -> two doubles
std::pair<double, double> parse_pair(const std::string& s, char sep, const char* flag) {
    std::istringstream is(s);
    double a = 0, b = 0;
    char c = 0;
    if (!(is >> a >> c >> b) || c != sep || !is.eof())
        throw UsageError(std::string(flag) + ": expected two numbers separated by '" + sep + "', got '" + s + "'");
    return {a, b};
}

std::vector<int> parse_csv_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw UsageError("--pattern: bad mode index '" + tok + "'");
        }
    }
    return out;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw dvp::IoError("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

json to_json(const dvp::GeneratorConfig& g) {
    return {{"in_channels", g.in_channels}, {"out_heads", g.out_heads}, {"base_width", g.base_width},
            {"depth", g.depth},             {"seed", g.seed}};
}

json to_json(const dvp::TrainConfig& t) {
    json j{{"learning_rate", t.learning_rate},
           {"epochs", t.epochs},
           {"batch_size", t.batch_size},
           {"irt_enabled", t.irt_enabled},
           {"delta", t.delta},
           {"data_term", "l1"},
           {"seed", t.seed},
           {"frame_order", t.frame_order == dvp::FrameOrder::sequential ? "sequential" : "shuffled"},
           {"snapshot_every", t.snapshot_every},
           {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"epsilon", t.adam.epsilon}}}};
    j["anchor_iterations"] = t.anchor_iterations ? json(*t.anchor_iterations) : json(nullptr);
    return j;
}

json to_json(const dvp::ModeTransform& m) { return {{"gain", m.gain}, {"bias", m.bias}}; }

dvp::ModeTransform mode_from_json(const json& j) {
    dvp::ModeTransform m;
    if (j.contains("gain")) {
        const auto& g = j.at("gain");
        if (g.is_number()) {
            // scalar gain: uniform scaling
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) m.gain[r][c] = r == c ? g.get<double>() : 0.0;
        } else {
            m.gain = g.get<std::array<std::array<double, 3>, 3>>();
        }
    }
    if (j.contains("bias")) m.bias = j.at("bias").get<std::array<double, 3>>();
    return m;
}

std::vector<dvp::ModeTransform> load_modes(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw dvp::IoError("cannot read modes file " + path.string());
    json j;
    try {
        j = json::parse(is);
        const json& arr = j.is_object() ? j.at("modes") : j;
        std::vector<dvp::ModeTransform> modes;
        for (const auto& m : arr) modes.push_back(mode_from_json(m));
        return modes;
    } catch (const json::exception& e) {
        throw dvp::FormatError("modes file " + path.string() + ": " + e.what());
    }
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
    std::string input, processed, output, flow_dir;
    int epochs = 25;
    double lr = 1e-4;
    bool irt = false;
    double delta = 0.02;
    std::optional<long> anchor;
    std::uint64_t seed = 0;
    int snapshot_every = 5;
    bool save_confidence = false;
    bool timing = false;
    bool shuffle = false;
};

int cmd_run(const RunArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto input = dvp::load_clip(a.input);
    const auto processed = dvp::load_clip(a.processed);
    dvp::require_same_shape(input, processed, "run");
    if (a.save_confidence && !a.irt) throw UsageError("--save-confidence needs --irt");

    std::optional<dvp::FlowSet> flows;
    if (!a.flow_dir.empty()) flows = dvp::read_flow_set(a.flow_dir, input.length());

    dvp::GeneratorConfig net;
    net.in_channels = input.channels();
    net.out_heads = a.irt ? 2 : 1;
    net.seed = a.seed;

    dvp::TrainConfig tc;
    tc.epochs = a.epochs;
    tc.learning_rate = a.lr;
    tc.irt_enabled = a.irt;
    tc.delta = a.delta;
    tc.anchor_iterations = a.anchor;
    tc.seed = a.seed;
    tc.snapshot_every = a.snapshot_every;
    tc.frame_order = a.shuffle ? dvp::FrameOrder::shuffled : dvp::FrameOrder::sequential;
    tc.validate();

    const fs::path out(a.output);
    fs::create_directories(out);

    dvp::TrainHooks hooks;
    hooks.on_epoch = [&](const dvp::MetricsRecord& r, const dvp::GeneratorParams& p) {
        std::fprintf(stderr, "epoch %d  F_data %.3f", r.epoch, r.f_data);
        if (r.e_warp) std::fprintf(stderr, "  E_warp %.5f", *r.e_warp);
        std::fprintf(stderr, "\n");
        const bool snap = a.snapshot_every > 0 && r.epoch % a.snapshot_every == 0;
        if (snap || r.epoch == a.epochs) dvp::save_checkpoint(p, out / fmt("ckpt_epoch_%04ld", r.epoch));
    };
    const auto train_start = std::chrono::steady_clock::now();
    auto result = dvp::train_dvp(input, processed, net, tc, flows ? &*flows : nullptr, hooks);
    const double train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - train_start).count();

    const auto final_out = dvp::infer_clip(result.params, input);
    dvp::save_clip(final_out.main, out);
    if (final_out.minor) dvp::save_clip(*final_out.minor, out / "minor");
    for (const auto& s : result.snapshots) {
        const auto dir = out / "snapshots" / fmt("epoch_%04ld", s.epoch);
        dvp::save_clip(s.main, dir);
        if (s.minor) dvp::save_clip(*s.minor, dir / "minor");
    }
    if (a.save_confidence)
        dvp::save_confidence_maps(dvp::confidence_maps(result.params, input, processed, a.delta), out / "confidence");
    result.trace.write_csv(out / "trace.csv", a.timing);

    json m;
    m["tool"] = "dvp";
    m["version"] = kVersion;
    m["command"] = "run";
    m["input"] = a.input;
    m["processed"] = a.processed;
    m["output"] = a.output;
    m["flow_dir"] = a.flow_dir.empty() ? json(nullptr) : json(a.flow_dir);
    m["seed"] = a.seed;
    m["frames"] = input.length();
    m["height"] = input.height();
    m["width"] = input.width();
    m["channels"] = input.channels();
    m["generator"] = to_json(net);
    m["train"] = to_json(tc);
    m["save_confidence"] = a.save_confidence;
    m["timings"] = {{"train_seconds", train_seconds},
                    {"total_seconds",
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    write_json(m, out / "run_manifest.json");
    return 0;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
    std::string kind = "unimodal";
    int frames = 20;
    std::string size = "64x64";
    std::string motion = "1,0";
    double sigma = 0.1;
    std::string modes_file;
    std::string pattern;
    std::uint64_t seed = 0;
    int channels = 3;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    const auto [h, w] = parse_pair(a.size, 'x', "--size");
    const auto [dx, dy] = parse_pair(a.motion, ',', "--motion");
    if (h != static_cast<int>(h) || w != static_cast<int>(w)) throw UsageError("--size: integers expected");

    dvp::SynthSpec spec;
    spec.seed = a.seed;
    if (a.kind == "unimodal") {
        spec.kind = dvp::SynthKind::unimodal;
        spec.sigma = a.sigma;
        if (!a.modes_file.empty() || !a.pattern.empty()) throw UsageError("--modes/--pattern need --kind multimodal");
    } else if (a.kind == "multimodal") {
        spec.kind = dvp::SynthKind::multimodal;
        spec.sigma = 0.0;
        spec.modes = a.modes_file.empty() ? dvp::default_two_modes() : load_modes(a.modes_file);
        spec.switch_pattern = a.pattern.empty() ? dvp::alternating_pattern(a.frames) : parse_csv_ints(a.pattern);
    } else {
        throw UsageError("--kind must be unimodal or multimodal");
    }
    spec.validate(a.frames);

    const auto moving =
        dvp::make_moving_clip(a.frames, static_cast<int>(h), static_cast<int>(w), dx, dy, a.seed, a.channels);
    std::vector<int> labels(static_cast<std::size_t>(a.frames), 0);
    std::optional<dvp::VideoClip> processed;
    if (spec.kind == dvp::SynthKind::unimodal) {
        processed = dvp::apply_unimodal_flicker(moving.clip, spec.sigma, a.seed + 1);
    } else {
        auto r = dvp::apply_multimodal_flicker(moving.clip, spec);
        processed = std::move(r.processed);
        labels = std::move(r.labels);
    }

    const fs::path out(a.out);
    dvp::save_clip(moving.clip, out / "clean");
    dvp::save_clip(*processed, out / "processed");
    dvp::write_flow_set(moving.flows, out / "flows");
    {
        std::ofstream os(out / "labels.csv");
        if (!os) throw dvp::IoError("cannot write labels.csv");
        os << "frame,mode\n";
        for (std::size_t t = 0; t < labels.size(); ++t) os << t + 1 << ',' << labels[t] << '\n';
    }

    json m;
    m["tool"] = "dvp";
    m["version"] = kVersion;
    m["command"] = "synth";
    m["kind"] = a.kind;
    m["frames"] = a.frames;
    m["height"] = static_cast<int>(h);
    m["width"] = static_cast<int>(w);
    m["channels"] = a.channels;
    m["motion"] = {dx, dy};
    m["sigma"] = spec.sigma;
    m["seed"] = a.seed;
    json modes = json::array();
    for (const auto& md : spec.modes) modes.push_back(to_json(md));
    m["modes"] = modes;
    m["switch_pattern"] = spec.switch_pattern;
    if (spec.modes.size() >= 2) m["mode_gap"] = dvp::mode_gap(moving.clip, spec.modes[0], spec.modes[1]);
    write_json(m, out / "synth_manifest.json");
    return 0;
}

// ---- metrics ---------------------------------------------------------------

struct MetricsArgs {
    std::string clip, flow_dir, synthetic_flow, ref;
    std::string out = "metrics.csv";
};

int cmd_metrics(const MetricsArgs& a) {
    if (a.flow_dir.empty() == a.synthetic_flow.empty())
        throw UsageError("give exactly one of --flow-dir and --synthetic-flow");
    const auto clip = dvp::load_clip(a.clip);
    dvp::FlowSet flows;
    if (!a.flow_dir.empty()) {
        flows = dvp::read_flow_set(a.flow_dir, clip.length());
    } else {
        const auto [dx, dy] = parse_pair(a.synthetic_flow, ',', "--synthetic-flow");
        flows = dvp::synth_translation_flows(clip.length(), dx, dy, clip.height(), clip.width());
    }
    std::optional<dvp::VideoClip> ref;
    if (!a.ref.empty()) ref = dvp::load_clip(a.ref);

    const auto report = dvp::evaluate_clip(clip, flows, ref ? &*ref : nullptr);
    dvp::write_metrics_csv(report, a.out);
    std::printf("E_warp=%.17g", report.e_warp);
    if (report.f_data) std::printf(" F_data=%.17g", *report.f_data);
    std::printf("\n");
    return 0;
}

// ---- toy -------------------------------------------------------------------

struct ToyArgs {
    std::string mode = "unimodal";
    long iterations = dvp::ToyConfig{}.iterations;
    long record_every = dvp::ToyConfig{}.record_every;
    bool irt = false;
    std::uint64_t seed = 0;
    std::string out = "toy_trace.csv";
    std::string matrices;
};

int cmd_toy(const ToyArgs& a) {
    dvp::ToyConfig cfg;
    if (a.mode == "unimodal")
        cfg.mode = dvp::SynthKind::unimodal;
    else if (a.mode == "multimodal")
        cfg.mode = dvp::SynthKind::multimodal;
    else
        throw UsageError("--mode must be unimodal or multimodal");
    cfg.iterations = a.iterations;
    cfg.record_every = a.record_every;
    cfg.irt = a.irt;
    cfg.seed = a.seed;
    try {
        cfg.validate();
    } catch (const dvp::InvalidArgument& e) {
        throw UsageError(e.what());
    }
    const auto trace = dvp::toy_experiment(cfg);
    trace.write_csv(a.out);
    if (!a.matrices.empty()) {
        json j;
        j["processed_pairwise"] = trace.processed_pairwise;
        j["records"] = json::array();
        for (const auto& r : trace.records)
            j["records"].push_back({{"iteration", r.iteration},
                                    {"pairwise", r.pairwise},
                                    {"to_processed", r.to_processed},
                                    {"to_truth", r.to_truth}});
        write_json(j, a.matrices);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep video prior: blind temporal consistency by training on the test video"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunArgs run;
    auto* r = app.add_subcommand("run", "Train on a clip pair and write the consistent result");
    r->add_option("--input", run.input, "Directory of input frames (PNG)")->required();
    r->add_option("--processed", run.processed, "Directory of processed frames (PNG)")->required();
    r->add_option("--output", run.output, "Output directory")->required();
    r->add_option("--epochs", run.epochs, "Training epochs")->capture_default_str();
    r->add_option("--lr", run.lr, "Adam learning rate")->capture_default_str();
    r->add_flag("--irt", run.irt, "Iteratively reweighted training (two output heads)");
    r->add_option("--delta", run.delta, "IRT confidence threshold")->capture_default_str();
    r->add_option("--anchor", run.anchor, "IRT warm-up iterations on frame 1 (default: clip length)");
    r->add_option("--seed", run.seed, "Seed for weights and frame order")->capture_default_str();
    r->add_option("--snapshot-every", run.snapshot_every, "Checkpoint/snapshot period in epochs (0 = final only)")
        ->capture_default_str();
    r->add_option("--flow-dir", run.flow_dir, "Flow directory; enables E_warp in trace.csv");
    r->add_flag("--save-confidence", run.save_confidence, "Write final IRT confidence maps");
    r->add_flag("--timing", run.timing, "Fill the wall_seconds column of trace.csv");
    r->add_flag("--shuffle", run.shuffle, "Shuffle frame order each epoch");

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Render a synthetic clip with flicker and exact flows");
    s->add_option("--kind", synth.kind, "unimodal | multimodal")->capture_default_str();
    s->add_option("--frames", synth.frames, "Clip length")->capture_default_str();
    s->add_option("--size", synth.size, "HxW")->capture_default_str();
    s->add_option("--motion", synth.motion, "Pan per frame, dx,dy")->capture_default_str();
    s->add_option("--sigma", synth.sigma, "Unimodal flicker strength")->capture_default_str();
    s->add_option("--modes", synth.modes_file, "JSON list of {gain, bias} mode transforms");
    s->add_option("--pattern", synth.pattern, "Per-frame mode indices, comma separated");
    s->add_option("--seed", synth.seed)->capture_default_str();
    s->add_option("--channels", synth.channels, "1 or 3")->capture_default_str()->check(CLI::IsMember({1, 3}));
    s->add_option("--out", synth.out, "Output directory")->required();

    MetricsArgs metrics;
    auto* m = app.add_subcommand("metrics", "Warping error and data fidelity of a clip");
    m->add_option("--clip", metrics.clip, "Directory of frames")->required();
    m->add_option("--flow-dir", metrics.flow_dir, "Flow directory");
    m->add_option("--synthetic-flow", metrics.synthetic_flow, "Uniform translation dx,dy instead of flow files");
    m->add_option("--ref", metrics.ref, "Processed frames; adds F_data");
    m->add_option("--out", metrics.out, "metrics.csv path")->capture_default_str();

    ToyArgs toy;
    auto* t = app.add_subcommand("toy", "Toy training-dynamics experiment");
    t->add_option("--mode", toy.mode, "unimodal | multimodal")->capture_default_str();
    t->add_option("--iterations", toy.iterations)->capture_default_str();
    t->add_option("--record-every", toy.record_every)->capture_default_str();
    t->add_flag("--irt", toy.irt, "IRT with anchoring (multimodal)");
    t->add_option("--seed", toy.seed)->capture_default_str();
    t->add_option("--out", toy.out, "toy_trace.csv path")->capture_default_str();
    t->add_option("--matrices", toy.matrices, "Also dump the pairwise distance matrices as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (r->parsed()) return cmd_run(run);
        if (s->parsed()) return cmd_synth(synth);
        if (m->parsed()) return cmd_metrics(metrics);
        if (t->parsed()) return cmd_toy(toy);
    } catch (const UsageError& e) {
        std::cerr << "dvp: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "dvp: error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
