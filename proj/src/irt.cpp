#include "dvp/irt.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace dvp {

ConfidenceMap::ConfidenceMap(int height, int width, std::uint8_t fill)
    : h_(height), w_(width), v_(static_cast<std::size_t>(height) * width, fill) {
    if (height < 1 || width < 1) throw InvalidArgument("confidence map: height and width must be positive");
}

std::size_t ConfidenceMap::count() const noexcept { return std::accumulate(v_.begin(), v_.end(), std::size_t{0}); }

Frame ConfidenceMap::to_frame() const {
    Frame f(h_, w_, 1);
    for (std::size_t i = 0; i < v_.size(); ++i) f.data()[i] = v_[i] ? 1.0f : 0.0f;
    return f;
}

double pixel_distance(const Frame& a, const Frame& b, int y, int x) noexcept {
    double d = 0.0;
    for (int c = 0; c < a.channels(); ++c) d += std::fabs(static_cast<double>(a.at(y, x, c)) - b.at(y, x, c));
    return d / a.channels();
}

ConfidenceMap compute_confidence(const Frame& main, const Frame& minor, const Frame& processed, double delta) {
    require_same_shape(main, processed, "compute_confidence");
    require_same_shape(minor, processed, "compute_confidence");
    if (!(delta > 0.0)) throw InvalidArgument("compute_confidence: delta must be positive");
    ConfidenceMap conf(main.height(), main.width(), 0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < main.height(); ++y)
        for (int x = 0; x < main.width(); ++x) {
            const double d_main = pixel_distance(main, processed, y, x);
            const double d_minor = pixel_distance(minor, processed, y, x);
            conf.at(y, x) = d_main < std::max(d_minor, delta) ? 1 : 0;
        }
    return conf;
}

namespace {

Frame masked(const Frame& f, const ConfidenceMap& conf, bool keep_confident) {
    Frame out = f;
    const int C = f.channels();
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) {
            const bool on = (conf.at(y, x) != 0) == keep_confident;
            if (!on)
                for (int c = 0; c < C; ++c) out.at(y, x, c) = 0.0f;
        }
    return out;
}

void check(const Frame& main, const Frame& minor, const Frame& processed, const ConfidenceMap& conf) {
    require_same_shape(main, processed, "irt_loss");
    require_same_shape(minor, processed, "irt_loss");
    if (conf.height() != processed.height() || conf.width() != processed.width())
        throw ShapeError("irt_loss: confidence map size differs from frames");
}

}  // namespace

IrtLossValue irt_loss_and_grad(const Frame& main, const Frame& minor, const Frame& processed,
                               const ConfidenceMap& conf, const DataTerm& term) {
    check(main, minor, processed, conf);
    IrtLossValue r;
    // The map is a constant, so d/d(main) of term(C*main, C*P) is C * term'(C*main).
    const double main_loss =
        data_term_grad(masked(main, conf, true), masked(processed, conf, true), term, r.grad_main);
    const double minor_loss =
        data_term_grad(masked(minor, conf, false), masked(processed, conf, false), term, r.grad_minor);
    r.grad_main = masked(r.grad_main, conf, true);
    r.grad_minor = masked(r.grad_minor, conf, false);
    r.loss = main_loss + minor_loss;
    return r;
}

double irt_loss(const Frame& main, const Frame& minor, const Frame& processed, const ConfidenceMap& conf,
                const DataTerm& term) {
    check(main, minor, processed, conf);
    return data_term(masked(main, conf, true), masked(processed, conf, true), term) +
           data_term(masked(minor, conf, false), masked(processed, conf, false), term);
}

ScheduledFrame anchored_schedule(long iteration, long anchor_iterations, const std::vector<int>& normal_order) {
    if (anchor_iterations < 0) throw InvalidArgument("anchored_schedule: anchor_iterations must be non-negative");
    if (iteration < anchor_iterations) return {0, true};
    if (normal_order.empty()) throw InvalidArgument("anchored_schedule: empty frame order");
    const long k = (iteration - anchor_iterations) % static_cast<long>(normal_order.size());
    return {normal_order[static_cast<std::size_t>(k)], false};
}

void save_confidence_maps(const std::vector<ConfidenceMap>& maps, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    char name[32];
    for (std::size_t i = 0; i < maps.size(); ++i) {
        std::snprintf(name, sizeof name, "conf_%06zu.png", i + 1);
        save_frame(maps[i].to_frame(), dir / name);
    }
}

}  // namespace dvp
