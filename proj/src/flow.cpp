#include "dvp/flow.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

namespace dvp {

namespace fs = std::filesystem;

FlowField::FlowField(int height, int width, float u, float v) : h_(height), w_(width) {
    if (height < 1 || width < 1) throw InvalidArgument("flow field: height and width must be positive");
    uv_.resize(2 * static_cast<std::size_t>(height) * width);
    for (std::size_t i = 0; i < uv_.size(); i += 2) {
        uv_[i] = u;
        uv_[i + 1] = v;
    }
}

OcclusionMask::OcclusionMask(int height, int width, std::uint8_t fill)
    : h_(height), w_(width), m_(static_cast<std::size_t>(height) * width, fill) {
    if (height < 1 || width < 1) throw InvalidArgument("occlusion mask: height and width must be positive");
}

std::size_t OcclusionMask::count() const noexcept {
    return std::accumulate(m_.begin(), m_.end(), std::size_t{0});
}

namespace {

struct Bilinear {
    int x0, y0, x1, y1;
    double fx, fy;
};

// Caller guarantees sample_in_bounds(px, py).
inline Bilinear bilinear_taps(double px, double py, int h, int w) noexcept {
    Bilinear b;
    b.x0 = std::min(static_cast<int>(std::floor(px)), w - 1);
    b.y0 = std::min(static_cast<int>(std::floor(py)), h - 1);
    b.fx = px - b.x0;
    b.fy = py - b.y0;
    b.x1 = std::min(b.x0 + 1, w - 1);
    b.y1 = std::min(b.y0 + 1, h - 1);
    return b;
}

}  // namespace

Frame backward_warp(const Frame& source, const FlowField& flow) {
    if (source.height() != flow.height() || source.width() != flow.width())
        throw ShapeError("backward_warp: flow and frame sizes differ");
    const int H = source.height(), W = source.width(), C = source.channels();
    Frame out(H, W, C);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const double px = x + static_cast<double>(flow.u(y, x));
            const double py = y + static_cast<double>(flow.v(y, x));
            if (!sample_in_bounds(px, py, H, W)) continue;
            const auto b = bilinear_taps(px, py, H, W);
            for (int c = 0; c < C; ++c) {
                const double top = (1.0 - b.fx) * source.at(b.y0, b.x0, c) + b.fx * source.at(b.y0, b.x1, c);
                const double bot = (1.0 - b.fx) * source.at(b.y1, b.x0, c) + b.fx * source.at(b.y1, b.x1, c);
                out.at(y, x, c) = static_cast<float>((1.0 - b.fy) * top + b.fy * bot);
            }
        }
    }
    return out;
}

void sample_flow(const FlowField& flow, double px, double py, double& u, double& v) noexcept {
    const auto b = bilinear_taps(px, py, flow.height(), flow.width());
    auto lerp2 = [&](auto get) {
        const double top = (1.0 - b.fx) * get(b.y0, b.x0) + b.fx * get(b.y0, b.x1);
        const double bot = (1.0 - b.fx) * get(b.y1, b.x0) + b.fx * get(b.y1, b.x1);
        return (1.0 - b.fy) * top + b.fy * bot;
    };
    u = lerp2([&](int y, int x) { return static_cast<double>(flow.u(y, x)); });
    v = lerp2([&](int y, int x) { return static_cast<double>(flow.v(y, x)); });
}

OcclusionMask occlusion_from_flows(const FlowField& fwd, const FlowField& bwd, OcclusionThresholds th) {
    if (fwd.height() != bwd.height() || fwd.width() != bwd.width())
        throw ShapeError("occlusion_from_flows: flow sizes differ");
    if (th.a < 0 || th.b < 0) throw InvalidArgument("occlusion_from_flows: thresholds must be non-negative");
    const int H = fwd.height(), W = fwd.width();
    OcclusionMask mask(H, W, 0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const double fu = fwd.u(y, x), fv = fwd.v(y, x);
            const double px = x + fu, py = y + fv;
            if (!sample_in_bounds(px, py, H, W)) continue;
            double bu = 0, bv = 0;
            sample_flow(bwd, px, py, bu, bv);
            const double su = fu + bu, sv = fv + bv;
            const double lhs = su * su + sv * sv;
            const double rhs = th.a * (fu * fu + fv * fv + bu * bu + bv * bv) + th.b;
            mask.at(y, x) = lhs > rhs ? 0 : 1;
        }
    }
    return mask;
}

FlowSet synth_translation_flows(int frames, double dx, double dy, int height, int width, OcclusionThresholds th) {
    if (frames < 2) throw InvalidArgument("synth_translation_flows: need at least 2 frames");
    FlowSet set;
    auto make = [&](double k) {
        FlowPair p{FlowField(height, width, static_cast<float>(k * dx), static_cast<float>(k * dy)),
                   FlowField(height, width, static_cast<float>(-k * dx), static_cast<float>(-k * dy)), {}};
        p.mask = occlusion_from_flows(p.forward, p.backward, th);
        return p;
    };
    for (int t = 1; t < frames; ++t) {
        set.short_term.push_back(make(1.0));
        set.long_term.push_back(make(static_cast<double>(t)));
    }
    return set;
}

namespace {

constexpr float kFlowMagic = 202021.25f;

static_assert(std::endian::native == std::endian::little, "flow file I/O assumes a little-endian host");

template <typename V>
void put(std::ostream& os, V v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename V>
V get(std::istream& is, const fs::path& path) {
    V v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw FormatError(path.string() + ": truncated flow file");
    return v;
}

}  // namespace

void write_flow_file(const FlowField& flow, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    put(os, kFlowMagic);
    put(os, static_cast<std::int32_t>(flow.width()));
    put(os, static_cast<std::int32_t>(flow.height()));
    const auto d = flow.data();
    os.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(float)));
    if (!os) throw IoError("cannot write " + path.string());
}

FlowField read_flow_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    const auto magic = get<float>(is, path);
    if (std::memcmp(&magic, &kFlowMagic, sizeof magic) != 0) throw FormatError(path.string() + ": bad flow magic");
    const auto w = get<std::int32_t>(is, path);
    const auto h = get<std::int32_t>(is, path);
    if (w < 1 || h < 1 || static_cast<std::int64_t>(w) * h > (std::int64_t{1} << 28))
        throw FormatError(path.string() + ": implausible flow dimensions");
    FlowField flow(h, w);
    auto d = flow.data();
    is.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(float)));
    if (!is) throw FormatError(path.string() + ": truncated flow file");
    return flow;
}

namespace {

fs::path flow_name(const fs::path& dir, const char* kind, int t, const char* dir_tag) {
    char name[48];
    std::snprintf(name, sizeof name, "%s_%06d_%s.flo", kind, t, dir_tag);
    return dir / name;
}

}  // namespace

void write_flow_set(const FlowSet& flows, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < flows.short_term.size(); ++i) {
        const int t = static_cast<int>(i) + 2;
        write_flow_file(flows.short_term[i].forward, flow_name(dir, "short", t, "fwd"));
        write_flow_file(flows.short_term[i].backward, flow_name(dir, "short", t, "bwd"));
        write_flow_file(flows.long_term[i].forward, flow_name(dir, "long", t, "fwd"));
        write_flow_file(flows.long_term[i].backward, flow_name(dir, "long", t, "bwd"));
    }
}

FlowSet read_flow_set(const fs::path& dir, int frames, OcclusionThresholds th) {
    if (!fs::is_directory(dir)) throw IoError("flow directory not found: " + dir.string());
    FlowSet set;
    for (int t = 2; t <= frames; ++t) {
        auto load = [&](const char* kind) {
            FlowPair p{read_flow_file(flow_name(dir, kind, t, "fwd")), read_flow_file(flow_name(dir, kind, t, "bwd")), {}};
            p.mask = occlusion_from_flows(p.forward, p.backward, th);
            return p;
        };
        set.short_term.push_back(load("short"));
        set.long_term.push_back(load("long"));
    }
    return set;
}

}  // namespace dvp
