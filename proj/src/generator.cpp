#include "dvp/generator.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace dvp {

void GeneratorConfig::validate() const {
    if (in_channels != 1 && in_channels != 3) throw InvalidArgument("generator: in_channels must be 1 or 3");
    if (out_heads != 1 && out_heads != 2) throw InvalidArgument("generator: out_heads must be 1 or 2");
    if (base_width < 1) throw InvalidArgument("generator: base_width must be positive");
    if (depth < 0 || depth > 8) throw InvalidArgument("generator: depth must be in [0, 8]");
    if (base_width > (1 << 14) >> depth) throw InvalidArgument("generator: base_width too large for depth");
}

std::vector<LayerSpec> generator_layers(const GeneratorConfig& cfg) {
    cfg.validate();
    std::vector<LayerSpec> layers;
    auto add = [&](std::string name, int in, int out, int k) { layers.push_back({std::move(name), {in, out, k}}); };

    int channels = cfg.in_channels;
    for (int l = 0; l < cfg.depth; ++l) {
        const int w = cfg.level_width(l);
        add("enc" + std::to_string(l) + ".conv1", channels, w, 3);
        add("enc" + std::to_string(l) + ".conv2", w, w, 3);
        channels = w;
    }
    const int mid = cfg.bottleneck_width();
    add("mid.conv1", channels, mid, 3);
    add("mid.conv2", mid, mid, 3);
    channels = mid;
    for (int l = cfg.depth - 1; l >= 0; --l) {
        const int w = cfg.level_width(l);
        add("dec" + std::to_string(l) + ".conv1", channels + w, w, 3);
        add("dec" + std::to_string(l) + ".conv2", w, w, 3);
        channels = w;
    }
    add("head", channels, cfg.out_channels(), 1);
    return layers;
}

template <typename T>
std::size_t BasicGeneratorParams<T>::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

template <typename T>
bool BasicGeneratorParams<T>::all_finite() const noexcept {
    auto finite = [](T v) { return std::isfinite(v); };
    return std::all_of(layers.begin(), layers.end(), [&](const ConvLayer<T>& l) {
        return std::all_of(l.weight.begin(), l.weight.end(), finite) &&
               std::all_of(l.bias.begin(), l.bias.end(), finite);
    });
}

template <typename T>
BasicGeneratorParams<T> BasicGeneratorParams<T>::zeros_like() const {
    BasicGeneratorParams out;
    out.config = config;
    out.layers.reserve(layers.size());
    for (const auto& l : layers)
        out.layers.push_back({l.name, l.shape, std::vector<T>(l.weight.size(), T(0)), std::vector<T>(l.bias.size(), T(0))});
    return out;
}

template <typename T>
BasicGeneratorParams<T> zero_generator(const GeneratorConfig& cfg) {
    BasicGeneratorParams<T> p;
    p.config = cfg;
    for (auto& spec : generator_layers(cfg))
        p.layers.push_back({spec.name, spec.shape, std::vector<T>(spec.shape.weight_count(), T(0)),
                            std::vector<T>(static_cast<std::size_t>(spec.shape.out_channels), T(0))});
    return p;
}

template <typename T>
BasicGeneratorParams<T> init_generator(const GeneratorConfig& cfg) {
    auto p = zero_generator<T>(cfg);
    std::mt19937_64 rng(cfg.seed);
    const double leaky_gain = 2.0 / (1.0 + kLeakySlope * kLeakySlope);
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        auto& layer = p.layers[i];
        const bool is_head = i + 1 == p.layers.size();
        const double fan_in = static_cast<double>(layer.shape.in_channels) * layer.shape.kernel * layer.shape.kernel;
        // A small head keeps both output heads near zero at the start instead
        // of at random offsets of either sign.
        const double scale = is_head ? kHeadScale / std::sqrt(fan_in) : std::sqrt(leaky_gain / fan_in);
        std::normal_distribution<double> dist(0.0, scale);
        for (auto& w : layer.weight) w = static_cast<T>(dist(rng));
    }
    return p;
}

namespace {

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> out(a.channels() + b.channels(), a.height(), a.width());
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

template <typename T>
Tensor<T> channel_slice(const Tensor<T>& t, int first, int count) {
    Tensor<T> out(count, t.height(), t.width());
    std::copy(t.channel(first), t.channel(first) + count * t.plane(), out.data());
    return out;
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
    T* d = dst.data();
    const T* s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

template <typename T>
class Runner {
public:
    Runner(const BasicGeneratorParams<T>& p, ForwardCache<T>* cache) : p_(p), cache_(cache) {}

    Tensor<T> conv(const Tensor<T>& in, bool activate) {
        const auto& layer = p_.layers.at(next_++);
        Tensor<T> out;
        kernels::conv2d_forward<T>(in, layer.weight, layer.bias, layer.shape, out);
        if (activate) kernels::leaky_relu_forward(out);
        if (cache_) {
            cache_->layer_inputs.push_back(in);
            cache_->layer_outputs.push_back(out);
        }
        return out;
    }

private:
    const BasicGeneratorParams<T>& p_;
    ForwardCache<T>* cache_;
    std::size_t next_ = 0;
};

}  // namespace

template <typename T>
Tensor<T> forward_tensor(const BasicGeneratorParams<T>& params, const Tensor<T>& input, ForwardCache<T>* cache) {
    const auto& cfg = params.config;
    if (input.channels() != cfg.in_channels)
        throw ShapeError("generator: input has " + std::to_string(input.channels()) + " channels, expected " +
                         std::to_string(cfg.in_channels));
    const int m = cfg.size_multiple();
    if (input.height() % m != 0 || input.width() % m != 0)
        throw ShapeError("generator: input size must be a multiple of " + std::to_string(m));
    if (cache) *cache = {};

    Runner<T> run(params, cache);
    std::vector<Tensor<T>> skips;
    Tensor<T> x = input;
    for (int l = 0; l < cfg.depth; ++l) {
        x = run.conv(run.conv(x, true), true);
        skips.push_back(x);
        Tensor<T> pooled;
        kernels::avg_pool2_forward(x, pooled);
        x = std::move(pooled);
    }
    x = run.conv(run.conv(x, true), true);
    for (int l = cfg.depth - 1; l >= 0; --l) {
        Tensor<T> up;
        kernels::upsample2_forward(x, up);
        x = run.conv(run.conv(concat_channels(up, skips[static_cast<std::size_t>(l)]), true), true);
    }
    return run.conv(x, false);
}

template <typename T>
BasicGeneratorParams<T> backward_tensor(const BasicGeneratorParams<T>& params, const ForwardCache<T>& cache,
                                        const Tensor<T>& grad_output) {
    const auto& cfg = params.config;
    if (cache.layer_inputs.size() != params.layers.size())
        throw InvalidArgument("generator backward: cache does not belong to these parameters");
    auto grads = params.zeros_like();
    std::size_t idx = params.layers.size();

    // Walks layers in reverse; `g` holds d(loss)/d(layer output), post-activation.
    auto conv_back = [&](Tensor<T>& g, bool activated, bool need_input_grad) {
        --idx;
        const auto& layer = params.layers[idx];
        if (activated) kernels::leaky_relu_backward(cache.layer_outputs[idx], g);
        Tensor<T> gin;
        kernels::conv2d_backward<T>(cache.layer_inputs[idx], layer.weight, layer.shape, g,
                                    need_input_grad ? &gin : nullptr, grads.layers[idx].weight,
                                    grads.layers[idx].bias);
        g = std::move(gin);
    };

    Tensor<T> g = grad_output;
    conv_back(g, false, true);
    std::vector<Tensor<T>> skip_grads(static_cast<std::size_t>(cfg.depth));
    for (int l = 0; l < cfg.depth; ++l) {
        conv_back(g, true, true);
        conv_back(g, true, true);
        const int up_channels = g.channels() - cfg.level_width(l);
        skip_grads[static_cast<std::size_t>(l)] = channel_slice(g, up_channels, cfg.level_width(l));
        Tensor<T> gup = channel_slice(g, 0, up_channels);
        kernels::upsample2_backward(gup, g);
    }
    conv_back(g, true, true);
    conv_back(g, true, cfg.depth > 0);
    for (int l = cfg.depth - 1; l >= 0; --l) {
        Tensor<T> gs;
        kernels::avg_pool2_backward(g, gs);
        add_into(gs, skip_grads[static_cast<std::size_t>(l)]);
        g = std::move(gs);
        conv_back(g, true, true);
        conv_back(g, true, l > 0);
    }
    return grads;
}

template <typename T>
Tensor<T> frame_to_tensor(const Frame& frame) {
    const int C = frame.channels(), H = frame.height(), W = frame.width();
    Tensor<T> t(C, H, W);
    const auto src = frame.data();
    for (int c = 0; c < C; ++c) {
        T* dst = t.channel(c);
        for (std::size_t i = 0; i < frame.pixel_count(); ++i) dst[i] = static_cast<T>(src[i * C + c]);
    }
    return t;
}

Frame tensor_to_frame(const Tensor<float>& t, int first_channel, int channels) {
    Frame f(t.height(), t.width(), channels);
    auto dst = f.data();
    for (int c = 0; c < channels; ++c) {
        const float* src = t.channel(first_channel + c);
        for (std::size_t i = 0; i < f.pixel_count(); ++i) dst[i * channels + c] = src[i];
    }
    return f;
}

Padding padding_for(int height, int width, int multiple) {
    const int eh = (multiple - height % multiple) % multiple;
    const int ew = (multiple - width % multiple) % multiple;
    return {eh / 2, eh - eh / 2, ew / 2, ew - ew / 2};
}

namespace {

// Mirror index into [0, n) without repeating the edge sample.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

}  // namespace

template <typename T>
Tensor<T> reflect_pad(const Tensor<T>& t, const Padding& pad) {
    if (pad.top == 0 && pad.bottom == 0 && pad.left == 0 && pad.right == 0) return t;
    const int H = t.height() + pad.top + pad.bottom, W = t.width() + pad.left + pad.right;
    Tensor<T> out(t.channels(), H, W);
    for (int c = 0; c < t.channels(); ++c)
        for (int y = 0; y < H; ++y) {
            const int sy = reflect_index(y - pad.top, t.height());
            for (int x = 0; x < W; ++x) out.at(c, y, x) = t.at(c, sy, reflect_index(x - pad.left, t.width()));
        }
    return out;
}

template <typename T>
Tensor<T> crop(const Tensor<T>& t, const Padding& pad) {
    if (pad.top == 0 && pad.bottom == 0 && pad.left == 0 && pad.right == 0) return t;
    const int H = t.height() - pad.top - pad.bottom, W = t.width() - pad.left - pad.right;
    Tensor<T> out(t.channels(), H, W);
    for (int c = 0; c < t.channels(); ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) out.at(c, y, x) = t.at(c, y + pad.top, x + pad.left);
    return out;
}

namespace {

struct PreparedInput {
    Padding pad;
    Tensor<float> tensor;
};

PreparedInput prepare(const GeneratorParams& params, const Frame& frame) {
    if (frame.channels() != params.config.in_channels)
        throw ShapeError("generator: frame has " + std::to_string(frame.channels()) + " channels, network expects " +
                         std::to_string(params.config.in_channels));
    const Padding pad = padding_for(frame.height(), frame.width(), params.config.size_multiple());
    return {pad, reflect_pad(frame_to_tensor<float>(frame), pad)};
}

GeneratorOutput split_heads(const GeneratorConfig& cfg, const Tensor<float>& out) {
    GeneratorOutput result{tensor_to_frame(out, 0, cfg.in_channels), std::nullopt};
    if (cfg.out_heads == 2) result.minor = tensor_to_frame(out, cfg.in_channels, cfg.in_channels);
    return result;
}

}  // namespace

GeneratorOutput forward(const GeneratorParams& params, const Frame& frame) {
    auto in = prepare(params, frame);
    return split_heads(params.config, crop(forward_tensor(params, in.tensor), in.pad));
}

LossGradient loss_gradient(const GeneratorParams& params, const Frame& frame, const LossFn& loss_fn) {
    auto in = prepare(params, frame);
    ForwardCache<float> cache;
    const Tensor<float> raw = forward_tensor(params, in.tensor, &cache);
    const Tensor<float> out = crop(raw, in.pad);

    LossGradient result;
    result.output = split_heads(params.config, out);
    GeneratorOutput grad{Frame(frame.height(), frame.width(), frame.channels()), std::nullopt};
    if (result.output.minor) grad.minor = Frame(frame.height(), frame.width(), frame.channels());

    result.loss = loss_fn(result.output, grad);
    if (!std::isfinite(result.loss)) throw NonFiniteLoss("loss is not finite", -1, -1);

    // Scatter d(loss)/d(output) back into the padded planar layout; padded
    // border pixels were cropped away and receive zero gradient.
    const int C = params.config.in_channels;
    Tensor<float> g(raw.channels(), raw.height(), raw.width());
    auto scatter = [&](const Frame& f, int first) {
        const auto src = f.data();
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < f.height(); ++y)
                for (int x = 0; x < f.width(); ++x)
                    g.at(first + c, y + in.pad.top, x + in.pad.left) =
                        src[(static_cast<std::size_t>(y) * f.width() + x) * C + c];
    };
    scatter(grad.main, 0);
    if (grad.minor) scatter(*grad.minor, C);

    result.gradient = backward_tensor(params, cache, g);
    return result;
}

namespace {

constexpr char kCheckpointMagic[8] = {'D', 'V', 'P', 'C', 'K', 'P', 'T', '1'};

template <typename V>
void write_raw(std::ostream& os, const V& v) {
    static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian host");
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename V>
V read_raw(std::istream& is) {
    V v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw FormatError("checkpoint: truncated file");
    return v;
}

}  // namespace

void save_checkpoint(const GeneratorParams& params, const std::filesystem::path& path) {
    nlohmann::json header;
    const auto& c = params.config;
    header["config"] = {{"in_channels", c.in_channels},
                        {"out_heads", c.out_heads},
                        {"base_width", c.base_width},
                        {"depth", c.depth},
                        {"seed", c.seed}};
    auto& layers = header["layers"] = nlohmann::json::array();
    for (const auto& l : params.layers)
        layers.push_back({{"name", l.name},
                          {"in", l.shape.in_channels},
                          {"out", l.shape.out_channels},
                          {"kernel", l.shape.kernel}});
    const std::string text = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write checkpoint " + path.string());
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    write_raw(os, static_cast<std::uint64_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& l : params.layers) {
        os.write(reinterpret_cast<const char*>(l.weight.data()), static_cast<std::streamsize>(l.weight.size() * sizeof(float)));
        os.write(reinterpret_cast<const char*>(l.bias.data()), static_cast<std::streamsize>(l.bias.size() * sizeof(float)));
    }
    if (!os) throw IoError("cannot write checkpoint " + path.string());
}

GeneratorParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint " + path.string());
    char magic[sizeof kCheckpointMagic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw FormatError("checkpoint: bad magic in " + path.string());
    const auto len = read_raw<std::uint64_t>(is);
    if (len > (1u << 26)) throw FormatError("checkpoint: implausible header length");
    std::string text(len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));
    if (!is) throw FormatError("checkpoint: truncated header");

    GeneratorConfig cfg;
    std::vector<LayerSpec> stored;
    try {
        const auto header = nlohmann::json::parse(text);
        const auto& c = header.at("config");
        cfg.in_channels = c.at("in_channels").get<int>();
        cfg.out_heads = c.at("out_heads").get<int>();
        cfg.base_width = c.at("base_width").get<int>();
        cfg.depth = c.at("depth").get<int>();
        cfg.seed = c.at("seed").get<std::uint64_t>();
        for (const auto& l : header.at("layers"))
            stored.push_back({l.at("name").get<std::string>(),
                              {l.at("in").get<int>(), l.at("out").get<int>(), l.at("kernel").get<int>()}});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: bad header: ") + e.what());
    }

    auto params = zero_generator<float>(cfg);
    if (stored.size() != params.layers.size()) throw FormatError("checkpoint: layer table does not match config");
    for (std::size_t i = 0; i < stored.size(); ++i) {
        auto& l = params.layers[i];
        if (stored[i].name != l.name || stored[i].shape.in_channels != l.shape.in_channels ||
            stored[i].shape.out_channels != l.shape.out_channels || stored[i].shape.kernel != l.shape.kernel)
            throw FormatError("checkpoint: layer " + stored[i].name + " does not match config");
        is.read(reinterpret_cast<char*>(l.weight.data()), static_cast<std::streamsize>(l.weight.size() * sizeof(float)));
        is.read(reinterpret_cast<char*>(l.bias.data()), static_cast<std::streamsize>(l.bias.size() * sizeof(float)));
        if (!is) throw FormatError("checkpoint: truncated payload");
    }
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint: trailing bytes");
    return params;
}

template struct BasicGeneratorParams<float>;
template struct BasicGeneratorParams<double>;
template BasicGeneratorParams<float> init_generator<float>(const GeneratorConfig&);
template BasicGeneratorParams<double> init_generator<double>(const GeneratorConfig&);
template BasicGeneratorParams<float> zero_generator<float>(const GeneratorConfig&);
template BasicGeneratorParams<double> zero_generator<double>(const GeneratorConfig&);
template Tensor<float> forward_tensor<float>(const BasicGeneratorParams<float>&, const Tensor<float>&, ForwardCache<float>*);
template Tensor<double> forward_tensor<double>(const BasicGeneratorParams<double>&, const Tensor<double>&, ForwardCache<double>*);
template BasicGeneratorParams<float> backward_tensor<float>(const BasicGeneratorParams<float>&, const ForwardCache<float>&, const Tensor<float>&);
template BasicGeneratorParams<double> backward_tensor<double>(const BasicGeneratorParams<double>&, const ForwardCache<double>&, const Tensor<double>&);
template Tensor<float> frame_to_tensor<float>(const Frame&);
template Tensor<double> frame_to_tensor<double>(const Frame&);
template Tensor<float> reflect_pad<float>(const Tensor<float>&, const Padding&);
template Tensor<double> reflect_pad<double>(const Tensor<double>&, const Padding&);
template Tensor<float> crop<float>(const Tensor<float>&, const Padding&);
template Tensor<double> crop<double>(const Tensor<double>&, const Padding&);

}  // namespace dvp
