#pragma once

// Encoder-decoder generator with skip concatenation.
//
//   level l (l = 0..depth-1): conv3x3 -> lrelu -> conv3x3 -> lrelu, keep as skip, avg-pool 2x
//   bottleneck:               conv3x3 -> lrelu -> conv3x3 -> lrelu
//   level l (l = depth-1..0): bilinear 2x, concat skip, conv3x3 -> lrelu -> conv3x3 -> lrelu
//   head:                     conv1x1, linear
//
// Level widths are base_width * 2^l; the bottleneck keeps the deepest level's
// width. With out_heads == 2 the head emits a main and a minor image stacked
// along the channel axis.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dvp/kernels.hpp"
#include "dvp/tensor.hpp"
#include "dvp/video.hpp"

namespace dvp {

struct GeneratorConfig {
    int in_channels = 3;
    int out_heads = 1;
    int base_width = 32;
    int depth = 4;
    std::uint64_t seed = 0;

    int out_channels() const noexcept { return out_heads * in_channels; }
    int level_width(int level) const noexcept { return base_width << level; }
    int bottleneck_width() const noexcept { return level_width(depth > 0 ? depth - 1 : 0); }
    /// Spatial sizes must be multiples of this; forward() pads otherwise.
    int size_multiple() const noexcept { return 1 << depth; }

    /// Throws InvalidArgument on out-of-range fields.
    void validate() const;

    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

struct LayerSpec {
    std::string name;
    ConvShape shape;
};

/// Layer table in evaluation order. The parameter layout of GeneratorParams
/// follows it one-to-one.
std::vector<LayerSpec> generator_layers(const GeneratorConfig& cfg);

template <typename T>
struct ConvLayer {
    std::string name;
    ConvShape shape;
    std::vector<T> weight;
    std::vector<T> bias;

    friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

/// All learnable weights of the generator. The same type doubles as the
/// gradient container, so gradients are congruent with parameters by
/// construction.
template <typename T>
struct BasicGeneratorParams {
    GeneratorConfig config;
    std::vector<ConvLayer<T>> layers;

    std::size_t parameter_count() const noexcept;
    bool all_finite() const noexcept;

    /// Same config and layer shapes, every value zero.
    BasicGeneratorParams zeros_like() const;

    template <typename U>
    BasicGeneratorParams<U> cast() const {
        BasicGeneratorParams<U> out;
        out.config = config;
        out.layers.reserve(layers.size());
        for (const auto& l : layers)
            out.layers.push_back({l.name, l.shape, std::vector<U>(l.weight.begin(), l.weight.end()),
                                  std::vector<U>(l.bias.begin(), l.bias.end())});
        return out;
    }

    friend bool operator==(const BasicGeneratorParams&, const BasicGeneratorParams&) = default;
};

using GeneratorParams = BasicGeneratorParams<float>;

/// The linear head's weights are N(0, kHeadScale^2 / fan_in).
inline constexpr double kHeadScale = 0.1;

/// He-initialised leaky-ReLU layers, the head as above, all biases zero.
/// Deterministic in cfg.seed.
template <typename T = float>
BasicGeneratorParams<T> init_generator(const GeneratorConfig& cfg);

/// Every weight and bias zero. Only useful for tests.
template <typename T = float>
BasicGeneratorParams<T> zero_generator(const GeneratorConfig& cfg);

/// Activations recorded by a forward pass, consumed by backward().
template <typename T>
struct ForwardCache {
    std::vector<Tensor<T>> layer_inputs;
    std::vector<Tensor<T>> layer_outputs;
};

/// Tensor-level forward pass. Input spatial size must be a multiple of
/// cfg.size_multiple(). Output has out_channels() planes.
template <typename T>
Tensor<T> forward_tensor(const BasicGeneratorParams<T>& params, const Tensor<T>& input,
                         ForwardCache<T>* cache = nullptr);

/// Gradient of the loss w.r.t. every parameter, given d(loss)/d(output) and the
/// cache of the forward pass that produced the output.
template <typename T>
BasicGeneratorParams<T> backward_tensor(const BasicGeneratorParams<T>& params, const ForwardCache<T>& cache,
                                        const Tensor<T>& grad_output);

struct GeneratorOutput {
    Frame main;
    std::optional<Frame> minor;
};

/// Frame-level forward pass. Reflect-pads to the size multiple, runs the
/// network and centre-crops back. Outputs are raw (unclamped).
GeneratorOutput forward(const GeneratorParams& params, const Frame& frame);

/// Loss callback: returns the scalar loss for `out` and fills `grad` (already
/// shaped like `out`, zero-initialised) with d(loss)/d(out).
using LossFn = std::function<double(const GeneratorOutput& out, GeneratorOutput& grad)>;

struct LossGradient {
    double loss = 0.0;
    GeneratorParams gradient;
    GeneratorOutput output;
};

/// One forward/backward pass. Throws NonFiniteLoss when the loss is NaN/inf.
LossGradient loss_gradient(const GeneratorParams& params, const Frame& frame, const LossFn& loss_fn);

// Conversions between interleaved frames and planar tensors.
template <typename T>
Tensor<T> frame_to_tensor(const Frame& frame);
Frame tensor_to_frame(const Tensor<float>& tensor, int first_channel, int channels);

/// Reflect-pad so both sizes are multiples of `multiple`; the extra rows and
/// columns are split as evenly as possible between the two sides.
struct Padding {
    int top = 0, bottom = 0, left = 0, right = 0;
};
Padding padding_for(int height, int width, int multiple);
template <typename T>
Tensor<T> reflect_pad(const Tensor<T>& t, const Padding& pad);
template <typename T>
Tensor<T> crop(const Tensor<T>& t, const Padding& pad);

/// Binary checkpoint: magic, JSON header (config + layer table), raw float32
/// payload. Round-trips bit-exactly.
void save_checkpoint(const GeneratorParams& params, const std::filesystem::path& path);
GeneratorParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dvp
