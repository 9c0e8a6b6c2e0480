// Serial reference kernels. Written for obviousness, not speed: every output
// element is an explicit sum over its receptive field.

#include "dvp/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace dvp::reference {

namespace {

void check_conv(const ConvShape& s, int in_c, std::size_t wsize, std::size_t bsize) {
    if (in_c != s.in_channels) throw ShapeError("conv2d: input channel count does not match layer");
    if (wsize != s.weight_count() || bsize != static_cast<std::size_t>(s.out_channels))
        throw ShapeError("conv2d: parameter size does not match layer");
}

inline std::size_t widx(const ConvShape& s, int o, int i, int ky, int kx) {
    return ((static_cast<std::size_t>(o) * s.in_channels + i) * s.kernel + ky) * s.kernel + kx;
}

// Weight of source sample `i` in output sample `o` of 2x half-pixel upsampling.
template <typename T>
T up_weight(int o, int i, int n) {
    const double src = (o + 0.5) / 2.0 - 0.5;
    const int lo = static_cast<int>(std::floor(src));
    const double f = src - lo;
    const int a = std::clamp(lo, 0, n - 1);
    const int b = std::clamp(lo + 1, 0, n - 1);
    double w = 0.0;
    if (i == a) w += 1.0 - f;
    if (i == b) w += f;
    return static_cast<T>(w);
}

}  // namespace

template <typename T>
void conv2d_forward(const Tensor<T>& in, std::span<const T> weight, std::span<const T> bias,
                    const ConvShape& s, Tensor<T>& out) {
    check_conv(s, in.channels(), weight.size(), bias.size());
    const int H = in.height(), W = in.width(), pad = s.kernel / 2;
    out = Tensor<T>(s.out_channels, H, W);
    for (int o = 0; o < s.out_channels; ++o)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                T acc = bias[o];
                for (int i = 0; i < s.in_channels; ++i)
                    for (int ky = 0; ky < s.kernel; ++ky)
                        for (int kx = 0; kx < s.kernel; ++kx) {
                            const int sy = y + ky - pad, sx = x + kx - pad;
                            if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                            acc += weight[widx(s, o, i, ky, kx)] * in.at(i, sy, sx);
                        }
                out.at(o, y, x) = acc;
            }
}

template <typename T>
void conv2d_backward(const Tensor<T>& in, std::span<const T> weight, const ConvShape& s,
                     const Tensor<T>& grad_out, Tensor<T>* grad_in, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
    check_conv(s, in.channels(), weight.size(), grad_bias.size());
    const int H = in.height(), W = in.width(), pad = s.kernel / 2;
    std::fill(grad_weight.begin(), grad_weight.end(), T(0));
    std::fill(grad_bias.begin(), grad_bias.end(), T(0));
    if (grad_in) *grad_in = Tensor<T>(in.channels(), H, W);
    for (int o = 0; o < s.out_channels; ++o)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const T g = grad_out.at(o, y, x);
                grad_bias[o] += g;
                for (int i = 0; i < s.in_channels; ++i)
                    for (int ky = 0; ky < s.kernel; ++ky)
                        for (int kx = 0; kx < s.kernel; ++kx) {
                            const int sy = y + ky - pad, sx = x + kx - pad;
                            if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                            grad_weight[widx(s, o, i, ky, kx)] += g * in.at(i, sy, sx);
                            if (grad_in) grad_in->at(i, sy, sx) += g * weight[widx(s, o, i, ky, kx)];
                        }
            }
}

template <typename T>
void leaky_relu_forward(Tensor<T>& x) {
    for (auto& v : x.span())
        if (v <= T(0)) v *= static_cast<T>(kLeakySlope);
}

template <typename T>
void leaky_relu_backward(const Tensor<T>& activated, Tensor<T>& grad) {
    if (!activated.same_shape(grad)) throw ShapeError("leaky_relu_backward: shape mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (activated.data()[i] <= T(0)) grad.data()[i] *= static_cast<T>(kLeakySlope);
}

template <typename T>
void avg_pool2_forward(const Tensor<T>& in, Tensor<T>& out) {
    if (in.height() % 2 != 0 || in.width() % 2 != 0) throw ShapeError("avg_pool2: odd spatial size");
    out = Tensor<T>(in.channels(), in.height() / 2, in.width() / 2);
    for (int c = 0; c < in.channels(); ++c)
        for (int y = 0; y < in.height(); ++y)
            for (int x = 0; x < in.width(); ++x) out.at(c, y / 2, x / 2) += T(0.25) * in.at(c, y, x);
}

template <typename T>
void avg_pool2_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in) {
    grad_in = Tensor<T>(grad_out.channels(), 2 * grad_out.height(), 2 * grad_out.width());
    for (int c = 0; c < grad_in.channels(); ++c)
        for (int y = 0; y < grad_in.height(); ++y)
            for (int x = 0; x < grad_in.width(); ++x) grad_in.at(c, y, x) = T(0.25) * grad_out.at(c, y / 2, x / 2);
}

template <typename T>
void upsample2_forward(const Tensor<T>& in, Tensor<T>& out) {
    const int H = in.height(), W = in.width();
    out = Tensor<T>(in.channels(), 2 * H, 2 * W);
    for (int c = 0; c < in.channels(); ++c)
        for (int oy = 0; oy < 2 * H; ++oy)
            for (int ox = 0; ox < 2 * W; ++ox) {
                T acc = 0;
                for (int y = 0; y < H; ++y)
                    for (int x = 0; x < W; ++x)
                        acc += up_weight<T>(oy, y, H) * up_weight<T>(ox, x, W) * in.at(c, y, x);
                out.at(c, oy, ox) = acc;
            }
}

template <typename T>
void upsample2_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in) {
    const int H = grad_out.height() / 2, W = grad_out.width() / 2;
    grad_in = Tensor<T>(grad_out.channels(), H, W);
    for (int c = 0; c < grad_out.channels(); ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                T acc = 0;
                for (int oy = 0; oy < 2 * H; ++oy)
                    for (int ox = 0; ox < 2 * W; ++ox)
                        acc += up_weight<T>(oy, y, H) * up_weight<T>(ox, x, W) * grad_out.at(c, oy, ox);
                grad_in.at(c, y, x) = acc;
            }
}

#define DVP_INSTANTIATE_REFERENCE(T)                                                                \
    template void conv2d_forward<T>(const Tensor<T>&, std::span<const T>, std::span<const T>,      \
                                    const ConvShape&, Tensor<T>&);                                  \
    template void conv2d_backward<T>(const Tensor<T>&, std::span<const T>, const ConvShape&,       \
                                     const Tensor<T>&, Tensor<T>*, std::span<T>, std::span<T>);     \
    template void leaky_relu_forward<T>(Tensor<T>&);                                                \
    template void leaky_relu_backward<T>(const Tensor<T>&, Tensor<T>&);                             \
    template void avg_pool2_forward<T>(const Tensor<T>&, Tensor<T>&);                               \
    template void avg_pool2_backward<T>(const Tensor<T>&, Tensor<T>&);                              \
    template void upsample2_forward<T>(const Tensor<T>&, Tensor<T>&);                               \
    template void upsample2_backward<T>(const Tensor<T>&, Tensor<T>&);

DVP_INSTANTIATE_REFERENCE(float)
DVP_INSTANTIATE_REFERENCE(double)

#undef DVP_INSTANTIATE_REFERENCE

}  // namespace dvp::reference
