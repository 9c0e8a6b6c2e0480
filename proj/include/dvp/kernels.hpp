#pragma once

// Dense building blocks of the generator, in two interchangeable flavours:
//
//   dvp::kernels    OpenMP-parallel, im2col + GEMM convolutions. Used everywhere
//                   in production code.
//   dvp::reference  Straightforward serial loops. Kept as the ground truth for
//                   the kernel tests and as the baseline in bench/.
//
// Both flavours share signatures and agree to rounding error. Convolutions are
// stride 1 with zero "same" padding of k/2; weights are laid out
// [out_channel][in_channel][ky][kx].

#include <span>

#include "dvp/tensor.hpp"

namespace dvp {

inline constexpr double kLeakySlope = 0.2;

struct ConvShape {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;

    std::size_t weight_count() const noexcept {
        return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
    }

    friend bool operator==(const ConvShape&, const ConvShape&) = default;
};

namespace kernels {

template <typename T>
void conv2d_forward(const Tensor<T>& in, std::span<const T> weight, std::span<const T> bias,
                    const ConvShape& shape, Tensor<T>& out);

/// Overwrites grad_weight / grad_bias. grad_in may be null when the input
/// gradient is not needed (first layer).
template <typename T>
void conv2d_backward(const Tensor<T>& in, std::span<const T> weight, const ConvShape& shape,
                     const Tensor<T>& grad_out, Tensor<T>* grad_in, std::span<T> grad_weight,
                     std::span<T> grad_bias);

template <typename T>
void leaky_relu_forward(Tensor<T>& x);

/// `activated` is the forward output; the slope is positive so its sign
/// identifies the active branch.
template <typename T>
void leaky_relu_backward(const Tensor<T>& activated, Tensor<T>& grad);

template <typename T>
void avg_pool2_forward(const Tensor<T>& in, Tensor<T>& out);

template <typename T>
void avg_pool2_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in);

/// 2x bilinear upsampling with half-pixel centres and edge replication.
template <typename T>
void upsample2_forward(const Tensor<T>& in, Tensor<T>& out);

template <typename T>
void upsample2_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in);

}  // namespace kernels

namespace reference {

template <typename T>
void conv2d_forward(const Tensor<T>& in, std::span<const T> weight, std::span<const T> bias,
                    const ConvShape& shape, Tensor<T>& out);

template <typename T>
void conv2d_backward(const Tensor<T>& in, std::span<const T> weight, const ConvShape& shape,
                     const Tensor<T>& grad_out, Tensor<T>* grad_in, std::span<T> grad_weight,
                     std::span<T> grad_bias);

template <typename T>
void leaky_relu_forward(Tensor<T>& x);

template <typename T>
void leaky_relu_backward(const Tensor<T>& activated, Tensor<T>& grad);

template <typename T>
void avg_pool2_forward(const Tensor<T>& in, Tensor<T>& out);

template <typename T>
void avg_pool2_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in);

template <typename T>
void upsample2_forward(const Tensor<T>& in, Tensor<T>& out);

template <typename T>
void upsample2_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in);

}  // namespace reference

}  // namespace dvp
