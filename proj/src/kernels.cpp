#include "dvp/kernels.hpp"

// Eigen's own threading picks its blocking from the thread count, which changes
// summation order. Parallelism comes from the fixed column blocks below instead.
#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

#include <algorithm>
#include <vector>

namespace dvp::kernels {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

// Splits [0, n) into blocks of a fixed width and runs fn(first, width) on
// each, in parallel. Results do not depend on the number of threads.
constexpr Eigen::Index kColumnBlock = 256;

template <typename Fn>
void for_column_blocks(Eigen::Index n, Fn&& fn) {
    const Eigen::Index blocks = (n + kColumnBlock - 1) / kColumnBlock;
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const Eigen::Index first = b * kColumnBlock;
        fn(first, std::min(kColumnBlock, n - first));
    }
}

void check_conv(int in_c, int out_c, const ConvShape& s, std::size_t wsize, std::size_t bsize) {
    if (in_c != s.in_channels) throw ShapeError("conv2d: input channel count does not match layer");
    if (wsize != s.weight_count() || bsize != static_cast<std::size_t>(s.out_channels))
        throw ShapeError("conv2d: parameter size does not match layer");
    (void)out_c;
}

// Unfold a zero-padded input into a (C*k*k) x (H*W) row-major matrix.
template <typename T>
void im2col(const Tensor<T>& in, int k, std::vector<T>& cols) {
    const int C = in.channels(), H = in.height(), W = in.width(), pad = k / 2;
    const std::size_t hw = in.plane();
    cols.assign(static_cast<std::size_t>(C) * k * k * hw, T(0));
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        const T* src = in.channel(c);
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* row = cols.data() + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * hw;
                const int dy = ky - pad, dx = kx - pad;
                const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                for (int y = 0; y < H; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= H) continue;
                    const T* s = src + static_cast<std::size_t>(sy) * W + dx;
                    T* d = row + static_cast<std::size_t>(y) * W;
                    for (int x = x0; x < x1; ++x) d[x] = s[x];
                }
            }
        }
    }
}

// Adjoint of im2col: fold column gradients back onto the input plane.
template <typename T>
void col2im(const std::vector<T>& cols, int k, Tensor<T>& grad_in) {
    const int C = grad_in.channels(), H = grad_in.height(), W = grad_in.width(), pad = k / 2;
    const std::size_t hw = grad_in.plane();
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        T* dst = grad_in.channel(c);
        std::fill(dst, dst + hw, T(0));
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* row = cols.data() + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * hw;
                const int dy = ky - pad, dx = kx - pad;
                const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                for (int y = 0; y < H; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= H) continue;
                    T* d = dst + static_cast<std::size_t>(sy) * W + dx;
                    const T* s = row + static_cast<std::size_t>(y) * W;
                    for (int x = x0; x < x1; ++x) d[x] += s[x];
                }
            }
        }
    }
}

template <typename T>
thread_local std::vector<T> scratch_cols;
template <typename T>
thread_local std::vector<T> scratch_dcols;

}  // namespace

template <typename T>
void conv2d_forward(const Tensor<T>& in, std::span<const T> weight, std::span<const T> bias,
                    const ConvShape& shape, Tensor<T>& out) {
    check_conv(in.channels(), shape.out_channels, shape, weight.size(), bias.size());
    const int k = shape.kernel;
    const auto hw = static_cast<Eigen::Index>(in.plane());
    const auto K = static_cast<Eigen::Index>(shape.in_channels) * k * k;
    if (!(out.channels() == shape.out_channels && out.height() == in.height() && out.width() == in.width()))
        out = Tensor<T>(shape.out_channels, in.height(), in.width());

    ConstMatrixMap<T> wmat(weight.data(), shape.out_channels, K);
    MatrixMap<T> omat(out.data(), shape.out_channels, hw);
    if (k == 1) {
        ConstMatrixMap<T> imat(in.data(), K, hw);
        for_column_blocks(hw, [&](Eigen::Index c0, Eigen::Index w) {
            omat.middleCols(c0, w).noalias() = wmat * imat.middleCols(c0, w);
        });
    } else {
        auto& cols = scratch_cols<T>;
        im2col(in, k, cols);
        ConstMatrixMap<T> cmat(cols.data(), K, hw);
        for_column_blocks(hw, [&](Eigen::Index c0, Eigen::Index w) {
            omat.middleCols(c0, w).noalias() = wmat * cmat.middleCols(c0, w);
        });
    }
#pragma omp parallel for schedule(static)
    for (int o = 0; o < shape.out_channels; ++o) {
        T* p = out.channel(o);
        const T b = bias[o];
        for (Eigen::Index i = 0; i < hw; ++i) p[i] += b;
    }
}

template <typename T>
void conv2d_backward(const Tensor<T>& in, std::span<const T> weight, const ConvShape& shape,
                     const Tensor<T>& grad_out, Tensor<T>* grad_in, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
    check_conv(in.channels(), shape.out_channels, shape, weight.size(), grad_bias.size());
    if (grad_weight.size() != weight.size()) throw ShapeError("conv2d: weight gradient size mismatch");
    if (grad_out.channels() != shape.out_channels || grad_out.height() != in.height() ||
        grad_out.width() != in.width())
        throw ShapeError("conv2d: output gradient shape mismatch");

    const int k = shape.kernel;
    const auto hw = static_cast<Eigen::Index>(in.plane());
    const auto K = static_cast<Eigen::Index>(shape.in_channels) * k * k;
    ConstMatrixMap<T> wmat(weight.data(), shape.out_channels, K);
    ConstMatrixMap<T> gmat(grad_out.data(), shape.out_channels, hw);
    MatrixMap<T> gw(grad_weight.data(), shape.out_channels, K);

    const T* cols_ptr = in.data();
    if (k != 1) {
        im2col(in, k, scratch_cols<T>);
        cols_ptr = scratch_cols<T>.data();
    }
    ConstMatrixMap<T> cmat(cols_ptr, K, hw);
    for_column_blocks(K, [&](Eigen::Index c0, Eigen::Index w) {
        gw.middleCols(c0, w).noalias() = gmat * cmat.middleRows(c0, w).transpose();
    });

    for (int o = 0; o < shape.out_channels; ++o) {
        const T* g = grad_out.channel(o);
        T s = 0;
        for (Eigen::Index i = 0; i < hw; ++i) s += g[i];
        grad_bias[o] = s;
    }

    if (grad_in == nullptr) return;
    if (!grad_in->same_shape(in)) *grad_in = Tensor<T>(in.channels(), in.height(), in.width());
    if (k == 1) {
        MatrixMap<T> dimat(grad_in->data(), K, hw);
        for_column_blocks(hw, [&](Eigen::Index c0, Eigen::Index w) {
            dimat.middleCols(c0, w).noalias() = wmat.transpose() * gmat.middleCols(c0, w);
        });
    } else {
        auto& dcols = scratch_dcols<T>;
        dcols.resize(static_cast<std::size_t>(K * hw));
        MatrixMap<T> dcmat(dcols.data(), K, hw);
        for_column_blocks(hw, [&](Eigen::Index c0, Eigen::Index w) {
            dcmat.middleCols(c0, w).noalias() = wmat.transpose() * gmat.middleCols(c0, w);
        });
        col2im(dcols, k, *grad_in);
    }
}

template <typename T>
void leaky_relu_forward(Tensor<T>& x) {
    T* p = x.data();
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const T slope = static_cast<T>(kLeakySlope);
#pragma omp parallel for simd schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) p[i] = p[i] > T(0) ? p[i] : slope * p[i];
}

template <typename T>
void leaky_relu_backward(const Tensor<T>& activated, Tensor<T>& grad) {
    if (!activated.same_shape(grad)) throw ShapeError("leaky_relu_backward: shape mismatch");
    const T* a = activated.data();
    T* g = grad.data();
    const auto n = static_cast<std::ptrdiff_t>(grad.size());
    const T slope = static_cast<T>(kLeakySlope);
#pragma omp parallel for simd schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) g[i] = a[i] > T(0) ? g[i] : slope * g[i];
}

template <typename T>
void avg_pool2_forward(const Tensor<T>& in, Tensor<T>& out) {
    if (in.height() % 2 != 0 || in.width() % 2 != 0) throw ShapeError("avg_pool2: odd spatial size");
    const int C = in.channels(), H = in.height() / 2, W = in.width() / 2, iw = in.width();
    out = Tensor<T>(C, H, W);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        const T* s = in.channel(c);
        T* d = out.channel(c);
        for (int y = 0; y < H; ++y) {
            const T* r0 = s + static_cast<std::size_t>(2 * y) * iw;
            const T* r1 = r0 + iw;
            for (int x = 0; x < W; ++x)
                d[y * W + x] = T(0.25) * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
        }
    }
}

template <typename T>
void avg_pool2_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in) {
    const int C = grad_out.channels(), H = grad_out.height(), W = grad_out.width(), ow = 2 * W;
    grad_in = Tensor<T>(C, 2 * H, 2 * W);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        const T* g = grad_out.channel(c);
        T* d = grad_in.channel(c);
        for (int y = 0; y < H; ++y) {
            T* r0 = d + static_cast<std::size_t>(2 * y) * ow;
            T* r1 = r0 + ow;
            for (int x = 0; x < W; ++x) {
                const T v = T(0.25) * g[y * W + x];
                r0[2 * x] = v;
                r0[2 * x + 1] = v;
                r1[2 * x] = v;
                r1[2 * x + 1] = v;
            }
        }
    }
}

namespace {

// Output sample o of a 2x half-pixel upsampling draws 3/4 from source index
// o/2 and 1/4 from its neighbour towards o (clamped at the borders).
inline int up_neighbor(int o, int n) {
    const int i = o / 2;
    return (o % 2 == 0) ? std::max(i - 1, 0) : std::min(i + 1, n - 1);
}

}  // namespace

template <typename T>
void upsample2_forward(const Tensor<T>& in, Tensor<T>& out) {
    const int C = in.channels(), H = in.height(), W = in.width(), OH = 2 * H, OW = 2 * W;
    out = Tensor<T>(C, OH, OW);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        std::vector<T> rows(static_cast<std::size_t>(H) * OW);
        const T* s = in.channel(c);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < OW; ++x)
                rows[y * OW + x] = T(0.75) * s[y * W + x / 2] + T(0.25) * s[y * W + up_neighbor(x, W)];
        T* d = out.channel(c);
        for (int y = 0; y < OH; ++y) {
            const T* a = rows.data() + static_cast<std::size_t>(y / 2) * OW;
            const T* b = rows.data() + static_cast<std::size_t>(up_neighbor(y, H)) * OW;
            for (int x = 0; x < OW; ++x) d[y * OW + x] = T(0.75) * a[x] + T(0.25) * b[x];
        }
    }
}

template <typename T>
void upsample2_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in) {
    const int C = grad_out.channels(), OH = grad_out.height(), OW = grad_out.width();
    const int H = OH / 2, W = OW / 2;
    grad_in = Tensor<T>(C, H, W);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        std::vector<T> rows(static_cast<std::size_t>(H) * OW, T(0));
        const T* g = grad_out.channel(c);
        for (int y = 0; y < OH; ++y) {
            T* a = rows.data() + static_cast<std::size_t>(y / 2) * OW;
            T* b = rows.data() + static_cast<std::size_t>(up_neighbor(y, H)) * OW;
            for (int x = 0; x < OW; ++x) {
                a[x] += T(0.75) * g[y * OW + x];
                b[x] += T(0.25) * g[y * OW + x];
            }
        }
        T* d = grad_in.channel(c);
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < OW; ++x) {
                d[y * W + x / 2] += T(0.75) * rows[y * OW + x];
                d[y * W + up_neighbor(x, W)] += T(0.25) * rows[y * OW + x];
            }
        }
    }
}

#define DVP_INSTANTIATE_KERNELS(T)                                                                  \
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

DVP_INSTANTIATE_KERNELS(float)
DVP_INSTANTIATE_KERNELS(double)

#undef DVP_INSTANTIATE_KERNELS

}  // namespace dvp::kernels
