#pragma once

#include "srn/tensor.hpp"

#include <Eigen/Core>

namespace srn {

// 2-D convolution in the cross-correlation convention (no kernel flip) with
// SAME zero-padding: output spatial size = ceil(input / stride), with the
// extra padding placed on the bottom/right when the total is odd.
struct ConvSpec {
    int stride = 1;
};

namespace detail {

struct ConvGeom {
    int out_h = 0, out_w = 0;
    int pad_top = 0, pad_left = 0;
};

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

inline ConvGeom same_geometry(int h, int w, int k, int stride) {
    ConvGeom g;
    g.out_h = ceil_div(h, stride);
    g.out_w = ceil_div(w, stride);
    const int pad_h = std::max((g.out_h - 1) * stride + k - h, 0);
    const int pad_w = std::max((g.out_w - 1) * stride + k - w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
    return g;
}

template <typename T>
void check_conv_args(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b, const ConvSpec& spec,
                     const char* op) {
    require(spec.stride == 1 || spec.stride == 2, std::string(op) + ": stride must be 1 or 2");
    require(w.h() == w.w() && w.h() >= 1 && w.h() % 2 == 1,
            std::string(op) + ": kernel must be square with odd size, got " + w.shape().str());
    if (x.c() != w.c())
        throw std::invalid_argument(std::string(op) + ": input channels do not match kernel, input " +
                                    x.shape().str() + " vs kernel " + w.shape().str());
    if (b && !(b->shape() == Shape{1, w.n(), 1, 1}))
        throw std::invalid_argument(std::string(op) + ": bias shape " + b->shape().str() +
                                    " does not match kernel " + w.shape().str());
}

// Patch matrix: row m = (ci*k + ky)*k + kx, column p = oy*out_w + ox, row-major.
template <typename T>
void im2col(const T* x, int c, int h, int w, int k, int stride, const ConvGeom& g, T* col) {
    const int P = g.out_h * g.out_w;
    for (int ci = 0; ci < c; ++ci) {
        const T* plane = x + static_cast<std::int64_t>(ci) * h * w;
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* row = col + static_cast<std::int64_t>((ci * k + ky) * k + kx) * P;
                for (int oy = 0; oy < g.out_h; ++oy) {
                    const int iy = oy * stride + ky - g.pad_top;
                    T* dst = row + static_cast<std::int64_t>(oy) * g.out_w;
                    if (iy < 0 || iy >= h) {
                        std::fill_n(dst, g.out_w, T(0));
                        continue;
                    }
                    const T* src = plane + static_cast<std::int64_t>(iy) * w;
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        const int ix = ox * stride + kx - g.pad_left;
                        dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
                    }
                }
            }
    }
}

// Adjoint of im2col: scatter-add columns back into the input plane.
template <typename T>
void col2im(const T* col, int c, int h, int w, int k, int stride, const ConvGeom& g, T* x) {
    const int P = g.out_h * g.out_w;
    for (int ci = 0; ci < c; ++ci) {
        T* plane = x + static_cast<std::int64_t>(ci) * h * w;
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* row = col + static_cast<std::int64_t>((ci * k + ky) * k + kx) * P;
                for (int oy = 0; oy < g.out_h; ++oy) {
                    const int iy = oy * stride + ky - g.pad_top;
                    if (iy < 0 || iy >= h) continue;
                    const T* src = row + static_cast<std::int64_t>(oy) * g.out_w;
                    T* dst = plane + static_cast<std::int64_t>(iy) * w;
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        const int ix = ox * stride + kx - g.pad_left;
                        if (ix >= 0 && ix < w) dst[ix] += src[ox];
                    }
                }
            }
    }
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowMat<T>>;

// Swap the first two kernel axes: (a, b, k, k) -> (b, a, k, k).
template <typename T>
Tensor<T> transpose01(const Tensor<T>& w) {
    Shape os{w.c(), w.n(), w.h(), w.w()};
    std::vector<T> out(static_cast<std::size_t>(os.numel()));
    const int kk = w.h() * w.w();
    for (int a = 0; a < w.n(); ++a)
        for (int b = 0; b < w.c(); ++b)
            std::copy_n(w.data() + (static_cast<std::int64_t>(a) * w.c() + b) * kk, kk,
                        out.data() + (static_cast<std::int64_t>(b) * w.n() + a) * kk);
    return Tensor<T>(os, std::move(out));
}

} // namespace detail

// out[n,co,oy,ox] = bias[co] + sum_{ci,ky,kx} x[n,ci,oy*s+ky-pad, ox*s+kx-pad] * w[co,ci,ky,kx]
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, const ConvSpec& spec) {
    detail::check_conv_args(x, w, bias.defined() ? &bias : nullptr, spec, "conv2d");
    const int k = w.h();
    const auto g = detail::same_geometry(x.h(), x.w(), k, spec.stride);
    const int M = x.c() * k * k;
    const int P = g.out_h * g.out_w;
    Shape os{x.n(), w.n(), g.out_h, g.out_w};
    std::vector<T> out(static_cast<std::size_t>(os.numel()));
    std::vector<T> col(static_cast<std::size_t>(M) * P);
    detail::ConstRowMap<T> wmat(w.data(), w.n(), M);
    for (int in = 0; in < x.n(); ++in) {
        detail::im2col(x.data() + static_cast<std::int64_t>(in) * x.c() * x.h() * x.w(),
                       x.c(), x.h(), x.w(), k, spec.stride, g, col.data());
        detail::RowMap<T> omat(out.data() + static_cast<std::int64_t>(in) * w.n() * P, w.n(), P);
        omat.noalias() = wmat * detail::ConstRowMap<T>(col.data(), M, P);
        if (bias.defined())
            for (int co = 0; co < w.n(); ++co) omat.row(co).array() += bias.data()[co];
    }
    return Tensor<T>(os, std::move(out));
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const ConvSpec& spec) {
    return conv2d(x, w, Tensor<T>(), spec);
}

// Gradient of conv2d w.r.t. its input: scatter W^T * g back through im2col.
template <typename T>
Tensor<T> conv2d_input_grad(const Tensor<T>& gout, const Tensor<T>& w, const ConvSpec& spec,
                            const Shape& in_shape) {
    const int k = w.h();
    const auto g = detail::same_geometry(in_shape.h, in_shape.w, k, spec.stride);
    detail::require(gout.c() == w.n() && gout.h() == g.out_h && gout.w() == g.out_w &&
                        gout.n() == in_shape.n && in_shape.c == w.c(),
                    "conv2d_input_grad: output gradient " + gout.shape().str() +
                        " does not match kernel " + w.shape().str() + " and input " + in_shape.str());
    const int M = in_shape.c * k * k;
    const int P = g.out_h * g.out_w;
    std::vector<T> out(static_cast<std::size_t>(in_shape.numel()), T(0));
    std::vector<T> col(static_cast<std::size_t>(M) * P);
    detail::ConstRowMap<T> wmat(w.data(), w.n(), M);
    for (int in = 0; in < in_shape.n; ++in) {
        detail::ConstRowMap<T> gmat(gout.data() + static_cast<std::int64_t>(in) * w.n() * P, w.n(), P);
        detail::RowMap<T>(col.data(), M, P).noalias() = wmat.transpose() * gmat;
        detail::col2im(col.data(), in_shape.c, in_shape.h, in_shape.w, k, spec.stride, g,
                       out.data() + static_cast<std::int64_t>(in) * in_shape.c * in_shape.h * in_shape.w);
    }
    return Tensor<T>(in_shape, std::move(out));
}

// Gradients of conv2d w.r.t. kernel and bias.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> conv2d_weight_grads(const Tensor<T>& x, const Tensor<T>& gout,
                                                    const ConvSpec& spec, const Shape& w_shape) {
    const int k = w_shape.h;
    const auto g = detail::same_geometry(x.h(), x.w(), k, spec.stride);
    detail::require(gout.n() == x.n() && gout.c() == w_shape.n && gout.h() == g.out_h &&
                        gout.w() == g.out_w && x.c() == w_shape.c,
                    "conv2d_weight_grads: mismatched shapes");
    const int M = x.c() * k * k;
    const int P = g.out_h * g.out_w;
    std::vector<T> gw(static_cast<std::size_t>(w_shape.numel()), T(0));
    std::vector<T> gb(static_cast<std::size_t>(w_shape.n), T(0));
    std::vector<T> col(static_cast<std::size_t>(M) * P);
    detail::RowMap<T> gwmat(gw.data(), w_shape.n, M);
    for (int in = 0; in < x.n(); ++in) {
        detail::im2col(x.data() + static_cast<std::int64_t>(in) * x.c() * x.h() * x.w(),
                       x.c(), x.h(), x.w(), k, spec.stride, g, col.data());
        detail::ConstRowMap<T> gmat(gout.data() + static_cast<std::int64_t>(in) * w_shape.n * P,
                                    w_shape.n, P);
        gwmat.noalias() += gmat * detail::ConstRowMap<T>(col.data(), M, P).transpose();
        for (int co = 0; co < w_shape.n; ++co) gb[static_cast<std::size_t>(co)] += gmat.row(co).sum();
    }
    return {Tensor<T>(w_shape, std::move(gw)), Tensor<T>(Shape{1, w_shape.n, 1, 1}, std::move(gb))};
}

// Transposed convolution with stride 2: the adjoint of stride-2 conv2d, plus
// bias, so <conv2d(x), y> == <x, conv2d_transpose(y)> holds when biases are
// zero and the transpose kernel is the (out,in)-swapped conv2d kernel.
// Weights are (out_channels, in_channels, k, k) from this op's perspective;
// output spatial size is exactly 2x the input.
template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                           const ConvSpec& spec) {
    detail::check_conv_args(x, w, bias.defined() ? &bias : nullptr, spec, "conv2d_transpose");
    detail::require(spec.stride == 2, "conv2d_transpose: stride must be 2");
    const Tensor<T> v = detail::transpose01(w); // forward-conv view: maps output back to input
    const Shape out_shape{x.n(), w.n(), 2 * x.h(), 2 * x.w()};
    Tensor<T> y = conv2d_input_grad(x, v, spec, out_shape);
    if (!bias.defined()) return y;
    std::vector<T> out = y.to_vector();
    const std::int64_t plane = static_cast<std::int64_t>(out_shape.h) * out_shape.w;
    for (int in = 0; in < out_shape.n; ++in)
        for (int co = 0; co < out_shape.c; ++co) {
            T* dst = out.data() + (static_cast<std::int64_t>(in) * out_shape.c + co) * plane;
            const T b = bias.data()[co];
            for (std::int64_t i = 0; i < plane; ++i) dst[i] += b;
        }
    return Tensor<T>(out_shape, std::move(out));
}

template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& x, const Tensor<T>& w, const ConvSpec& spec) {
    return conv2d_transpose(x, w, Tensor<T>(), spec);
}

} // namespace srn
