#pragma once

#include "srn/tensor.hpp"

namespace srn {

namespace detail {

// Half-pixel-center source coordinates (align_corners = false), edge-clamped.
// A constant image stays exactly constant under any resize chain.
struct LerpTap {
    int i0 = 0, i1 = 0;
    double f = 0; // weight of i1
};

inline std::vector<LerpTap> resize_taps(int in_size, int out_size) {
    std::vector<LerpTap> taps(static_cast<std::size_t>(out_size));
    const double scale = static_cast<double>(in_size) / out_size;
    for (int o = 0; o < out_size; ++o) {
        double s = (o + 0.5) * scale - 0.5;
        if (s < 0) s = 0;
        LerpTap t;
        t.i0 = std::min(static_cast<int>(s), in_size - 1);
        t.i1 = std::min(t.i0 + 1, in_size - 1);
        t.f = s - t.i0;
        taps[static_cast<std::size_t>(o)] = t;
    }
    return taps;
}

} // namespace detail

template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int out_h, int out_w) {
    detail::require(out_h >= 1 && out_w >= 1, "bilinear_resize: output size must be >= 1");
    if (out_h == x.h() && out_w == x.w()) return x;
    const auto ty = detail::resize_taps(x.h(), out_h);
    const auto tx = detail::resize_taps(x.w(), out_w);
    Shape os{x.n(), x.c(), out_h, out_w};
    std::vector<T> out(static_cast<std::size_t>(os.numel()));
    std::int64_t idx = 0;
    for (int in = 0; in < x.n(); ++in)
        for (int ic = 0; ic < x.c(); ++ic) {
            const T* plane = x.data() + (static_cast<std::int64_t>(in) * x.c() + ic) * x.h() * x.w();
            for (int oy = 0; oy < out_h; ++oy) {
                const auto& ry = ty[static_cast<std::size_t>(oy)];
                const T* r0 = plane + static_cast<std::int64_t>(ry.i0) * x.w();
                const T* r1 = plane + static_cast<std::int64_t>(ry.i1) * x.w();
                for (int ox = 0; ox < out_w; ++ox) {
                    const auto& rx = tx[static_cast<std::size_t>(ox)];
                    const double top = (1.0 - rx.f) * r0[rx.i0] + rx.f * r0[rx.i1];
                    const double bot = (1.0 - rx.f) * r1[rx.i0] + rx.f * r1[rx.i1];
                    out[static_cast<std::size_t>(idx++)] =
                        static_cast<T>((1.0 - ry.f) * top + ry.f * bot);
                }
            }
        }
    return Tensor<T>(os, std::move(out));
}

// Adjoint of bilinear_resize (it is a fixed linear map): scatter each output
// gradient onto its four source taps.
template <typename T>
Tensor<T> bilinear_resize_grad(const Tensor<T>& gout, const Shape& in_shape) {
    detail::require(gout.n() == in_shape.n && gout.c() == in_shape.c,
                    "bilinear_resize_grad: batch/channel mismatch");
    if (gout.h() == in_shape.h && gout.w() == in_shape.w) return gout;
    const auto ty = detail::resize_taps(in_shape.h, gout.h());
    const auto tx = detail::resize_taps(in_shape.w, gout.w());
    std::vector<T> out(static_cast<std::size_t>(in_shape.numel()), T(0));
    std::int64_t idx = 0;
    for (int in = 0; in < gout.n(); ++in)
        for (int ic = 0; ic < gout.c(); ++ic) {
            T* plane = out.data() + (static_cast<std::int64_t>(in) * in_shape.c + ic) * in_shape.h * in_shape.w;
            for (int oy = 0; oy < gout.h(); ++oy) {
                const auto& ry = ty[static_cast<std::size_t>(oy)];
                for (int ox = 0; ox < gout.w(); ++ox) {
                    const auto& rx = tx[static_cast<std::size_t>(ox)];
                    const double g = gout.data()[idx++];
                    plane[static_cast<std::int64_t>(ry.i0) * in_shape.w + rx.i0] +=
                        static_cast<T>((1.0 - ry.f) * (1.0 - rx.f) * g);
                    plane[static_cast<std::int64_t>(ry.i0) * in_shape.w + rx.i1] +=
                        static_cast<T>((1.0 - ry.f) * rx.f * g);
                    plane[static_cast<std::int64_t>(ry.i1) * in_shape.w + rx.i0] +=
                        static_cast<T>(ry.f * (1.0 - rx.f) * g);
                    plane[static_cast<std::int64_t>(ry.i1) * in_shape.w + rx.i1] +=
                        static_cast<T>(ry.f * rx.f * g);
                }
            }
        }
    return Tensor<T>(in_shape, std::move(out));
}

} // namespace srn
