#pragma once

#include "srn/rng.hpp"
#include "srn/tensor.hpp"

#include <cmath>

namespace srn {

// Xavier/Glorot uniform init for a (out_channels, in_channels, k, k) kernel:
// i.i.d. uniform on +-sqrt(6 / (fan_in + fan_out)) with fan_in = in*k*k and
// fan_out = out*k*k.
template <typename T>
Tensor<T> xavier_init(const Shape& shape, Rng& rng) {
    const double fan_in = static_cast<double>(shape.c) * shape.h * shape.w;
    const double fan_out = static_cast<double>(shape.n) * shape.h * shape.w;
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<T> data(static_cast<std::size_t>(shape.numel()));
    for (auto& v : data) v = static_cast<T>(rng.uniform(-bound, bound));
    return Tensor<T>(shape, std::move(data));
}

} // namespace srn
