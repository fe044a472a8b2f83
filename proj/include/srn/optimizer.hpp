#pragma once

#include "srn/autodiff.hpp"
#include "srn/model.hpp"

#include <cmath>

namespace srn {

// Raised when training numerics break down (non-finite gradients or loss);
// the CLI maps it to exit code 3.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
struct AdamState {
    std::map<std::string, Tensor<T>> m, v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One Adam update:
//   t <- t+1;  m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
// Moment buffers are created as zeros on first use, so a fresh state is an
// ordinary Adam start.
template <typename T>
void adam_step(ModelWeights<T>& weights, const GradientSet<T>& grads, AdamState<T>& state,
               double lr) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (auto& [name, theta] : weights.tensors) {
        const Tensor<T>& g = grads.at(name);
        detail::require_same_shape(theta, g, "adam_step");
        if (!all_finite(g)) throw numeric_error("adam: non-finite gradient for parameter " + name);
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, Tensor<T>::zeros(theta.shape())).first;
            state.v.emplace(name, Tensor<T>::zeros(theta.shape()));
        }
        Tensor<T>& m = mit->second;
        Tensor<T>& v = state.v.at(name);
        const std::int64_t n = theta.numel();
        std::vector<T> nm(static_cast<std::size_t>(n)), nv(static_cast<std::size_t>(n)),
            nt(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            const double gi = g.data()[i];
            const double mi = state.beta1 * m.data()[i] + (1.0 - state.beta1) * gi;
            const double vi = state.beta2 * v.data()[i] + (1.0 - state.beta2) * gi * gi;
            nm[static_cast<std::size_t>(i)] = static_cast<T>(mi);
            nv[static_cast<std::size_t>(i)] = static_cast<T>(vi);
            nt[static_cast<std::size_t>(i)] =
                static_cast<T>(theta.data()[i] - lr * (mi / bc1) / (std::sqrt(vi / bc2) + state.eps));
        }
        m = Tensor<T>(theta.shape(), std::move(nm));
        v = Tensor<T>(theta.shape(), std::move(nv));
        theta = Tensor<T>(theta.shape(), std::move(nt));
    }
}

// Polynomial decay to a floor: lr(t) = (lr0-lr_end)*(1 - t/T)^power + lr_end,
// clamped to lr_end for t >= T.
inline double lr_at(std::int64_t t, std::int64_t total, double lr0, double lr_end, double power) {
    detail::require(total > 0 && power > 0 && lr_end > 0 && lr_end < lr0, "lr_at: bad schedule");
    if (t <= 0) return lr0;
    if (t >= total) return lr_end;
    const double progress = static_cast<double>(t) / static_cast<double>(total);
    return (lr0 - lr_end) * std::pow(1.0 - progress, power) + lr_end;
}

} // namespace srn
