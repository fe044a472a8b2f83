#pragma once

#include "srn/metrics.hpp"
#include "srn/model.hpp"

#include <vector>

namespace srn {

// Finite-difference verification of the reverse-mode gradients, in 64-bit
// precision with central differences (eps = 1e-3, tolerance 1e-4). Each case
// builds a quadratic scalar loss over one operation or block and compares
// every parameter's gradient on a random coordinate subsample.
struct GradCheckCase {
    std::string name;
    double max_rel_error = 0;
    double tolerance = 1e-4;
    bool pass = false;
};

namespace detail {

using DParams = std::map<std::string, Tensor<double>>;

inline Tensor<double> random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(s.numel()));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor<double>(s, std::move(v));
}

// Quadratic readout: mean((y - t)^2) against a fixed pseudo-target built
// from deterministic coefficients, so every output coordinate contributes a
// distinct, smooth gradient signal.
inline Var<double> quadratic_readout(Tape<double>& tape, Var<double> y) {
    const Shape s = y.value().shape();
    std::vector<double> t(static_cast<std::size_t>(s.numel()));
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = 0.25 * std::sin(0.7 * static_cast<double>(i) + 0.3);
    Var<double> d = sub(y, tape.input(Tensor<double>(s, std::move(t))));
    return scale(sum(mul(d, d)), 1.0 / static_cast<double>(s.numel()));
}

} // namespace detail

std::vector<GradCheckCase> run_gradcheck_suite(const std::string& filter = "");

} // namespace srn
