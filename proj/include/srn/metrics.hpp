#pragma once

#include "srn/autodiff.hpp"

#include <cmath>
#include <vector>

namespace srn {

struct LossConfig {
    std::vector<double> kappa; // per-scale weights; empty = all 1.0

    double weight(std::size_t i, std::size_t n_scales) const {
        if (kappa.empty()) return 1.0;
        detail::require(kappa.size() == n_scales, "loss: kappa length does not match scale count");
        detail::require(kappa[i] > 0, "loss: kappa must be positive");
        return kappa[i];
    }
};

// L = sum_i (kappa_i / N_i) * |out_i - target_i|_2^2, N_i = element count of
// the scale-i output (batch included).
template <typename T>
Var<T> multiscale_l2_loss(const std::vector<Var<T>>& outputs, const std::vector<Var<T>>& targets,
                          const LossConfig& cfg = {}) {
    detail::require(!outputs.empty() && outputs.size() == targets.size(),
                    "loss: need matching non-empty output/target lists, got " +
                        std::to_string(outputs.size()) + " vs " + std::to_string(targets.size()));
    Var<T> total;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        detail::require_same_shape(outputs[i].value(), targets[i].value(), "loss");
        Var<T> d = sub(outputs[i], targets[i]);
        Var<T> term = scale(sum(mul(d, d)),
                            static_cast<T>(cfg.weight(i, outputs.size()) /
                                           static_cast<double>(outputs[i].value().numel())));
        total = total.defined() ? add(total, term) : term;
    }
    return total;
}

// Eager evaluation of the same objective on plain tensors.
template <typename T>
double multiscale_l2_loss(const std::vector<Tensor<T>>& outputs,
                          const std::vector<Tensor<T>>& targets, const LossConfig& cfg = {}) {
    detail::require(!outputs.empty() && outputs.size() == targets.size(),
                    "loss: need matching non-empty output/target lists");
    double total = 0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        detail::require_same_shape(outputs[i], targets[i], "loss");
        double sq = 0;
        for (std::int64_t j = 0; j < outputs[i].numel(); ++j) {
            const double d = static_cast<double>(outputs[i].data()[j]) - targets[i].data()[j];
            sq += d * d;
        }
        total += cfg.weight(i, outputs.size()) * sq / static_cast<double>(outputs[i].numel());
    }
    return total;
}

// PSNR in dB over all channels jointly, dynamic range [0,1]; inputs are
// clamped before comparison. Identical images return the 100 dB cap.
inline constexpr double kPsnrCapDb = 100.0;

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_same_shape(a, b, "psnr");
    double sq = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double x = std::clamp(static_cast<double>(a.data()[i]), 0.0, 1.0);
        const double y = std::clamp(static_cast<double>(b.data()[i]), 0.0, 1.0);
        sq += (x - y) * (x - y);
    }
    const double mse = sq / static_cast<double>(a.numel());
    if (mse == 0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(static_cast<std::size_t>(size));
    const double c = (size - 1) / 2.0;
    double total = 0;
    for (int i = 0; i < size; ++i) {
        w[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
        total += w[static_cast<std::size_t>(i)];
    }
    for (auto& v : w) v /= total;
    return w;
}

// Channel-mean grayscale plane in doubles.
template <typename T>
std::vector<double> to_gray(const Tensor<T>& img) {
    std::vector<double> g(static_cast<std::size_t>(img.h()) * img.w(), 0.0);
    for (int c = 0; c < img.c(); ++c)
        for (int y = 0; y < img.h(); ++y)
            for (int x = 0; x < img.w(); ++x)
                g[static_cast<std::size_t>(y) * img.w() + x] += img.at(0, c, y, x);
    for (auto& v : g) v /= img.c();
    return g;
}

// Separable Gaussian filtering, valid region only: output is
// (h-size+1) x (w-size+1).
inline std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                        const std::vector<double>& win) {
    const int k = static_cast<int>(win.size());
    const int oh = h - k + 1, ow = w - k + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int i = 0; i < k; ++i) s += win[static_cast<std::size_t>(i)] * img[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int i = 0; i < k; ++i) s += win[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

} // namespace detail

// SSIM with the standard parameters: 11x11 Gaussian window (sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2, dynamic range 1, channel-mean grayscale, mean
// over valid window positions.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_same_shape(a, b, "ssim");
    detail::require(a.n() == 1, "ssim: expects a single image, got " + a.shape().str());
    constexpr int kWindow = 11;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    detail::require(a.h() >= kWindow && a.w() >= kWindow,
                    "ssim: image smaller than the 11x11 window: " + a.shape().str());
    const auto win = detail::gaussian_window(kWindow, 1.5);
    const auto ga = detail::to_gray(a);
    const auto gb = detail::to_gray(b);
    const int h = a.h(), w = a.w();
    std::vector<double> aa(ga.size()), bb(ga.size()), ab(ga.size());
    for (std::size_t i = 0; i < ga.size(); ++i) {
        aa[i] = ga[i] * ga[i];
        bb[i] = gb[i] * gb[i];
        ab[i] = ga[i] * gb[i];
    }
    const auto mu_a = detail::filter_valid(ga, h, w, win);
    const auto mu_b = detail::filter_valid(gb, h, w, win);
    const auto m_aa = detail::filter_valid(aa, h, w, win);
    const auto m_bb = detail::filter_valid(bb, h, w, win);
    const auto m_ab = detail::filter_valid(ab, h, w, win);
    double total = 0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double va = m_aa[i] - mu_a[i] * mu_a[i];
        const double vb = m_bb[i] - mu_b[i] * mu_b[i];
        const double cov = m_ab[i] - mu_a[i] * mu_b[i];
        total += ((2 * mu_a[i] * mu_b[i] + kC1) * (2 * cov + kC2)) /
                 ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (va + vb + kC2));
    }
    return total / static_cast<double>(mu_a.size());
}

} // namespace srn
