#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace srn {

struct Shape {
    int n = 0, c = 0, h = 0, w = 0;

    std::int64_t numel() const {
        return static_cast<std::int64_t>(n) * c * h * w;
    }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        std::ostringstream os;
        os << n << "x" << c << "x" << h << "x" << w;
        return os.str();
    }
};

// Dense 4-D array in (batch, channel, row, col) order, row-major, immutable
// once constructed. Data is shared between copies. Tensor<float> is the
// working precision; Tensor<double> exists for gradient verification.
template <typename T>
class Tensor {
public:
    using Scalar = T;

    Tensor() = default;

    Tensor(Shape s, std::vector<T> data)
        : Tensor(s, std::make_shared<std::vector<T>>(std::move(data))) {}

    // Zero-copy adoption of an existing buffer (used by the autodiff tape for
    // gradient views). The buffer must not be mutated afterwards.
    Tensor(Shape s, std::shared_ptr<std::vector<T>> data)
        : shape_(s), data_(std::move(data)) {
        if (shape_.n < 1 || shape_.c < 1 || shape_.h < 1 || shape_.w < 1)
            throw std::invalid_argument("tensor: all dimensions must be >= 1, got " + shape_.str());
        if (!data_ || static_cast<std::int64_t>(data_->size()) != shape_.numel())
            throw std::invalid_argument("tensor: data length does not match shape " + shape_.str());
    }

    static Tensor zeros(Shape s) { return full(s, T(0)); }

    static Tensor full(Shape s, T value) {
        return Tensor(s, std::vector<T>(static_cast<std::size_t>(s.numel()), value));
    }

    bool defined() const { return data_ != nullptr; }

    const Shape& shape() const { return shape_; }
    int n() const { return shape_.n; }
    int c() const { return shape_.c; }
    int h() const { return shape_.h; }
    int w() const { return shape_.w; }
    std::int64_t numel() const { return shape_.numel(); }

    const T* data() const { return data_->data(); }

    T at(int in, int ic, int iy, int ix) const {
        return (*data_)[((static_cast<std::int64_t>(in) * shape_.c + ic) * shape_.h + iy) * shape_.w + ix];
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(static_cast<std::size_t>(numel()));
        const T* src = data();
        for (std::int64_t i = 0; i < numel(); ++i) out[static_cast<std::size_t>(i)] = static_cast<U>(src[i]);
        return Tensor<U>(shape_, std::move(out));
    }

    std::vector<T> to_vector() const { return *data_; }

    // Copy with one element replaced; used by finite-difference probes.
    Tensor with_element(std::int64_t flat_index, T value) const {
        std::vector<T> v = *data_;
        v[static_cast<std::size_t>(flat_index)] = value;
        return Tensor(shape_, std::move(v));
    }

private:
    Shape shape_;
    std::shared_ptr<std::vector<T>> data_;
};

namespace detail {

template <typename T>
using ConstMap = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;
template <typename T>
using MutMap = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;

template <typename T>
ConstMap<T> cmap(const Tensor<T>& t) {
    return ConstMap<T>(t.data(), t.numel());
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (!(a.shape() == b.shape()))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape().str() +
                                    " vs " + b.shape().str());
}

} // namespace detail

// ---- elementwise maps ------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_same_shape(a, b, "add");
    std::vector<T> out(static_cast<std::size_t>(a.numel()));
    detail::MutMap<T>(out.data(), a.numel()) = detail::cmap(a) + detail::cmap(b);
    return Tensor<T>(a.shape(), std::move(out));
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_same_shape(a, b, "sub");
    std::vector<T> out(static_cast<std::size_t>(a.numel()));
    detail::MutMap<T>(out.data(), a.numel()) = detail::cmap(a) - detail::cmap(b);
    return Tensor<T>(a.shape(), std::move(out));
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_same_shape(a, b, "mul");
    std::vector<T> out(static_cast<std::size_t>(a.numel()));
    detail::MutMap<T>(out.data(), a.numel()) = detail::cmap(a) * detail::cmap(b);
    return Tensor<T>(a.shape(), std::move(out));
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T k) {
    std::vector<T> out(static_cast<std::size_t>(a.numel()));
    detail::MutMap<T>(out.data(), a.numel()) = detail::cmap(a) * k;
    return Tensor<T>(a.shape(), std::move(out));
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    std::vector<T> out(static_cast<std::size_t>(a.numel()));
    detail::MutMap<T>(out.data(), a.numel()) = detail::cmap(a).max(T(0));
    return Tensor<T>(a.shape(), std::move(out));
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    std::vector<T> out(static_cast<std::size_t>(a.numel()));
    detail::MutMap<T>(out.data(), a.numel()) = T(1) / (T(1) + (-detail::cmap(a)).exp());
    return Tensor<T>(a.shape(), std::move(out));
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
    std::vector<T> out(static_cast<std::size_t>(a.numel()));
    detail::MutMap<T>(out.data(), a.numel()) = detail::cmap(a).tanh();
    return Tensor<T>(a.shape(), std::move(out));
}

template <typename T>
Tensor<T> clamp01(const Tensor<T>& a) {
    std::vector<T> out(static_cast<std::size_t>(a.numel()));
    detail::MutMap<T>(out.data(), a.numel()) = detail::cmap(a).max(T(0)).min(T(1));
    return Tensor<T>(a.shape(), std::move(out));
}

template <typename T>
T sum(const Tensor<T>& a) {
    return detail::cmap(a).sum();
}

// ---- layout ops ------------------------------------------------------------

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require(a.n() == b.n() && a.h() == b.h() && a.w() == b.w(),
                    "concat_channels: spatial/batch mismatch " + a.shape().str() + " vs " + b.shape().str());
    Shape os{a.n(), a.c() + b.c(), a.h(), a.w()};
    std::vector<T> out(static_cast<std::size_t>(os.numel()));
    const std::int64_t plane = static_cast<std::int64_t>(a.h()) * a.w();
    for (int in = 0; in < a.n(); ++in) {
        T* dst = out.data() + static_cast<std::int64_t>(in) * os.c * plane;
        std::copy_n(a.data() + static_cast<std::int64_t>(in) * a.c() * plane, a.c() * plane, dst);
        std::copy_n(b.data() + static_cast<std::int64_t>(in) * b.c() * plane, b.c() * plane,
                    dst + a.c() * plane);
    }
    return Tensor<T>(os, std::move(out));
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int first, int count) {
    detail::require(first >= 0 && count >= 1 && first + count <= x.c(),
                    "slice_channels: range out of bounds for " + x.shape().str());
    Shape os{x.n(), count, x.h(), x.w()};
    std::vector<T> out(static_cast<std::size_t>(os.numel()));
    const std::int64_t plane = static_cast<std::int64_t>(x.h()) * x.w();
    for (int in = 0; in < x.n(); ++in)
        std::copy_n(x.data() + (static_cast<std::int64_t>(in) * x.c() + first) * plane,
                    static_cast<std::int64_t>(count) * plane,
                    out.data() + static_cast<std::int64_t>(in) * count * plane);
    return Tensor<T>(os, std::move(out));
}

template <typename T>
Tensor<T> concat_batch(const std::vector<Tensor<T>>& items) {
    detail::require(!items.empty(), "concat_batch: empty list");
    int total_n = 0;
    for (const auto& t : items) {
        detail::require(t.c() == items[0].c() && t.h() == items[0].h() && t.w() == items[0].w(),
                        "concat_batch: mismatched item shapes");
        total_n += t.n();
    }
    Shape os{total_n, items[0].c(), items[0].h(), items[0].w()};
    std::vector<T> out(static_cast<std::size_t>(os.numel()));
    T* dst = out.data();
    for (const auto& t : items) {
        std::copy_n(t.data(), t.numel(), dst);
        dst += t.numel();
    }
    return Tensor<T>(os, std::move(out));
}

// Symmetric (edge-inclusive) reflection padding. Index folding handles pads
// larger than the source extent.
template <typename T>
Tensor<T> pad_reflect(const Tensor<T>& x, int top, int bottom, int left, int right) {
    detail::require(top >= 0 && bottom >= 0 && left >= 0 && right >= 0, "pad_reflect: negative pad");
    Shape os{x.n(), x.c(), x.h() + top + bottom, x.w() + left + right};
    std::vector<T> out(static_cast<std::size_t>(os.numel()));
    auto fold = [](int i, int extent) {
        const int period = 2 * extent;
        i = ((i % period) + period) % period;
        return i < extent ? i : period - 1 - i;
    };
    std::int64_t idx = 0;
    for (int in = 0; in < os.n; ++in)
        for (int ic = 0; ic < os.c; ++ic)
            for (int iy = 0; iy < os.h; ++iy) {
                const int sy = fold(iy - top, x.h());
                for (int ix = 0; ix < os.w; ++ix)
                    out[static_cast<std::size_t>(idx++)] = x.at(in, ic, sy, fold(ix - left, x.w()));
            }
    return Tensor<T>(os, std::move(out));
}

template <typename T>
Tensor<T> crop(const Tensor<T>& x, int top, int left, int out_h, int out_w) {
    detail::require(top >= 0 && left >= 0 && top + out_h <= x.h() && left + out_w <= x.w(),
                    "crop: window out of bounds for " + x.shape().str());
    Shape os{x.n(), x.c(), out_h, out_w};
    std::vector<T> out(static_cast<std::size_t>(os.numel()));
    std::int64_t idx = 0;
    for (int in = 0; in < os.n; ++in)
        for (int ic = 0; ic < os.c; ++ic)
            for (int iy = 0; iy < out_h; ++iy)
                for (int ix = 0; ix < out_w; ++ix)
                    out[static_cast<std::size_t>(idx++)] = x.at(in, ic, top + iy, left + ix);
    return Tensor<T>(os, std::move(out));
}

// ---- test / verification helpers -------------------------------------------

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
    if (!(a.shape() == b.shape())) return false;
    return std::equal(a.data(), a.data() + a.numel(), b.data());
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_same_shape(a, b, "max_abs_diff");
    double m = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
    return m;
}

template <typename T>
bool all_finite(const Tensor<T>& a) {
    return detail::cmap(a).isFinite().all();
}

} // namespace srn
