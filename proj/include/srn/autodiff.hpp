#pragma once

#include "srn/conv.hpp"
#include "srn/resize.hpp"
#include "srn/rng.hpp"
#include "srn/tensor.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <string>

namespace srn {

template <typename T>
class Tape;

// Handle to a value recorded on a tape. Cheap to copy; valid as long as the
// tape lives.
template <typename T>
struct Var {
    Tape<T>* tape = nullptr;
    int id = -1;

    bool defined() const { return tape != nullptr; }
    const Tensor<T>& value() const { return tape->value(id); }
};

template <typename T>
struct GradientSet {
    std::map<std::string, Tensor<T>> grads;

    const Tensor<T>& at(const std::string& name) const {
        auto it = grads.find(name);
        detail::require(it != grads.end(), "gradient set: unknown parameter " + name);
        return it->second;
    }
};

// Reverse-mode tape over tensor operations. Values are recorded in execution
// order, which is a topological order of the graph; backward() walks it in
// reverse, accumulating each node's gradient before its rule fires. One
// backward pass per tape.
template <typename T>
class Tape {
public:
    struct Node {
        Tensor<T> value;
        std::array<int, 3> parent{-1, -1, -1};
        int n_parents = 0;
        bool requires_grad = false;
        std::string param_name; // empty unless a parameter leaf
        std::function<void(Tape&, const Node&, const Tensor<T>&)> back;
    };

    Var<T> input(Tensor<T> v) {
        return push(Node{std::move(v), {-1, -1, -1}, 0, false, {}, nullptr});
    }

    Var<T> param(const std::string& name, Tensor<T> v) {
        detail::require(!name.empty(), "param: empty name");
        detail::require(!param_ids_.count(name), "param: duplicate name " + name);
        Var<T> var = push(Node{std::move(v), {-1, -1, -1}, 0, true, name, nullptr});
        param_ids_.emplace(name, var.id);
        return var;
    }

    const Tensor<T>& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

    std::size_t size() const { return nodes_.size(); }

    // Record an op result. Parent handles must belong to this tape.
    Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> parents,
                  std::function<void(Tape&, const Node&, const Tensor<T>&)> back) {
        Node node;
        node.value = std::move(value);
        for (Var<T> p : parents) {
            if (!p.defined()) continue;
            detail::require(p.tape == this, "tape: operand recorded on a different tape");
            node.parent[static_cast<std::size_t>(node.n_parents++)] = p.id;
            node.requires_grad = node.requires_grad || requires_grad(p.id);
        }
        node.back = node.requires_grad ? std::move(back) : nullptr;
        return push(std::move(node));
    }

    // Accumulate g into the gradient buffer of node `id` (no-op when nothing
    // upstream needs it).
    void accumulate(int id, const Tensor<T>& g) {
        Node& node = nodes_[static_cast<std::size_t>(id)];
        if (!node.requires_grad) return;
        detail::require_same_shape(node.value, g, "tape gradient");
        auto& buf = grads_[static_cast<std::size_t>(id)];
        if (!buf) {
            buf = std::make_shared<std::vector<T>>(g.data(), g.data() + g.numel());
            return;
        }
        detail::MutMap<T>(buf->data(), g.numel()) += detail::cmap(g);
    }

    // Reverse sweep from a scalar loss; returns gradients for every parameter
    // (exact zeros for parameters the loss does not depend on).
    GradientSet<T> backward(Var<T> loss) {
        detail::require(loss.defined() && loss.tape == this, "backward: loss from a different tape");
        detail::require(loss.value().numel() == 1,
                        "backward: loss must be scalar, got " + loss.value().shape().str());
        detail::require(!backward_done_, "backward: tape already differentiated");
        backward_done_ = true;
        grads_.assign(nodes_.size(), nullptr);
        grads_[static_cast<std::size_t>(loss.id)] =
            std::make_shared<std::vector<T>>(1, T(1));
        for (int id = loss.id; id >= 0; --id) {
            Node& node = nodes_[static_cast<std::size_t>(id)];
            auto& buf = grads_[static_cast<std::size_t>(id)];
            if (!buf || !node.back) continue;
            Tensor<T> g(node.value.shape(), buf);
            node.back(*this, node, g);
        }
        GradientSet<T> out;
        for (const auto& [name, id] : param_ids_) {
            auto& buf = grads_[static_cast<std::size_t>(id)];
            const Tensor<T>& v = nodes_[static_cast<std::size_t>(id)].value;
            out.grads.emplace(name, buf ? Tensor<T>(v.shape(), buf) : Tensor<T>::zeros(v.shape()));
        }
        return out;
    }

private:
    Var<T> push(Node node) {
        nodes_.push_back(std::move(node));
        return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
    }

    std::vector<Node> nodes_;
    std::vector<std::shared_ptr<std::vector<T>>> grads_;
    std::map<std::string, int> param_ids_;
    bool backward_done_ = false;
};

namespace detail {

template <typename T>
Tape<T>& tape_of(Var<T> a) {
    require(a.defined(), "op: undefined operand");
    return *a.tape;
}

} // namespace detail

// ---- recorded ops ------------------------------------------------------------

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    Tape<T>& tp = detail::tape_of(a);
    return tp.record(add(a.value(), b.value()), {a, b},
                     [](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         t.accumulate(nd.parent[0], g);
                         t.accumulate(nd.parent[1], g);
                     });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    Tape<T>& tp = detail::tape_of(a);
    return tp.record(sub(a.value(), b.value()), {a, b},
                     [](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         t.accumulate(nd.parent[0], g);
                         t.accumulate(nd.parent[1], scale(g, T(-1)));
                     });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
    Tape<T>& tp = detail::tape_of(a);
    return tp.record(mul(a.value(), b.value()), {a, b},
                     [](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         t.accumulate(nd.parent[0], mul(g, t.value(nd.parent[1])));
                         t.accumulate(nd.parent[1], mul(g, t.value(nd.parent[0])));
                     });
}

template <typename T>
Var<T> scale(Var<T> a, T k) {
    Tape<T>& tp = detail::tape_of(a);
    return tp.record(scale(a.value(), k), {a},
                     [k](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         t.accumulate(nd.parent[0], scale(g, k));
                     });
}

template <typename T>
Var<T> relu(Var<T> a) {
    Tape<T>& tp = detail::tape_of(a);
    // Subgradient at 0 is 0.
    return tp.record(relu(a.value()), {a},
                     [](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         const Tensor<T>& x = t.value(nd.parent[0]);
                         std::vector<T> gx(static_cast<std::size_t>(g.numel()));
                         for (std::int64_t i = 0; i < g.numel(); ++i)
                             gx[static_cast<std::size_t>(i)] = x.data()[i] > T(0) ? g.data()[i] : T(0);
                         t.accumulate(nd.parent[0], Tensor<T>(g.shape(), std::move(gx)));
                     });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
    Tape<T>& tp = detail::tape_of(a);
    return tp.record(sigmoid(a.value()), {a},
                     [](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         const Tensor<T>& y = nd.value;
                         std::vector<T> gx(static_cast<std::size_t>(g.numel()));
                         for (std::int64_t i = 0; i < g.numel(); ++i) {
                             const T s = y.data()[i];
                             gx[static_cast<std::size_t>(i)] = g.data()[i] * s * (T(1) - s);
                         }
                         t.accumulate(nd.parent[0], Tensor<T>(g.shape(), std::move(gx)));
                     });
}

template <typename T>
Var<T> tanh(Var<T> a) {
    Tape<T>& tp = detail::tape_of(a);
    return tp.record(tanh(a.value()), {a},
                     [](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         const Tensor<T>& y = nd.value;
                         std::vector<T> gx(static_cast<std::size_t>(g.numel()));
                         for (std::int64_t i = 0; i < g.numel(); ++i) {
                             const T v = y.data()[i];
                             gx[static_cast<std::size_t>(i)] = g.data()[i] * (T(1) - v * v);
                         }
                         t.accumulate(nd.parent[0], Tensor<T>(g.shape(), std::move(gx)));
                     });
}

template <typename T>
Var<T> sum(Var<T> a) {
    Tape<T>& tp = detail::tape_of(a);
    return tp.record(Tensor<T>(Shape{1, 1, 1, 1}, std::vector<T>{sum(a.value())}), {a},
                     [](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         t.accumulate(nd.parent[0],
                                      Tensor<T>::full(t.value(nd.parent[0]).shape(), g.data()[0]));
                     });
}

template <typename T>
Var<T> concat_channels(Var<T> a, Var<T> b) {
    Tape<T>& tp = detail::tape_of(a);
    return tp.record(concat_channels(a.value(), b.value()), {a, b},
                     [](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         const int ca = t.value(nd.parent[0]).c();
                         const int cb = t.value(nd.parent[1]).c();
                         t.accumulate(nd.parent[0], slice_channels(g, 0, ca));
                         t.accumulate(nd.parent[1], slice_channels(g, ca, cb));
                     });
}

template <typename T>
Var<T> slice_channels(Var<T> x, int first, int count) {
    Tape<T>& tp = detail::tape_of(x);
    return tp.record(slice_channels(x.value(), first, count), {x},
                     [first, count](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         const Shape in = t.value(nd.parent[0]).shape();
                         std::vector<T> gx(static_cast<std::size_t>(in.numel()), T(0));
                         const std::int64_t plane = static_cast<std::int64_t>(in.h) * in.w;
                         for (int n = 0; n < in.n; ++n)
                             std::copy_n(g.data() + static_cast<std::int64_t>(n) * count * plane,
                                         static_cast<std::int64_t>(count) * plane,
                                         gx.data() + (static_cast<std::int64_t>(n) * in.c + first) * plane);
                         t.accumulate(nd.parent[0], Tensor<T>(in, std::move(gx)));
                     });
}

template <typename T>
Var<T> bilinear_resize(Var<T> x, int out_h, int out_w) {
    Tape<T>& tp = detail::tape_of(x);
    return tp.record(bilinear_resize(x.value(), out_h, out_w), {x},
                     [](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         t.accumulate(nd.parent[0],
                                      bilinear_resize_grad(g, t.value(nd.parent[0]).shape()));
                     });
}

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, Var<T> b, const ConvSpec& spec) {
    Tape<T>& tp = detail::tape_of(x);
    Tensor<T> y = b.defined() ? conv2d(x.value(), w.value(), b.value(), spec)
                              : conv2d(x.value(), w.value(), spec);
    return tp.record(std::move(y), {x, w, b},
                     [spec](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
                         const int xi = nd.parent[0], wi = nd.parent[1];
                         if (t.requires_grad(xi))
                             t.accumulate(xi, conv2d_input_grad(g, t.value(wi), spec,
                                                                t.value(xi).shape()));
                         const bool need_w = t.requires_grad(wi);
                         const bool need_b = nd.n_parents > 2 && t.requires_grad(nd.parent[2]);
                         if (need_w || need_b) {
                             auto [gw, gb] =
                                 conv2d_weight_grads(t.value(xi), g, spec, t.value(wi).shape());
                             if (need_w) t.accumulate(wi, gw);
                             if (need_b) t.accumulate(nd.parent[2], gb);
                         }
                     });
}

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, const ConvSpec& spec) {
    return conv2d(x, w, Var<T>{}, spec);
}

template <typename T>
Var<T> conv2d_transpose(Var<T> x, Var<T> w, Var<T> b, const ConvSpec& spec) {
    Tape<T>& tp = detail::tape_of(x);
    Tensor<T> y = b.defined() ? conv2d_transpose(x.value(), w.value(), b.value(), spec)
                              : conv2d_transpose(x.value(), w.value(), spec);
    return tp.record(
        std::move(y), {x, w, b},
        [spec](Tape<T>& t, const typename Tape<T>::Node& nd, const Tensor<T>& g) {
            const int xi = nd.parent[0], wi = nd.parent[1];
            const Tensor<T> v = detail::transpose01(t.value(wi));
            if (t.requires_grad(xi)) t.accumulate(xi, conv2d(g, v, spec));
            if (t.requires_grad(wi)) {
                // d<A_V^T x, g>/dV = weight-grad of the underlying forward conv
                // with input g and output-gradient x.
                auto [gv, gb_unused] = conv2d_weight_grads(g, t.value(xi), spec, v.shape());
                (void)gb_unused;
                t.accumulate(wi, detail::transpose01(gv));
            }
            if (nd.n_parents > 2 && t.requires_grad(nd.parent[2])) {
                const Tensor<T>& gt = g;
                std::vector<T> gb(static_cast<std::size_t>(gt.c()), T(0));
                const std::int64_t plane = static_cast<std::int64_t>(gt.h()) * gt.w();
                for (int n = 0; n < gt.n(); ++n)
                    for (int c = 0; c < gt.c(); ++c) {
                        const T* p = gt.data() + (static_cast<std::int64_t>(n) * gt.c() + c) * plane;
                        T s = T(0);
                        for (std::int64_t i = 0; i < plane; ++i) s += p[i];
                        gb[static_cast<std::size_t>(c)] += s;
                    }
                t.accumulate(nd.parent[2], Tensor<T>(Shape{1, gt.c(), 1, 1}, std::move(gb)));
            }
        });
}

template <typename T>
Var<T> conv2d_transpose(Var<T> x, Var<T> w, const ConvSpec& spec) {
    return conv2d_transpose(x, w, Var<T>{}, spec);
}

// ---- gradient utilities -------------------------------------------------------

// Joint L2 norm over the selected gradients.
template <typename T, typename Pred>
double global_norm(const GradientSet<T>& grads, Pred selected) {
    double sq = 0;
    for (const auto& [name, g] : grads.grads) {
        if (!selected(name)) continue;
        for (std::int64_t i = 0; i < g.numel(); ++i)
            sq += static_cast<double>(g.data()[i]) * static_cast<double>(g.data()[i]);
    }
    return std::sqrt(sq);
}

// Rescale the selected gradients so their joint norm does not exceed
// max_norm; unselected gradients pass through bit-identically.
template <typename T, typename Pred>
GradientSet<T> clip_by_global_norm(const GradientSet<T>& grads, double max_norm, Pred selected) {
    detail::require(max_norm > 0, "clip_by_global_norm: max_norm must be positive");
    const double norm = global_norm(grads, selected);
    if (norm <= max_norm) return grads;
    const T factor = static_cast<T>(max_norm / norm);
    GradientSet<T> out;
    for (const auto& [name, g] : grads.grads)
        out.grads.emplace(name, selected(name) ? scale(g, factor) : g);
    return out;
}

template <typename T>
GradientSet<T> clip_by_global_norm(const GradientSet<T>& grads, double max_norm) {
    return clip_by_global_norm(grads, max_norm, [](const std::string&) { return true; });
}

// ---- finite-difference verification -------------------------------------------

// Compares reverse-mode gradients against central differences on a random
// subsample of coordinates per parameter. The builder must deterministically
// map parameters to a scalar loss on a fresh tape. Relative error uses
// max(|a|, |b|, 1e-8) as denominator.
template <typename T, typename Builder>
double grad_check(Builder builder, const std::map<std::string, Tensor<T>>& params, T eps, Rng& rng,
                  int coords_per_param = 100) {
    auto eval = [&](const std::map<std::string, Tensor<T>>& p) {
        Tape<T> tape;
        Var<T> loss = builder(tape, p);
        detail::require(loss.value().numel() == 1, "grad_check: builder must return a scalar");
        const T v = loss.value().data()[0];
        detail::require(std::isfinite(static_cast<double>(v)), "grad_check: non-finite forward value");
        return v;
    };

    Tape<T> tape;
    Var<T> loss = builder(tape, params);
    detail::require(std::isfinite(static_cast<double>(loss.value().data()[0])),
                    "grad_check: non-finite forward value");
    GradientSet<T> analytic = tape.backward(loss);

    double worst = 0;
    for (const auto& [name, p] : params) {
        const std::int64_t n = p.numel();
        std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        const std::int64_t take = std::min<std::int64_t>(n, coords_per_param);
        for (std::int64_t i = 0; i < take; ++i) {
            const std::int64_t j = i + rng.uniform_int(n - i);
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        for (std::int64_t i = 0; i < take; ++i) {
            const std::int64_t coord = idx[static_cast<std::size_t>(i)];
            const T base = p.data()[coord];
            std::map<std::string, Tensor<T>> probe = params;
            probe[name] = p.with_element(coord, base + eps);
            const double fp = eval(probe);
            probe[name] = p.with_element(coord, base - eps);
            const double fm = eval(probe);
            const double numeric = (fp - fm) / (2.0 * static_cast<double>(eps));
            const double exact = analytic.at(name).data()[coord];
            const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
            worst = std::max(worst, std::abs(numeric - exact) / denom);
        }
    }
    return worst;
}

} // namespace srn
