#pragma once

#include "srn/autodiff.hpp"

#include <vector>

namespace srn {

template <typename T>
struct ConvParams {
    Var<T> w;
    Var<T> b;
};

// Two equal-width convolutions with an identity skip; no normalization.
template <typename T>
struct ResBlockParams {
    ConvParams<T> c1, c2;
    bool residual = true; // false: plain conv-relu pair (skip removed)
};

template <typename T>
struct EBlockParams {
    ConvParams<T> down; // doubles channels; stride 2 (1 in the no-stride variant)
    std::vector<ResBlockParams<T>> res;
    int stride = 2;
};

template <typename T>
struct DBlockParams {
    std::vector<ResBlockParams<T>> res;
    ConvParams<T> up; // halves channels; stride-2 deconv (stride-1 conv in the no-stride variant)
    int stride = 2;
};

template <typename T>
struct InBlockParams {
    ConvParams<T> conv; // image planes -> base width
    std::vector<ResBlockParams<T>> res;
};

template <typename T>
struct OutBlockParams {
    std::vector<ResBlockParams<T>> res;
    ConvParams<T> conv; // base width -> 3, no activation
};

template <typename T>
struct ConvLstmParams {
    Var<T> xi, hi, bi;
    Var<T> xf, hf, bf;
    Var<T> xc, hc, bc;
    Var<T> xo, ho, bo;
};

template <typename T>
struct LstmState {
    Var<T> h, c;
    bool defined() const { return h.defined(); }
};

template <typename T>
Var<T> resblock_forward(Var<T> x, const ResBlockParams<T>& p) {
    const ConvSpec s1{1};
    Var<T> y = conv2d(relu(conv2d(x, p.c1.w, p.c1.b, s1)), p.c2.w, p.c2.b, s1);
    return p.residual ? add(x, y) : relu(y);
}

template <typename T>
Var<T> eblock_forward(Var<T> x, const EBlockParams<T>& p) {
    Var<T> y = relu(conv2d(x, p.down.w, p.down.b, ConvSpec{p.stride}));
    for (const auto& rb : p.res) y = resblock_forward(y, rb);
    return y;
}

template <typename T>
Var<T> dblock_forward(Var<T> x, const DBlockParams<T>& p) {
    detail::require(x.value().c() % 2 == 0,
                    "dblock: input channels must be even, got " + x.value().shape().str());
    Var<T> y = x;
    for (const auto& rb : p.res) y = resblock_forward(y, rb);
    if (p.stride == 2)
        y = relu(conv2d_transpose(y, p.up.w, p.up.b, ConvSpec{2}));
    else
        y = relu(conv2d(y, p.up.w, p.up.b, ConvSpec{1}));
    return y;
}

template <typename T>
Var<T> inblock_forward(Var<T> x, const InBlockParams<T>& p) {
    Var<T> y = relu(conv2d(x, p.conv.w, p.conv.b, ConvSpec{1}));
    for (const auto& rb : p.res) y = resblock_forward(y, rb);
    return y;
}

template <typename T>
Var<T> outblock_forward(Var<T> f, const OutBlockParams<T>& p) {
    Var<T> y = f;
    for (const auto& rb : p.res) y = resblock_forward(y, rb);
    return conv2d(y, p.conv.w, p.conv.b, ConvSpec{1});
}

// Standard ConvLSTM cell, no peephole connections. All gate convolutions are
// stride 1 at the bottleneck width; one bias per gate (on the hidden path).
//   i = sig(Wxi*x + Whi*h + bi)        f = sig(Wxf*x + Whf*h + bf)
//   c' = f.c + i.tanh(Wxc*x + Whc*h + bc)
//   o = sig(Wxo*x + Who*h + bo)        h' = o.tanh(c')
template <typename T>
std::pair<LstmState<T>, Var<T>> convlstm_step(Var<T> x, const LstmState<T>& state,
                                              const ConvLstmParams<T>& p) {
    const ConvSpec s1{1};
    detail::require(state.defined(), "convlstm: undefined state");
    detail::require_same_shape(state.h.value(), state.c.value(), "convlstm state");
    detail::require(x.value().c() == state.h.value().c() && x.value().h() == state.h.value().h() &&
                        x.value().w() == state.h.value().w(),
                    "convlstm: input " + x.value().shape().str() + " does not match state " +
                        state.h.value().shape().str());
    Var<T> h = state.h;
    Var<T> i = sigmoid(add(conv2d(x, p.xi, s1), conv2d(h, p.hi, p.bi, s1)));
    Var<T> f = sigmoid(add(conv2d(x, p.xf, s1), conv2d(h, p.hf, p.bf, s1)));
    Var<T> g = tanh(add(conv2d(x, p.xc, s1), conv2d(h, p.hc, p.bc, s1)));
    Var<T> c_new = add(mul(f, state.c), mul(i, g));
    Var<T> o = sigmoid(add(conv2d(x, p.xo, s1), conv2d(h, p.ho, p.bo, s1)));
    Var<T> h_new = mul(o, tanh(c_new));
    return {LstmState<T>{h_new, c_new}, h_new};
}

// Vanilla recurrent cell used by the RNN baseline: h' = tanh(Wx*x + Wh*h + b).
template <typename T>
struct RnnParams {
    Var<T> x, h, b;
};

template <typename T>
std::pair<Var<T>, Var<T>> rnn_step(Var<T> x, Var<T> h, const RnnParams<T>& p) {
    const ConvSpec s1{1};
    Var<T> h_new = tanh(add(conv2d(x, p.x, s1), conv2d(h, p.h, p.b, s1)));
    return {h_new, h_new};
}

} // namespace srn
