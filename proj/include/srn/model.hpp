#pragma once

#include "srn/blocks.hpp"
#include "srn/init.hpp"

#include <optional>

namespace srn {

// Model family. SR_EDRB covers the 1/2/3-ResBlock variants via
// SRNConfig::num_resblocks; the other variants substitute pieces of that
// topology:
//   SS      single scale, recurrent module replaced by one convolution
//   SC      independent weight set per scale, otherwise like SS at each scale
//   WOR     shared weights across scales, no recurrent module
//   RNN     vanilla recurrent cell instead of ConvLSTM
//   SR_FLAT all strides 1, no skip connections of any kind
//   SR_RB   all strides 1, residual blocks and long skips kept
//   SR_ED   encoder-decoder with the residual identity connections removed
enum class Variant { SS, SC, WOR, RNN, SR_FLAT, SR_RB, SR_ED, SR_EDRB };

struct SRNConfig {
    Variant variant = Variant::SR_EDRB;
    int n_scales = 3;
    int num_resblocks = 3;
    int kernel_size = 5;
    int base_channels = 32;
    // Pyramid scale factor is fixed at 0.5: each level halves the previous.

    SRNConfig normalized() const {
        SRNConfig c = *this;
        if (c.variant == Variant::SS) c.n_scales = 1;
        return c;
    }

    void validate() const {
        detail::require(n_scales >= 1, "config: n_scales must be >= 1");
        detail::require(num_resblocks >= 1, "config: num_resblocks must be >= 1");
        detail::require(kernel_size == 3 || kernel_size == 5, "config: kernel_size must be 3 or 5");
        detail::require(base_channels >= 2 && base_channels % 2 == 0,
                        "config: base_channels must be even and >= 2");
    }
};

inline Variant parse_variant(const std::string& s) {
    if (s == "SS") return Variant::SS;
    if (s == "SC") return Variant::SC;
    if (s == "WOR") return Variant::WOR;
    if (s == "RNN") return Variant::RNN;
    if (s == "SR_FLAT") return Variant::SR_FLAT;
    if (s == "SR_RB") return Variant::SR_RB;
    if (s == "SR_ED") return Variant::SR_ED;
    if (s == "SR_EDRB1" || s == "SR_EDRB2" || s == "SR_EDRB3") return Variant::SR_EDRB;
    throw std::invalid_argument("unknown variant: " + s);
}

// Number of ResBlocks implied by a variant token; 3 unless the token pins it.
inline int variant_resblocks(const std::string& s) {
    if (s == "SR_EDRB1") return 1;
    if (s == "SR_EDRB2") return 2;
    return 3;
}

inline std::string variant_name(Variant v, int num_resblocks = 3) {
    switch (v) {
        case Variant::SS: return "SS";
        case Variant::SC: return "SC";
        case Variant::WOR: return "WOR";
        case Variant::RNN: return "RNN";
        case Variant::SR_FLAT: return "SR_FLAT";
        case Variant::SR_RB: return "SR_RB";
        case Variant::SR_ED: return "SR_ED";
        case Variant::SR_EDRB: return "SR_EDRB" + std::to_string(num_resblocks);
    }
    return "?";
}

// Named parameter store. Iteration order is the sorted name order; creation
// order (and hence RNG consumption during init) is the fixed build schedule.
template <typename T>
struct ModelWeights {
    std::map<std::string, Tensor<T>> tensors;

    void add(const std::string& name, Tensor<T> t) {
        detail::require(tensors.emplace(name, std::move(t)).second,
                        "weights: duplicate tensor name " + name);
    }
    const Tensor<T>& at(const std::string& name) const {
        auto it = tensors.find(name);
        detail::require(it != tensors.end(), "weights: missing tensor " + name);
        return it->second;
    }
    std::int64_t total_elements() const {
        std::int64_t n = 0;
        for (const auto& [k, v] : tensors) n += v.numel();
        return n;
    }
};

template <typename T>
struct ScalePyramid {
    std::vector<Tensor<T>> levels; // [0] = full resolution
};

// Successive 0.5x bilinear downsampling; level i+1 dims = ceil(level i / 2).
template <typename T>
ScalePyramid<T> build_pyramid(const Tensor<T>& image, int n_scales) {
    detail::require(n_scales >= 1, "build_pyramid: n_scales must be >= 1");
    ScalePyramid<T> p;
    p.levels.push_back(image);
    for (int i = 1; i < n_scales; ++i) {
        const Tensor<T>& prev = p.levels.back();
        p.levels.push_back(bilinear_resize(prev, detail::ceil_div(prev.h(), 2),
                                           detail::ceil_div(prev.w(), 2)));
    }
    return p;
}

namespace detail {

inline bool variant_has_lstm(Variant v) { return v == Variant::SR_EDRB || v == Variant::SR_ED; }
inline bool variant_has_rnn(Variant v) { return v == Variant::RNN; }
inline bool variant_is_flatstack(Variant v) { return v == Variant::SR_FLAT; }
inline bool variant_strided(Variant v) {
    return !(v == Variant::SR_FLAT || v == Variant::SR_RB);
}
inline bool variant_residual(Variant v) {
    return !(v == Variant::SR_ED || v == Variant::SR_FLAT);
}
inline int variant_weight_copies(const SRNConfig& cfg) {
    return cfg.variant == Variant::SC ? cfg.n_scales : 1;
}

// Per-copy channel plan of the 43-layer topology (with 3 ResBlocks per
// block): in -> e1 -> e2 -> bottleneck -> d1 -> d2 -> out.
struct StagePlan {
    int c0;     // base width
    int c1, c2; // doubled widths
};

inline StagePlan stage_plan(const SRNConfig& cfg) {
    return {cfg.base_channels, 2 * cfg.base_channels, 4 * cfg.base_channels};
}

inline std::int64_t conv_elems(int k, int cin, int cout) {
    return static_cast<std::int64_t>(k) * k * cin * cout + cout;
}

} // namespace detail

struct ParamBreakdown {
    std::vector<std::pair<std::string, std::int64_t>> blocks; // one weight copy
    int copies = 1;
    std::int64_t total = 0; // all copies
};

// Closed-form parameter count (weights + biases) per block; independent of
// build_model so the two can be cross-checked.
inline ParamBreakdown count_params_breakdown(const SRNConfig& cfg_in) {
    SRNConfig cfg = cfg_in.normalized();
    cfg.validate();
    const auto plan = detail::stage_plan(cfg);
    const int k = cfg.kernel_size;
    const int N = cfg.num_resblocks;
    const auto rb = [&](int c) { return 2 * detail::conv_elems(k, c, c); };

    ParamBreakdown out;
    out.blocks.emplace_back("in", detail::conv_elems(k, 6, plan.c0) + N * rb(plan.c0));
    out.blocks.emplace_back("e1", detail::conv_elems(k, plan.c0, plan.c1) + N * rb(plan.c1));
    out.blocks.emplace_back("e2", detail::conv_elems(k, plan.c1, plan.c2) + N * rb(plan.c2));
    if (detail::variant_has_lstm(cfg.variant))
        out.blocks.emplace_back(
            "lstm", 8 * static_cast<std::int64_t>(k) * k * plan.c2 * plan.c2 + 4 * plan.c2);
    else if (detail::variant_has_rnn(cfg.variant))
        out.blocks.emplace_back(
            "rnn", 2 * static_cast<std::int64_t>(k) * k * plan.c2 * plan.c2 + plan.c2);
    else
        out.blocks.emplace_back("mid", detail::conv_elems(k, plan.c2, plan.c2));
    out.blocks.emplace_back("d1", N * rb(plan.c2) + detail::conv_elems(k, plan.c2, plan.c1));
    out.blocks.emplace_back("d2", N * rb(plan.c1) + detail::conv_elems(k, plan.c1, plan.c0));
    out.blocks.emplace_back("out", N * rb(plan.c0) + detail::conv_elems(k, plan.c0, 3));

    out.copies = detail::variant_weight_copies(cfg);
    for (const auto& [name, elems] : out.blocks) out.total += elems;
    out.total *= out.copies;
    return out;
}

inline std::int64_t count_params(const SRNConfig& cfg) {
    return count_params_breakdown(cfg).total;
}

// Total convolution-layer count (each ResBlock contributes 2, the bottleneck
// unit counts as 1). 43 for the 3-ResBlock configurations.
inline int count_conv_layers(const SRNConfig& cfg) {
    return 6 * (1 + 2 * cfg.num_resblocks) + 1;
}

namespace detail {

template <typename T>
struct WeightBuilder {
    ModelWeights<T>& out;
    Rng& rng;
    int k;

    void conv(const std::string& base, int cout, int cin) {
        out.add(base + ".w", xavier_init<T>(Shape{cout, cin, k, k}, rng));
        out.add(base + ".b", Tensor<T>::zeros(Shape{1, cout, 1, 1}));
    }
    void kernel(const std::string& name, int cout, int cin) {
        out.add(name, xavier_init<T>(Shape{cout, cin, k, k}, rng));
    }
    void bias(const std::string& name, int c) { out.add(name, Tensor<T>::zeros(Shape{1, c, 1, 1})); }

    void resblocks(const std::string& prefix, int c, int n) {
        for (int j = 1; j <= n; ++j) {
            conv(prefix + ".rb" + std::to_string(j) + ".c1", c, c);
            conv(prefix + ".rb" + std::to_string(j) + ".c2", c, c);
        }
    }
};

template <typename T>
void build_copy(WeightBuilder<T>& b, const SRNConfig& cfg, const std::string& prefix) {
    const auto plan = stage_plan(cfg);
    const int N = cfg.num_resblocks;
    if (variant_is_flatstack(cfg.variant)) {
        // Plain stack: same 43-layer channel schedule, no block structure.
        int layer = 0;
        auto next = [&](int cout, int cin) {
            ++layer;
            char name[32];
            std::snprintf(name, sizeof(name), "flat.l%02d", layer);
            b.conv(prefix + name, cout, cin);
        };
        next(plan.c0, 6);
        for (int j = 0; j < 2 * N; ++j) next(plan.c0, plan.c0);
        next(plan.c1, plan.c0);
        for (int j = 0; j < 2 * N; ++j) next(plan.c1, plan.c1);
        next(plan.c2, plan.c1);
        for (int j = 0; j < 2 * N; ++j) next(plan.c2, plan.c2);
        next(plan.c2, plan.c2); // midpoint
        for (int j = 0; j < 2 * N; ++j) next(plan.c2, plan.c2);
        next(plan.c1, plan.c2);
        for (int j = 0; j < 2 * N; ++j) next(plan.c1, plan.c1);
        next(plan.c0, plan.c1);
        for (int j = 0; j < 2 * N; ++j) next(plan.c0, plan.c0);
        next(3, plan.c0);
        return;
    }
    b.conv(prefix + "in.conv", plan.c0, 6);
    b.resblocks(prefix + "in", plan.c0, N);
    b.conv(prefix + "e1.down", plan.c1, plan.c0);
    b.resblocks(prefix + "e1", plan.c1, N);
    b.conv(prefix + "e2.down", plan.c2, plan.c1);
    b.resblocks(prefix + "e2", plan.c2, N);
    if (variant_has_lstm(cfg.variant)) {
        for (const char* gate : {"i", "f", "c", "o"}) {
            b.kernel(prefix + "lstm.x_" + gate + ".w", plan.c2, plan.c2);
            b.kernel(prefix + "lstm.h_" + gate + ".w", plan.c2, plan.c2);
            b.bias(prefix + "lstm.b_" + gate, plan.c2);
        }
    } else if (variant_has_rnn(cfg.variant)) {
        b.kernel(prefix + "rnn.x.w", plan.c2, plan.c2);
        b.kernel(prefix + "rnn.h.w", plan.c2, plan.c2);
        b.bias(prefix + "rnn.b", plan.c2);
    } else {
        b.conv(prefix + "mid.conv", plan.c2, plan.c2);
    }
    b.resblocks(prefix + "d1", plan.c2, N);
    b.conv(prefix + "d1.up", plan.c1, plan.c2);
    b.resblocks(prefix + "d2", plan.c1, N);
    b.conv(prefix + "d2.up", plan.c0, plan.c1);
    b.resblocks(prefix + "out", plan.c0, N);
    b.conv(prefix + "out.conv", 3, plan.c0);
}

} // namespace detail

// Allocate and initialize all parameters for the requested variant. Kernels
// are Xavier-initialized in a fixed schedule order; biases are zero. The
// same seed rebuilds a bitwise-identical weight set.
template <typename T>
ModelWeights<T> build_model(const SRNConfig& cfg_in, Rng& rng) {
    SRNConfig cfg = cfg_in.normalized();
    cfg.validate();
    ModelWeights<T> weights;
    detail::WeightBuilder<T> b{weights, rng, cfg.kernel_size};
    const int copies = detail::variant_weight_copies(cfg);
    for (int s = 1; s <= copies; ++s)
        detail::build_copy(b, cfg, copies > 1 ? "s" + std::to_string(s) + "." : "");
    return weights;
}

// ---- forward ------------------------------------------------------------------

namespace detail {

template <typename T>
struct BottleneckParams {
    std::optional<ConvLstmParams<T>> lstm;
    std::optional<RnnParams<T>> rnn;
    std::optional<ConvParams<T>> conv;
};

template <typename T>
struct ScaleParams {
    InBlockParams<T> in;
    EBlockParams<T> e1, e2;
    BottleneckParams<T> mid;
    DBlockParams<T> d1, d2;
    OutBlockParams<T> out;
};

template <typename T>
struct BoundModel {
    SRNConfig cfg;
    std::vector<ScaleParams<T>> scales;    // one entry, or n_scales for SC
    std::vector<ConvParams<T>> flat;       // SR_FLAT only
};

template <typename T>
ConvParams<T> bind_conv(Tape<T>& tape, const ModelWeights<T>& w, const std::string& base) {
    return {tape.param(base + ".w", w.at(base + ".w")), tape.param(base + ".b", w.at(base + ".b"))};
}

template <typename T>
std::vector<ResBlockParams<T>> bind_resblocks(Tape<T>& tape, const ModelWeights<T>& w,
                                              const std::string& prefix, int n, bool residual) {
    std::vector<ResBlockParams<T>> out;
    for (int j = 1; j <= n; ++j) {
        const std::string base = prefix + ".rb" + std::to_string(j);
        out.push_back({bind_conv(tape, w, base + ".c1"), bind_conv(tape, w, base + ".c2"), residual});
    }
    return out;
}

template <typename T>
BoundModel<T> bind_model(Tape<T>& tape, const ModelWeights<T>& w, const SRNConfig& cfg_in) {
    SRNConfig cfg = cfg_in.normalized();
    cfg.validate();
    BoundModel<T> m;
    m.cfg = cfg;
    const int copies = variant_weight_copies(cfg);
    for (int s = 1; s <= copies; ++s) {
        const std::string prefix = copies > 1 ? "s" + std::to_string(s) + "." : "";
        if (variant_is_flatstack(cfg.variant)) {
            for (int layer = 1; layer <= count_conv_layers(cfg); ++layer) {
                char name[32];
                std::snprintf(name, sizeof(name), "flat.l%02d", layer);
                m.flat.push_back(bind_conv(tape, w, prefix + name));
            }
            continue;
        }
        const int N = cfg.num_resblocks;
        const bool residual = variant_residual(cfg.variant);
        const int stride = variant_strided(cfg.variant) ? 2 : 1;
        ScaleParams<T> sp;
        sp.in = {bind_conv(tape, w, prefix + "in.conv"), bind_resblocks(tape, w, prefix + "in", N, residual)};
        sp.e1 = {bind_conv(tape, w, prefix + "e1.down"), bind_resblocks(tape, w, prefix + "e1", N, residual),
                 stride};
        sp.e2 = {bind_conv(tape, w, prefix + "e2.down"), bind_resblocks(tape, w, prefix + "e2", N, residual),
                 stride};
        if (variant_has_lstm(cfg.variant)) {
            ConvLstmParams<T> lp;
            auto kernel = [&](const std::string& name) { return tape.param(prefix + name, w.at(prefix + name)); };
            lp.xi = kernel("lstm.x_i.w"); lp.hi = kernel("lstm.h_i.w"); lp.bi = kernel("lstm.b_i");
            lp.xf = kernel("lstm.x_f.w"); lp.hf = kernel("lstm.h_f.w"); lp.bf = kernel("lstm.b_f");
            lp.xc = kernel("lstm.x_c.w"); lp.hc = kernel("lstm.h_c.w"); lp.bc = kernel("lstm.b_c");
            lp.xo = kernel("lstm.x_o.w"); lp.ho = kernel("lstm.h_o.w"); lp.bo = kernel("lstm.b_o");
            sp.mid.lstm = lp;
        } else if (variant_has_rnn(cfg.variant)) {
            sp.mid.rnn = RnnParams<T>{tape.param(prefix + "rnn.x.w", w.at(prefix + "rnn.x.w")),
                                      tape.param(prefix + "rnn.h.w", w.at(prefix + "rnn.h.w")),
                                      tape.param(prefix + "rnn.b", w.at(prefix + "rnn.b"))};
        } else {
            sp.mid.conv = bind_conv(tape, w, prefix + "mid.conv");
        }
        sp.d1 = {bind_resblocks(tape, w, prefix + "d1", N, residual), bind_conv(tape, w, prefix + "d1.up"),
                 stride};
        sp.d2 = {bind_resblocks(tape, w, prefix + "d2", N, residual), bind_conv(tape, w, prefix + "d2.up"),
                 stride};
        sp.out = {bind_resblocks(tape, w, prefix + "out", N, residual), bind_conv(tape, w, prefix + "out.conv")};
        m.scales.push_back(std::move(sp));
    }
    return m;
}

// Spatial size of the bottleneck for a given level size (two stride-2
// SAME convolutions), or the level size itself for stride-1 variants.
inline std::pair<int, int> bottleneck_hw(const SRNConfig& cfg, int h, int w) {
    if (!variant_strided(cfg.variant)) return {h, w};
    return {ceil_div(ceil_div(h, 2), 2), ceil_div(ceil_div(w, 2), 2)};
}

// One scale of the network: encoder, recurrent bottleneck, decoder with
// additive skips from each encoder stage to its decoder mirror.
template <typename T>
std::pair<Var<T>, LstmState<T>> forward_scale(Tape<T>& tape, Var<T> x, LstmState<T> state,
                                              const ScaleParams<T>& sp, const SRNConfig& cfg) {
    Var<T> e0 = inblock_forward(x, sp.in);
    Var<T> e1 = eblock_forward(e0, sp.e1);
    Var<T> e2 = eblock_forward(e1, sp.e2);
    Var<T> g;
    LstmState<T> new_state;
    if (sp.mid.lstm) {
        auto [st, out] = convlstm_step(e2, state, *sp.mid.lstm);
        new_state = st;
        g = out;
    } else if (sp.mid.rnn) {
        auto [h, out] = rnn_step(e2, state.h, *sp.mid.rnn);
        new_state = LstmState<T>{h, h};
        g = out;
    } else {
        g = relu(conv2d(e2, sp.mid.conv->w, sp.mid.conv->b, ConvSpec{1}));
    }
    Var<T> d1 = dblock_forward(add(g, e2), sp.d1);
    Var<T> d2 = dblock_forward(add(d1, e1), sp.d2);
    Var<T> out = outblock_forward(add(d2, e0), sp.out);
    return {out, new_state};
}

template <typename T>
Var<T> forward_flat(Var<T> x, const std::vector<ConvParams<T>>& layers) {
    Var<T> y = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        y = conv2d(y, layers[i].w, layers[i].b, ConvSpec{1});
        if (i + 1 < layers.size()) y = relu(y);
    }
    return y;
}

} // namespace detail

// Coarse-to-fine forward pass. Level i of the pyramid is processed with the
// upsampled estimate and recurrent state from level i+1; at the coarsest
// level the estimate is the blurry input itself and the state is zero.
// Returns one latent image per scale, outputs[i] matching pyramid level i.
template <typename T>
std::vector<Var<T>> forward_multiscale(Tape<T>& tape, const detail::BoundModel<T>& model,
                                       const ScalePyramid<T>& pyramid) {
    const SRNConfig& cfg = model.cfg;
    detail::require(static_cast<int>(pyramid.levels.size()) == cfg.n_scales,
                    "forward_multiscale: pyramid has " + std::to_string(pyramid.levels.size()) +
                        " levels, config expects " + std::to_string(cfg.n_scales));
    const bool recurrent =
        detail::variant_has_lstm(cfg.variant) || detail::variant_has_rnn(cfg.variant);
    std::vector<Var<T>> outputs(pyramid.levels.size());
    Var<T> prev_estimate;
    LstmState<T> state;
    for (int i = cfg.n_scales - 1; i >= 0; --i) {
        const Tensor<T>& level = pyramid.levels[static_cast<std::size_t>(i)];
        detail::require(level.c() == 3, "forward_multiscale: levels must have 3 channels");
        Var<T> blurry = tape.input(level);
        Var<T> estimate_up = (i == cfg.n_scales - 1)
                                 ? blurry
                                 : bilinear_resize(prev_estimate, level.h(), level.w());
        Var<T> x = concat_channels(blurry, estimate_up);
        if (recurrent) {
            const auto [bh, bw] = detail::bottleneck_hw(cfg, level.h(), level.w());
            if (i == cfg.n_scales - 1) {
                Tensor<T> zeros = Tensor<T>::zeros(Shape{level.n(), 4 * cfg.base_channels, bh, bw});
                state = LstmState<T>{tape.input(zeros), tape.input(zeros)};
            } else {
                state = LstmState<T>{bilinear_resize(state.h, bh, bw),
                                     bilinear_resize(state.c, bh, bw)};
            }
        }
        Var<T> out;
        if (detail::variant_is_flatstack(cfg.variant)) {
            out = detail::forward_flat(x, model.flat);
        } else {
            const auto& sp = model.scales[cfg.variant == Variant::SC
                                              ? static_cast<std::size_t>(i)
                                              : std::size_t{0}];
            auto [o, st] = detail::forward_scale(tape, x, state, sp, cfg);
            out = o;
            state = st;
        }
        outputs[static_cast<std::size_t>(i)] = out;
        prev_estimate = out;
    }
    return outputs;
}

// Stateless convenience wrapper: pure function of (weights, pyramid, config).
template <typename T>
std::vector<Tensor<T>> forward_multiscale(const ModelWeights<T>& weights,
                                          const ScalePyramid<T>& pyramid, const SRNConfig& cfg) {
    Tape<T> tape;
    auto model = detail::bind_model(tape, weights, cfg);
    std::vector<Tensor<T>> out;
    for (Var<T> v : forward_multiscale(tape, model, pyramid)) out.push_back(v.value());
    return out;
}

// Input sizes must make every pyramid level divisible by 4 so that decoder
// outputs align with their encoder skips; with the 0.5 pyramid that means a
// multiple of 4 * 2^(n_scales-1).
inline int size_multiple(const SRNConfig& cfg) {
    if (!detail::variant_strided(cfg.variant)) return 1;
    return 4 << (cfg.n_scales - 1);
}

// Deblur one image of arbitrary size: reflect-pad to the required multiple,
// run the pyramid forward, crop the finest output back.
template <typename T>
Tensor<T> deblur_image(const ModelWeights<T>& weights, const SRNConfig& cfg_in,
                       const Tensor<T>& image) {
    const SRNConfig cfg = cfg_in.normalized();
    const int m = size_multiple(cfg);
    const int ph = (m - image.h() % m) % m;
    const int pw = (m - image.w() % m) % m;
    Tensor<T> padded = (ph || pw) ? pad_reflect(image, 0, ph, 0, pw) : image;
    auto outputs = forward_multiscale(weights, build_pyramid(padded, cfg.n_scales), cfg);
    Tensor<T> finest = outputs.front();
    return (ph || pw) ? crop(finest, 0, 0, image.h(), image.w()) : finest;
}

} // namespace srn
