#include "srn/verify.hpp"

namespace srn {

namespace {

using detail::DParams;
using detail::quadratic_readout;
using detail::random_tensor;

constexpr double kEps = 1e-3;
constexpr double kTol = 1e-4;

GradCheckCase run_case(const std::string& name, const DParams& params,
                       const std::function<Var<double>(Tape<double>&, const DParams&)>& builder,
                       int coords = 100) {
    Rng rng(0x5EEDCAFEULL);
    GradCheckCase c;
    c.name = name;
    c.max_rel_error = grad_check<double>(builder, params, kEps, rng, coords);
    c.tolerance = kTol;
    c.pass = c.max_rel_error < kTol;
    return c;
}

GradCheckCase case_conv2d() {
    Rng rng(11);
    DParams p;
    p["x"] = random_tensor(Shape{1, 2, 5, 5}, rng);
    p["w"] = random_tensor(Shape{3, 2, 3, 3}, rng, -0.5, 0.5);
    p["b"] = random_tensor(Shape{1, 3, 1, 1}, rng, -0.2, 0.2);
    return run_case("conv2d", p, [](Tape<double>& t, const DParams& p) {
        Var<double> y = conv2d(t.param("x", p.at("x")), t.param("w", p.at("w")),
                               t.param("b", p.at("b")), ConvSpec{2});
        return quadratic_readout(t, y);
    });
}

GradCheckCase case_conv2d_transpose() {
    Rng rng(12);
    DParams p;
    p["x"] = random_tensor(Shape{1, 3, 3, 4}, rng);
    p["w"] = random_tensor(Shape{2, 3, 3, 3}, rng, -0.5, 0.5);
    p["b"] = random_tensor(Shape{1, 2, 1, 1}, rng, -0.2, 0.2);
    return run_case("conv2d_transpose", p, [](Tape<double>& t, const DParams& p) {
        Var<double> y = conv2d_transpose(t.param("x", p.at("x")), t.param("w", p.at("w")),
                                         t.param("b", p.at("b")), ConvSpec{2});
        return quadratic_readout(t, y);
    });
}

GradCheckCase case_bilinear_resize() {
    Rng rng(13);
    DParams p;
    p["up"] = random_tensor(Shape{1, 2, 4, 6}, rng);
    p["down"] = random_tensor(Shape{1, 2, 6, 8}, rng);
    return run_case("bilinear_resize", p, [](Tape<double>& t, const DParams& p) {
        Var<double> a = quadratic_readout(t, bilinear_resize(t.param("up", p.at("up")), 7, 9));
        Var<double> b = quadratic_readout(t, bilinear_resize(t.param("down", p.at("down")), 3, 4));
        return add(a, b);
    });
}

DParams conv_pair(Rng& rng, const std::string& base, int c) {
    DParams p;
    p[base + ".c1.w"] = random_tensor(Shape{c, c, 3, 3}, rng, -0.4, 0.4);
    p[base + ".c1.b"] = random_tensor(Shape{1, c, 1, 1}, rng, -0.1, 0.1);
    p[base + ".c2.w"] = random_tensor(Shape{c, c, 3, 3}, rng, -0.4, 0.4);
    p[base + ".c2.b"] = random_tensor(Shape{1, c, 1, 1}, rng, -0.1, 0.1);
    return p;
}

ResBlockParams<double> bind_pair(Tape<double>& t, const DParams& p, const std::string& base) {
    return {{t.param(base + ".c1.w", p.at(base + ".c1.w")), t.param(base + ".c1.b", p.at(base + ".c1.b"))},
            {t.param(base + ".c2.w", p.at(base + ".c2.w")), t.param(base + ".c2.b", p.at(base + ".c2.b"))},
            true};
}

GradCheckCase case_resblock() {
    Rng rng(14);
    DParams p = conv_pair(rng, "rb", 4);
    p["x"] = random_tensor(Shape{1, 4, 6, 6}, rng);
    return run_case("resblock", p, [](Tape<double>& t, const DParams& p) {
        return quadratic_readout(t, resblock_forward(t.param("x", p.at("x")), bind_pair(t, p, "rb")));
    });
}

GradCheckCase case_eblock() {
    Rng rng(15);
    DParams p = conv_pair(rng, "rb", 4);
    p["down.w"] = random_tensor(Shape{4, 2, 3, 3}, rng, -0.4, 0.4);
    p["down.b"] = random_tensor(Shape{1, 4, 1, 1}, rng, -0.1, 0.1);
    p["x"] = random_tensor(Shape{1, 2, 6, 6}, rng);
    return run_case("eblock", p, [](Tape<double>& t, const DParams& p) {
        EBlockParams<double> eb{{t.param("down.w", p.at("down.w")), t.param("down.b", p.at("down.b"))},
                                {bind_pair(t, p, "rb")},
                                2};
        return quadratic_readout(t, eblock_forward(t.param("x", p.at("x")), eb));
    });
}

GradCheckCase case_dblock() {
    Rng rng(16);
    DParams p = conv_pair(rng, "rb", 4);
    p["up.w"] = random_tensor(Shape{2, 4, 3, 3}, rng, -0.4, 0.4);
    p["up.b"] = random_tensor(Shape{1, 2, 1, 1}, rng, -0.1, 0.1);
    p["x"] = random_tensor(Shape{1, 4, 3, 3}, rng);
    return run_case("dblock", p, [](Tape<double>& t, const DParams& p) {
        DBlockParams<double> db{{bind_pair(t, p, "rb")},
                                {t.param("up.w", p.at("up.w")), t.param("up.b", p.at("up.b"))},
                                2};
        return quadratic_readout(t, dblock_forward(t.param("x", p.at("x")), db));
    });
}

GradCheckCase case_convlstm() {
    Rng rng(17);
    DParams p;
    const int c = 4;
    for (const char* gate : {"i", "f", "c", "o"}) {
        p[std::string("x_") + gate] = random_tensor(Shape{c, c, 3, 3}, rng, -0.4, 0.4);
        p[std::string("h_") + gate] = random_tensor(Shape{c, c, 3, 3}, rng, -0.4, 0.4);
        p[std::string("b_") + gate] = random_tensor(Shape{1, c, 1, 1}, rng, -0.1, 0.1);
    }
    p["x"] = random_tensor(Shape{1, c, 4, 4}, rng);
    p["h"] = random_tensor(Shape{1, c, 4, 4}, rng, -0.8, 0.8);
    p["c"] = random_tensor(Shape{1, c, 4, 4}, rng);
    return run_case("convlstm", p, [](Tape<double>& t, const DParams& p) {
        ConvLstmParams<double> lp;
        lp.xi = t.param("x_i", p.at("x_i")); lp.hi = t.param("h_i", p.at("h_i")); lp.bi = t.param("b_i", p.at("b_i"));
        lp.xf = t.param("x_f", p.at("x_f")); lp.hf = t.param("h_f", p.at("h_f")); lp.bf = t.param("b_f", p.at("b_f"));
        lp.xc = t.param("x_c", p.at("x_c")); lp.hc = t.param("h_c", p.at("h_c")); lp.bc = t.param("b_c", p.at("b_c"));
        lp.xo = t.param("x_o", p.at("x_o")); lp.ho = t.param("h_o", p.at("h_o")); lp.bo = t.param("b_o", p.at("b_o"));
        LstmState<double> st{t.param("h", p.at("h")), t.param("c", p.at("c"))};
        auto [state, out] = convlstm_step(t.param("x", p.at("x")), st, lp);
        // exercise both returned tensors
        return add(quadratic_readout(t, out), quadratic_readout(t, state.c));
    });
}

GradCheckCase case_multiscale_loss() {
    Rng rng(18);
    DParams p;
    p["o1"] = random_tensor(Shape{1, 3, 8, 8}, rng, 0.0, 1.0);
    p["o2"] = random_tensor(Shape{1, 3, 4, 4}, rng, 0.0, 1.0);
    p["o3"] = random_tensor(Shape{1, 3, 2, 2}, rng, 0.0, 1.0);
    return run_case("multiscale_loss", p, [&](Tape<double>& t, const DParams& p) {
        Rng trng(19);
        std::vector<Var<double>> outputs{t.param("o1", p.at("o1")), t.param("o2", p.at("o2")),
                                         t.param("o3", p.at("o3"))};
        std::vector<Var<double>> targets;
        for (Var<double> o : outputs)
            targets.push_back(t.input(random_tensor(o.value().shape(), trng, 0.0, 1.0)));
        return multiscale_l2_loss(outputs, targets);
    });
}

GradCheckCase case_tiny_srn() {
    SRNConfig cfg;
    cfg.variant = Variant::SR_EDRB;
    cfg.num_resblocks = 1;
    cfg.kernel_size = 3;
    cfg.base_channels = 2;
    cfg.n_scales = 3;
    Rng wrng(20);
    const ModelWeights<double> weights = build_model<double>(cfg, wrng);
    Rng xrng(21);
    const Tensor<double> image = random_tensor(Shape{1, 3, 16, 16}, xrng, 0.0, 1.0);
    const Tensor<double> target = random_tensor(Shape{1, 3, 16, 16}, xrng, 0.0, 1.0);
    DParams p(weights.tensors.begin(), weights.tensors.end());

    auto builder = [&, image, target](Tape<double>& t, const DParams& p) {
        ModelWeights<double> w;
        w.tensors = p;
        const auto model = detail::bind_model(t, w, cfg);
        const auto pyramid = build_pyramid(image, cfg.n_scales);
        const auto outputs = forward_multiscale(t, model, pyramid);
        const auto target_pyr = build_pyramid(target, cfg.n_scales);
        std::vector<Var<double>> targets;
        for (const auto& level : target_pyr.levels) targets.push_back(t.input(level));
        return multiscale_l2_loss(outputs, targets);
    };
    return run_case("tiny_srn", p, builder, 40);
}

} // namespace

std::vector<GradCheckCase> run_gradcheck_suite(const std::string& filter) {
    std::vector<GradCheckCase> out;
    auto want = [&](const char* name) { return filter.empty() || filter == name; };
    if (want("conv2d")) out.push_back(case_conv2d());
    if (want("conv2d_transpose")) out.push_back(case_conv2d_transpose());
    if (want("bilinear_resize")) out.push_back(case_bilinear_resize());
    if (want("resblock")) out.push_back(case_resblock());
    if (want("eblock")) out.push_back(case_eblock());
    if (want("dblock")) out.push_back(case_dblock());
    if (want("convlstm")) out.push_back(case_convlstm());
    if (want("multiscale_loss")) out.push_back(case_multiscale_loss());
    if (want("tiny_srn")) out.push_back(case_tiny_srn());
    detail::require(!out.empty(), "gradcheck: unknown module '" + filter + "'");
    return out;
}

} // namespace srn
