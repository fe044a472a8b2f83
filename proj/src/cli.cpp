#include "srn/cli.hpp"

#include "srn/config_file.hpp"
#include "srn/data.hpp"
#include "srn/metrics.hpp"
#include "srn/trainer.hpp"
#include "srn/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace srn {

namespace {

namespace fs = std::filesystem;

struct SizeArg {
    int h = 96, w = 96;
};

SizeArg parse_size(const std::string& s) {
    const auto x = s.find('x');
    detail::require(x != std::string::npos, "size: expected HxW, got " + s);
    SizeArg out;
    try {
        out.h = std::stoi(s.substr(0, x));
        out.w = std::stoi(s.substr(x + 1));
    } catch (const std::exception&) {
        throw std::invalid_argument("size: expected HxW, got " + s);
    }
    detail::require(out.h >= 8 && out.w >= 8, "size: too small: " + s);
    return out;
}

int cmd_synth(const std::string& out_dir, int count, const std::string& size_str,
              std::uint64_t seed) {
    const SizeArg size = parse_size(size_str);
    Rng rng(seed);
    const SyntheticData data = generate_synthetic_dataset(count, size.h, size.w, rng);
    save_dataset(data.train, (fs::path(out_dir) / "train").string());
    save_dataset(data.eval, (fs::path(out_dir) / "eval").string());
    std::printf("wrote %zu train and %zu eval pairs (%dx%d) under %s\n", data.train.pairs.size(),
                data.eval.pairs.size(), size.h, size.w, out_dir.c_str());
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_dir, const std::string& resume_path, int ckpt_every) {
    const auto [model_cfg, train_cfg] = read_run_config(config_path);
    const std::string train_dir =
        fs::is_directory(fs::path(data_dir) / "train") ? (fs::path(data_dir) / "train").string()
                                                       : data_dir;
    const Dataset data = load_dataset(train_dir);

    Checkpoint resume;
    TrainOptions opts;
    opts.ckpt_dir = out_dir;
    opts.ckpt_every = ckpt_every;
    if (!resume_path.empty()) {
        resume = load_checkpoint(resume_path);
        opts.resume = &resume;
    }
    const std::int64_t steps_per_epoch =
        detail::ceil_div(static_cast<int>(data.pairs.size()), train_cfg.batch);
    opts.on_epoch = [&](std::int64_t epoch) {
        if (epoch % 10 == 0 || epoch == train_cfg.epochs)
            std::printf("epoch %lld/%d\n", static_cast<long long>(epoch), train_cfg.epochs);
    };
    float last_loss = 0;
    opts.on_step = [&](std::int64_t step, float loss) {
        last_loss = loss;
        if (step % (10 * steps_per_epoch) == 0)
            std::printf("step %lld  loss %.6g\n", static_cast<long long>(step), loss);
    };

    const TrainOutcome outcome = train(model_cfg, train_cfg, data, opts);
    if (outcome.diverged) {
        std::fprintf(stderr, "training halted: %s (last good checkpoint retained)\n",
                     outcome.diagnostic.c_str());
        return 3;
    }
    std::printf("done: %zu steps, final loss %.6g, checkpoints under %s\n", outcome.losses.size(),
                static_cast<double>(last_loss), out_dir.c_str());
    return 0;
}

int cmd_infer(const std::string& ckpt_path, const std::string& input_path,
              const std::string& output_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const Tensor<float> image = read_image(input_path);
    const Tensor<float> restored = deblur_image(ckpt.weights, ckpt.model_cfg, image);
    write_image(restored, output_path);
    std::printf("%s -> %s (%dx%d)\n", input_path.c_str(), output_path.c_str(), restored.h(),
                restored.w());
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
             const std::string& csv_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const Dataset data = load_dataset(data_dir);
    std::vector<std::tuple<std::string, double, double>> rows;
    double psnr_sum = 0, ssim_sum = 0;
    for (const auto& pair : data.pairs) {
        const Tensor<float> restored =
            clamp01(deblur_image(ckpt.weights, ckpt.model_cfg, pair.blurry));
        const double p = psnr(restored, pair.sharp);
        const double s = ssim(restored, pair.sharp);
        rows.emplace_back(pair.id, p, s);
        psnr_sum += p;
        ssim_sum += s;
    }
    const double mean_psnr = psnr_sum / static_cast<double>(rows.size());
    const double mean_ssim = ssim_sum / static_cast<double>(rows.size());

    std::printf("%-16s %10s %8s\n", "id", "psnr_db", "ssim");
    for (const auto& [id, p, s] : rows) std::printf("%-16s %10.3f %8.4f\n", id.c_str(), p, s);
    std::printf("%-16s %10.3f %8.4f\n", "mean", mean_psnr, mean_ssim);

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw io_error("eval: cannot open " + csv_path + " for writing");
        csv << "id,psnr_db,ssim\n";
        for (const auto& [id, p, s] : rows) {
            char line[128];
            std::snprintf(line, sizeof(line), "%s,%.6f,%.6f\n", id.c_str(), p, s);
            csv << line;
        }
        char line[128];
        std::snprintf(line, sizeof(line), "mean,%.6f,%.6f\n", mean_psnr, mean_ssim);
        csv << line;
    }
    return 0;
}

int cmd_gradcheck(const std::string& module) {
    const auto cases = run_gradcheck_suite(module);
    bool all_pass = true;
    for (const auto& c : cases) {
        std::printf("%-18s max_rel_error %.3e  (tol %.0e)  %s\n", c.name.c_str(), c.max_rel_error,
                    c.tolerance, c.pass ? "PASS" : "FAIL");
        all_pass = all_pass && c.pass;
    }
    return all_pass ? 0 : 3;
}

int cmd_params(const std::string& variant_token, int kernel) {
    SRNConfig cfg;
    cfg.variant = parse_variant(variant_token);
    cfg.num_resblocks = variant_resblocks(variant_token);
    cfg.kernel_size = kernel;
    const ParamBreakdown breakdown = count_params_breakdown(cfg);
    std::printf("variant %s  kernel %d\n", variant_token.c_str(), kernel);
    for (const auto& [name, elems] : breakdown.blocks)
        std::printf("  %-6s %10lld\n", name.c_str(), static_cast<long long>(elems));
    if (breakdown.copies > 1) std::printf("  x%d independent scale copies\n", breakdown.copies);
    std::printf("  %-6s %10lld\n", "total", static_cast<long long>(breakdown.total));
    std::printf("Param %.2fM\n", static_cast<double>(breakdown.total) / 1e6);
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"scale-recurrent multi-scale image deblurring"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a synthetic blur dataset");
    std::string synth_out, synth_size = "96x96";
    int synth_count = 32;
    std::uint64_t synth_seed = 1;
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--count", synth_count, "number of pairs")->check(CLI::PositiveNumber);
    synth->add_option("--size", synth_size, "image size HxW");
    synth->add_option("--seed", synth_seed, "generator seed");

    auto* tr = app.add_subcommand("train", "train a model");
    std::string tr_data, tr_config, tr_out, tr_resume;
    int tr_every = 1;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--config", tr_config, "run configuration file")->required();
    tr->add_option("--out", tr_out, "checkpoint output directory")->required();
    tr->add_option("--resume", tr_resume, "checkpoint to resume from");
    tr->add_option("--ckpt-every", tr_every, "epochs between checkpoint files")
        ->check(CLI::PositiveNumber);

    auto* inf = app.add_subcommand("infer", "deblur one image");
    std::string inf_ckpt, inf_in, inf_out;
    inf->add_option("--ckpt", inf_ckpt, "checkpoint file")->required();
    inf->add_option("--input", inf_in, "input PPM image")->required();
    inf->add_option("--output", inf_out, "output PPM image")->required();

    auto* ev = app.add_subcommand("eval", "evaluate PSNR/SSIM over a dataset directory");
    std::string ev_ckpt, ev_data, ev_csv;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
    ev->add_option("--data", ev_data, "directory of blur/sharp pairs")->required();
    ev->add_option("--csv", ev_csv, "also write a CSV report");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    std::string gc_module;
    gc->add_option("--module", gc_module, "restrict to one case")
        ->check(CLI::IsMember({"conv2d", "conv2d_transpose", "bilinear_resize", "resblock",
                               "eblock", "dblock", "convlstm", "multiscale_loss", "tiny_srn"}));

    auto* pr = app.add_subcommand("params", "parameter count for a model variant");
    std::string pr_variant;
    int pr_kernel = 5;
    pr->add_option("--variant", pr_variant, "model variant")
        ->required()
        ->check(CLI::IsMember({"SS", "SC", "WOR", "RNN", "SR_FLAT", "SR_RB", "SR_ED", "SR_EDRB1",
                               "SR_EDRB2", "SR_EDRB3"}));
    pr->add_option("--kernel", pr_kernel, "kernel size")->check(CLI::IsMember({3, 5}));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_out, synth_count, synth_size, synth_seed);
        if (tr->parsed()) return cmd_train(tr_data, tr_config, tr_out, tr_resume, tr_every);
        if (inf->parsed()) return cmd_infer(inf_ckpt, inf_in, inf_out);
        if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_csv);
        if (gc->parsed()) return cmd_gradcheck(gc_module);
        if (pr->parsed()) return cmd_params(pr_variant, pr_kernel);
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}

} // namespace srn
