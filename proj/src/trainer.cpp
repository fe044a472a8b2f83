#include "srn/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

namespace srn {

namespace {

// Independent deterministic streams per purpose.
constexpr std::uint64_t kStreamInit = 0;
constexpr std::uint64_t kStreamShuffle = 1;
constexpr std::uint64_t kStreamCrop = 2;

Rng crop_rng(std::uint64_t seed, std::int64_t epoch, std::int64_t iter) {
    return Rng::derive(seed, kStreamCrop,
                       static_cast<std::uint64_t>(epoch) * 1000000007ULL +
                           static_cast<std::uint64_t>(iter));
}

bool same_model_config(const SRNConfig& a, const SRNConfig& b) {
    return a.variant == b.variant && a.n_scales == b.n_scales &&
           a.num_resblocks == b.num_resblocks && a.kernel_size == b.kernel_size &&
           a.base_channels == b.base_channels;
}

} // namespace

std::vector<int> epoch_order(std::uint64_t seed, std::int64_t epoch, int n) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng = Rng::derive(seed, kStreamShuffle, static_cast<std::uint64_t>(epoch));
    for (int i = n - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
    return order;
}

TrainOutcome train(const SRNConfig& model_cfg_in, const TrainConfig& cfg, const Dataset& data,
                   const TrainOptions& opts) {
    const SRNConfig model_cfg = model_cfg_in.normalized();
    model_cfg.validate();
    cfg.validate();
    detail::require(!data.pairs.empty(), "train: dataset is empty");

    const int n_pairs = static_cast<int>(data.pairs.size());
    const std::int64_t steps_per_epoch = detail::ceil_div(n_pairs, cfg.batch);
    const std::int64_t total_steps = steps_per_epoch * cfg.epochs;

    ModelWeights<float> weights;
    AdamState<float> adam;
    std::int64_t start_epoch = 0;
    std::int64_t step = 0;
    if (opts.resume) {
        detail::require(same_model_config(opts.resume->model_cfg, model_cfg),
                        "train: resume checkpoint was built for a different model config");
        weights = opts.resume->weights;
        if (opts.resume->opt) adam = *opts.resume->opt;
        start_epoch = opts.resume->epoch;
        step = opts.resume->step;
    } else {
        Rng init_rng = Rng::derive(cfg.seed, kStreamInit, 0);
        weights = build_model<float>(model_cfg, init_rng);
    }

    TrainOutcome outcome;
    auto snapshot = [&](std::int64_t epoch) {
        return Checkpoint{weights, adam, epoch, step, model_cfg, cfg};
    };
    outcome.last = snapshot(start_epoch);

    const auto is_lstm = [](const std::string& name) { return name.rfind("lstm.", 0) == 0; };

    for (std::int64_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto order = epoch_order(cfg.seed, epoch, n_pairs);
        for (std::int64_t iter = 0; iter < steps_per_epoch; ++iter) {
            Rng rng = crop_rng(cfg.seed, epoch, iter);
            std::vector<Tensor<float>> blur_items, sharp_items;
            const std::int64_t first = iter * cfg.batch;
            const std::int64_t last = std::min<std::int64_t>(first + cfg.batch, n_pairs);
            for (std::int64_t i = first; i < last; ++i) {
                const ImagePair& pair = data.pairs[static_cast<std::size_t>(
                    order[static_cast<std::size_t>(i)])];
                ImagePair patch = pair;
                if (!(cfg.patch == pair.blurry.h() && cfg.patch == pair.blurry.w()))
                    patch = sample_patch(pair, cfg.patch, rng);
                blur_items.push_back(patch.blurry);
                sharp_items.push_back(patch.sharp);
            }
            const auto input_pyr = build_pyramid(concat_batch(blur_items), model_cfg.n_scales);
            const auto target_pyr = build_pyramid(concat_batch(sharp_items), model_cfg.n_scales);

            Tape<float> tape;
            const auto model = detail::bind_model(tape, weights, model_cfg);
            const auto outputs = forward_multiscale(tape, model, input_pyr);
            std::vector<Var<float>> targets;
            for (const auto& level : target_pyr.levels) targets.push_back(tape.input(level));
            Var<float> loss = multiscale_l2_loss(outputs, targets);
            const float loss_value = loss.value().data()[0];
            if (!std::isfinite(loss_value)) {
                outcome.diverged = true;
                outcome.diagnostic = "non-finite loss at step " + std::to_string(step);
                return outcome;
            }

            try {
                GradientSet<float> grads = tape.backward(loss);
                grads = clip_by_global_norm(grads, cfg.clip_norm, is_lstm);
                adam_step(weights, grads, adam, lr_at(step, total_steps, cfg.lr0, cfg.lr_end, cfg.power));
            } catch (const numeric_error& e) {
                outcome.diverged = true;
                outcome.diagnostic = e.what();
                return outcome;
            }

            ++step;
            outcome.losses.push_back(loss_value);
            if (opts.on_step) opts.on_step(step, loss_value);
        }

        outcome.last = snapshot(epoch + 1);
        if (!opts.ckpt_dir.empty() &&
            ((epoch + 1) % std::max(1, opts.ckpt_every) == 0 || epoch + 1 == cfg.epochs)) {
            char name[32];
            std::snprintf(name, sizeof(name), "epoch_%05d.srnw", static_cast<int>(epoch + 1));
            std::filesystem::create_directories(opts.ckpt_dir);
            save_checkpoint(outcome.last, (std::filesystem::path(opts.ckpt_dir) / name).string());
        }
        if (opts.on_epoch) opts.on_epoch(epoch + 1);
    }

    if (!opts.ckpt_dir.empty()) {
        std::filesystem::create_directories(opts.ckpt_dir);
        save_checkpoint(outcome.last,
                        (std::filesystem::path(opts.ckpt_dir) / "final.srnw").string());
    }
    return outcome;
}

} // namespace srn
