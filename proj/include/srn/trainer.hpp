#pragma once

#include "srn/data.hpp"
#include "srn/metrics.hpp"
#include "srn/optimizer.hpp"

#include <functional>
#include <optional>

namespace srn {

struct TrainConfig {
    double lr0 = 1e-4;
    double lr_end = 1e-6;
    double power = 0.3;
    double clip_norm = 3.0;
    int epochs = 2000;
    int batch = 16;
    int patch = 256;
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(lr_end > 0 && lr_end < lr0, "train config: need 0 < lr_end < lr0");
        detail::require(power > 0, "train config: power must be > 0");
        detail::require(epochs >= 1 && batch >= 1 && patch >= 1, "train config: bad sizes");
        detail::require(clip_norm > 0, "train config: clip_norm must be > 0");
    }
};

struct Checkpoint {
    ModelWeights<float> weights;
    std::optional<AdamState<float>> opt;
    std::int64_t epoch = 0; // completed epochs
    std::int64_t step = 0;  // completed optimizer steps
    SRNConfig model_cfg;
    TrainConfig train_cfg;
};

// Binary container (magic SRNW, little-endian):
//   u16 version=1, u16 flags (bit0: optimizer state present), u32 tensor
//   count, then per tensor u16 name length + name bytes, u8 dtype (0 = f32),
//   u8 rank, rank x u32 dims, payload; trailing u32 CRC32 (IEEE) over the
//   whole tensor-record region. A `<path>.json` sidecar echoes the model and
//   training configuration as `key: value` lines.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::uint32_t crc32_ieee(const unsigned char* data, std::size_t size);

struct TrainOutcome {
    std::vector<float> losses; // one entry per optimizer step
    Checkpoint last;           // state after the last completed epoch
    bool diverged = false;
    std::string diagnostic;
};

struct TrainOptions {
    std::string ckpt_dir;             // empty: keep checkpoints in memory only
    int ckpt_every = 1;               // epochs between checkpoint files
    const Checkpoint* resume = nullptr;
    std::function<void(std::int64_t step, float loss)> on_step;
    std::function<void(std::int64_t epoch)> on_epoch;
};

// Pair visit order for one epoch: a seeded Fisher-Yates permutation, so every
// pair is drawn exactly once per epoch (without replacement) and the order is
// reproducible from (seed, epoch) alone.
std::vector<int> epoch_order(std::uint64_t seed, std::int64_t epoch, int n);

// The optimization loop: per iteration, sample a batch of aligned patch
// pairs (without replacement within the epoch), build input/target pyramids,
// run the multiscale forward, take the per-scale L2 loss, backpropagate,
// clip the ConvLSTM gradients by global norm, and apply Adam at the decayed
// learning rate. Fully deterministic for a given seed, including resumption
// from an epoch checkpoint.
TrainOutcome train(const SRNConfig& model_cfg, const TrainConfig& cfg, const Dataset& data,
                   const TrainOptions& opts = {});

} // namespace srn
