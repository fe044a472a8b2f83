#pragma once

#include "srn/model.hpp"
#include "srn/trainer.hpp"

#include <string>
#include <utility>

namespace srn {

// Run configuration: flat `key = value` lines, '#' comments, blank lines
// allowed. Unknown keys are errors. Recognized keys: variant, n_scales,
// num_resblocks, kernel_size, base_channels, batch, patch, epochs, lr0,
// lr_end, power, clip_norm, seed. Missing keys keep their defaults.
std::pair<SRNConfig, TrainConfig> read_run_config(const std::string& path);
std::pair<SRNConfig, TrainConfig> parse_run_config(const std::string& text,
                                                   const std::string& origin);

// Checkpoint sidecar: the same keys as `key: value` lines.
void write_config_sidecar(const SRNConfig& model, const TrainConfig& train,
                          const std::string& path);
std::pair<SRNConfig, TrainConfig> read_config_sidecar(const std::string& path);

} // namespace srn
