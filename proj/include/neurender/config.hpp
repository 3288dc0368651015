// Copyright 2026 The neurender Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Configuration records shared by training, inference and the CLI, and their
// key = value text form with [section] headers.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "neurender/losses.hpp"
#include "neurender/networks.hpp"
#include "neurender/uvatlas.hpp"

namespace neurender {

enum class Variant { kFull, kNoInt, kIp, kWarp, kWarpCond };

std::string to_string(Variant variant);
/// Accepts full, no_int, ip, warp, warp_cond. Throws ConfigError otherwise.
Variant parse_variant(std::string_view name);

struct TrainConfig {
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  int batch_size = 1;
  int64_t total_steps = 100000;
  uint64_t seed = 0;
  Variant variant = Variant::kFull;
  int64_t ip_stage1_steps = 20000;  // inpainting-only phase of the ip baseline

  void validate() const;
};

struct ModelConfig {
  int atlas_height = 256;
  int atlas_width = 256;
  std::string layout_file;  // empty: the default 4 x 6 grid on the atlas
  networks::FeatureNetConfig featurenet;
  networks::RenderNetConfig rendernet;
  networks::DiscriminatorConfig discriminator;
};

struct DataConfig {
  std::string root;
  std::string train_pairs = "pairs_train.csv";
  std::string test_pairs = "pairs_test.csv";
  int image_size = 256;
};

struct BackboneConfig {
  std::string perceptual = "identity";  // "identity" or a TorchScript file
  std::string face = "identity:32";     // "identity[:size]" or "<file>[:size]"
  std::string lpips = "identity";
  std::string lpips_weights;  // text file, one line of channel weights per layer
};

struct LogConfig {
  int64_t log_every = 10;
  int64_t sample_every = 500;
  int64_t checkpoint_every = 1000;
};

struct RunConfig {
  ModelConfig model;
  losses::LossConfig loss;
  TrainConfig train;
  DataConfig data;
  BackboneConfig backbones;
  LogConfig logging;
  std::string run_dir = "runs/default";
};

/// Raw section -> key -> value table.
using ConfigTable = std::map<std::string, std::map<std::string, std::string>>;

ConfigTable parse_config_text(std::string_view text);
ConfigTable read_config_file(const std::string& path);

/// Overrides from NEURENDER_<SECTION>_<KEY> environment variables, e.g.
/// NEURENDER_TRAIN_LEARNING_RATE for [train] learning_rate.
void apply_env_overrides(ConfigTable& table, const std::vector<std::string>& environ_entries);
void apply_env_overrides(ConfigTable& table);

/// Applies "section.key=value" assignments.
void apply_assignments(ConfigTable& table, const std::vector<std::string>& assignments);

/// Builds a RunConfig from defaults plus `table`; unknown keys are errors.
RunConfig run_config_from_table(const ConfigTable& table);
ConfigTable to_table(const RunConfig& config);
std::string format_run_config(const RunConfig& config);
RunConfig parse_run_config(std::string_view text);

/// The atlas layout a model config refers to.
uvatlas::AtlasLayout resolve_layout(const ModelConfig& model);

}  // namespace neurender
