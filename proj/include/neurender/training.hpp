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

// End-to-end training of FeatureNet and RenderNet against the multiscale
// discriminator, including the ablation variants.

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "neurender/backbones.hpp"
#include "neurender/config.hpp"
#include "neurender/losses.hpp"
#include "neurender/networks.hpp"
#include "neurender/sampling.hpp"
#include "neurender/uvatlas.hpp"

namespace neurender::training {

/// Two images of the same person in different poses.
struct TrainPair {
  torch::Tensor source_image;  // [3, H, W] in [-1, 1]
  torch::Tensor target_image;
  uvatlas::IuvMap source_iuv;
  uvatlas::IuvMap target_iuv;
  std::string person_id;
};

/// What a variant feeds RenderNet and which losses it trains with.
struct PipelineSpec {
  Variant variant = Variant::kFull;
  bool uses_featurenet = true;
  int featurenet_out_channels = 16;
  int rendernet_in_channels = 16;
  bool pose_condition = false;  // warp_cond: append the encoded target pose
  bool texture_loss = true;     // L_tex contributes to the generator objective
  bool two_phase = false;       // ip: inpainting net trained first, then frozen

  int discriminator_in_channels() const { return rendernet_in_channels + 3; }
};

/// Resolves a variant against the configured networks. Channel counts of
/// `model` that depend on the variant are overwritten.
PipelineSpec build_variant_pipeline(Variant variant, ModelConfig& model);

/// Applies variant-dependent settings to a full run configuration (channel
/// counts; no_int also zeroes lambda_tex) and validates it.
RunConfig resolve_run_config(RunConfig config);

/// The target pose as a 3-channel image (part / 24, u, v).
torch::Tensor encode_pose(const uvatlas::IuvMap& iuv);

/// A pair with its non-learned inputs precomputed.
struct PreparedPair {
  TrainPair pair;
  uvatlas::PartialTexture source_texture;
  uvatlas::PartialTexture target_texture;
};

PreparedPair prepare_pair(TrainPair pair, const uvatlas::AtlasLookup& lookup);

/// A stacked batch of prepared pairs.
struct Batch {
  torch::Tensor source_images;  // [N, 3, H, W]
  torch::Tensor target_images;
  std::vector<uvatlas::IuvMap> source_iuvs;
  std::vector<uvatlas::IuvMap> target_iuvs;
  uvatlas::PartialTexture source_texture;  // colour [N, 3, H_a, W_a], mask [N, H_a, W_a]
  uvatlas::PartialTexture target_texture;
  sampling::SamplingGrid target_grid;

  int64_t size() const { return source_images.size(0); }
};

Batch make_batch(std::span<const PreparedPair* const> pairs, const uvatlas::AtlasLookup& lookup);
Batch make_batch(const PreparedPair& pair, const uvatlas::AtlasLookup& lookup);

/// Directed training pairs: every pair appears as (A -> B) and (B -> A).
class PairDataset {
 public:
  PairDataset(const std::vector<TrainPair>& pairs, const uvatlas::AtlasLookup& lookup, bool both_directions = true);

  size_t size() const { return items_.size(); }
  const PreparedPair& operator[](size_t i) const { return items_[i]; }

  /// Indices of the batch used at `step`: each epoch is a fresh permutation
  /// seeded by (seed, epoch), so any step's batch is reproducible without
  /// sampler state.
  std::vector<size_t> batch_indices(int64_t step, int batch_size, uint64_t seed) const;

 private:
  struct CachedPermutation {
    uint64_t seed;
    int64_t epoch;
    std::vector<size_t> order;
  };
  std::vector<PreparedPair> items_;
  mutable std::optional<CachedPermutation> cached_perm_;
};

/// Named loss scalars of one step.
struct StepLosses {
  double perceptual = 0.0;
  double adv = 0.0;
  double face = 0.0;
  double tex = 0.0;
  double total_g = 0.0;
  double d = 0.0;

  static constexpr std::array<const char*, 6> kNames{"L_p", "L_adv", "L_face", "L_tex", "L_G", "L_D"};
  std::array<double, 6> values() const { return {perceptual, adv, face, tex, total_g, d}; }
};

/// Networks, optimizers and counters of a training run.
class TrainState {
 public:
  /// Seeds torch with train.seed and builds every component. The config is
  /// passed through resolve_run_config first. `layout` replaces the layout
  /// the model config refers to (checkpoints carry their own).
  explicit TrainState(const RunConfig& config, const std::optional<uvatlas::AtlasLayout>& layout = std::nullopt);

  const RunConfig& config() const { return config_; }
  const PipelineSpec& spec() const { return spec_; }
  const uvatlas::AtlasLookup& lookup() const { return lookup_; }

  networks::FeatureNet& featurenet() { return featurenet_; }
  networks::RenderNet& rendernet() { return rendernet_; }
  networks::MultiscaleDiscriminator& discriminator() { return discriminator_; }
  torch::optim::Adam& generator_optimizer() { return *opt_g_; }
  torch::optim::Adam& discriminator_optimizer() { return *opt_d_; }

  int64_t step() const { return step_; }
  void set_step(int64_t step) { step_ = step; }

  /// Exponential moving averages of the StepLosses values.
  std::array<double, 6>& running_losses() { return running_; }
  const std::array<double, 6>& running_losses() const { return running_; }

  /// Fixed random [3, d] matrix used to preview d-channel feature images.
  const torch::Tensor& preview_projection() const { return preview_projection_; }
  void set_preview_projection(torch::Tensor p) { preview_projection_ = std::move(p); }

  /// Parameters updated by the generator step.
  std::vector<torch::Tensor> generator_parameters();

  /// Pluggable frozen networks; identity stubs unless replaced.
  std::shared_ptr<losses::PerceptualBackbone> perceptual_backbone;
  std::shared_ptr<losses::FaceEmbedder> face_embedder;

 private:
  RunConfig config_;
  PipelineSpec spec_;
  uvatlas::AtlasLookup lookup_;
  networks::FeatureNet featurenet_{nullptr};
  networks::RenderNet rendernet_{nullptr};
  networks::MultiscaleDiscriminator discriminator_{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_g_;
  std::unique_ptr<torch::optim::Adam> opt_d_;
  int64_t step_ = 0;
  std::array<double, 6> running_{};
  torch::Tensor preview_projection_;
};

/// What FeatureNet (or the warp baselines' raw texture) provides for rendering.
/// [N, C, H_a, W_a].
torch::Tensor encode_source(TrainState& state, const uvatlas::PartialTexture& source_texture);

/// Renders an encoding through target poses into RenderNet's input.
torch::Tensor generator_input(TrainState& state, const torch::Tensor& encoding, const sampling::SamplingGrid& grid,
                              std::span<const uvatlas::IuvMap> target_iuvs);

struct PipelineOutput {
  torch::Tensor generated;      // [N, 3, H, W]
  torch::Tensor atlas;          // FeatureNet output; undefined for warp variants
  torch::Tensor feature_image;  // RenderNet input
};

/// g(r(f(T_s), P_t)) for a batch, keeping the intermediates.
PipelineOutput forward_pipeline(const Batch& batch, TrainState& state);

/// One generator update followed by one discriminator update. The
/// discriminator only trains while lambda_gan > 0. Throws NumericalError
/// naming the first non-finite term.
StepLosses train_step(const Batch& batch, TrainState& state);

struct LoopOptions {
  std::filesystem::path run_dir;
  int64_t log_every = 10;
  int64_t checkpoint_every = 1000;
  int64_t sample_every = 500;
  int64_t until_step = -1;  // stop early (exclusive bound on the step counter); -1 = total_steps
  std::function<void(TrainState&, const Batch&, const PipelineOutput&)> on_sample;
  std::function<void(int64_t step, const StepLosses&)> on_log;
};

/// Runs train_step until total_steps, appending `losses.csv` rows every
/// log_every steps and writing `ckpt_<step>` (plus `ckpt_latest`) files.
void run_training(TrainState& state, const PairDataset& data, const LoopOptions& options);

// Checkpoint container: torch archive with named parameter arrays, optimizer
// moments, the serialized run configuration and atlas layout.
inline constexpr int64_t kCheckpointVersion = 1;

void save_checkpoint(TrainState& state, const std::filesystem::path& path);
/// Restores a checkpoint. When `expected` is given, model-defining settings
/// must agree with it; mismatches are reported by name.
std::unique_ptr<TrainState> load_checkpoint(const std::filesystem::path& path,
                                            const RunConfig* expected = nullptr);

/// Writes `ckpt_<step>` into `run_dir` and points `ckpt_latest` at it.
std::filesystem::path write_run_checkpoint(TrainState& state, const std::filesystem::path& run_dir);

}  // namespace neurender::training
