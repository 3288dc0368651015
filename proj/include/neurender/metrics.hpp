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

// Image quality metrics and the pair-list evaluation report.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "neurender/backbones.hpp"
#include "neurender/data_io.hpp"
#include "neurender/training.hpp"

namespace neurender::metrics {

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 2.0;  // images in [-1, 1]
};

/// Mean structural similarity over all valid window positions, computed per
/// channel and averaged. Accepts [C, H, W] or [N, C, H, W] (mean over N).
double ssim(const torch::Tensor& a, const torch::Tensor& b, const SsimOptions& options = {});

/// Per-layer, per-channel linear weights of the perceptual distance.
struct LpipsWeights {
  std::vector<torch::Tensor> layers;  // float64 [C_l]

  /// All-ones weights matching the backbone's activations at `size` x `size`.
  static LpipsWeights unit(losses::PerceptualBackbone& backbone, int64_t size);
  /// Text file with one whitespace-separated line of weights per layer.
  static LpipsWeights read(const std::filesystem::path& path);
};

/// Sum over layers of the weighted, spatially averaged squared difference of
/// channel-unit-normalised activations. Throws ConfigError when the weights
/// do not cover every backbone layer.
double lpips(const torch::Tensor& a, const torch::Tensor& b, losses::PerceptualBackbone& backbone,
             const LpipsWeights& weights);

struct PairScore {
  std::string person_id;
  std::string source_image;
  std::string target_image;
  bool ok = false;
  double ssim = 0.0;
  double lpips = 0.0;
  std::string error;
};

struct EvalReport {
  std::vector<PairScore> pairs;

  size_t count() const;    // scored pairs
  size_t skipped() const;  // pairs excluded because of missing or bad files
  /// Means over scored pairs; empty when nothing was scored.
  std::optional<double> mean_ssim() const;
  std::optional<double> mean_lpips() const;

  void write_csv(const std::filesystem::path& path) const;
  /// Table-style text block with the published reference row for context.
  std::string summary() const;
};

inline constexpr double kReferenceSsim = 0.768;
inline constexpr double kReferenceLpips = 0.164;

/// Maps a loaded pair to the generated target image [3, H, W].
using Generator = std::function<torch::Tensor(const training::TrainPair&)>;

EvalReport evaluate_pairs(const std::vector<data_io::PairRecord>& rows, const std::filesystem::path& root,
                          int image_size, const Generator& generate, losses::PerceptualBackbone& backbone,
                          const LpipsWeights& weights);

}  // namespace neurender::metrics
