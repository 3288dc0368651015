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

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "neurender/backbones.hpp"
#include "neurender/uvatlas.hpp"

namespace neurender::losses {

struct LossConfig {
  double lambda_gan = 1.0;
  double lambda_vgg = 10.0;
  double lambda_face = 5.0;
  double lambda_tex = 1.0;
  std::vector<std::string> perceptual_layers{"relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1"};
  std::set<int> face_parts{23, 24};
  double face_crop_padding = 0.15;  // fraction of the head box added on each side

  /// Throws ConfigError for negative weights or out-of-range face parts.
  void validate() const;
};

/// Sum over backbone layers of the mean absolute activation difference.
torch::Tensor perceptual_loss(const torch::Tensor& generated, const torch::Tensor& target,
                              PerceptualBackbone& backbone);

/// Binary cross-entropy with logits against label 1, averaged over patches
/// and then over scales.
torch::Tensor adversarial_g_loss(const std::vector<torch::Tensor>& fake_logits);

/// Half the sum of the real (label 1) and fake (label 0) cross-entropies,
/// each averaged over patches and then over scales.
torch::Tensor adversarial_d_loss(const std::vector<torch::Tensor>& real_logits,
                                 const std::vector<torch::Tensor>& fake_logits);

/// Pixel rectangle [x0, x1) x [y0, y1).
struct CropBox {
  int64_t x0 = 0;
  int64_t y0 = 0;
  int64_t x1 = 0;
  int64_t y1 = 0;
};

/// Tight box around the face parts of `iuv`, padded on each side and clipped
/// to the image; nullopt when no face pixel exists.
std::optional<CropBox> face_crop_box(const uvatlas::IuvMap& iuv, const LossConfig& config);

/// Mean absolute embedding difference of the face crops, averaged over the
/// batch. Samples without face pixels contribute 0.
torch::Tensor face_identity_loss(const torch::Tensor& generated, const torch::Tensor& target,
                                 std::span<const uvatlas::IuvMap> target_iuvs, FaceEmbedder& embedder,
                                 const LossConfig& config);

/// Masked mean L1 between the first three atlas channels and each partial
/// texture, summed over source and target. Empty masks contribute 0.
/// Works on single ([d, H, W]) or batched ([N, d, H, W]) inputs.
torch::Tensor inpainting_loss(const torch::Tensor& atlas, const uvatlas::PartialTexture& source,
                              const uvatlas::PartialTexture& target);

struct GeneratorTerms {
  torch::Tensor perceptual;
  torch::Tensor face;
  torch::Tensor tex;
  torch::Tensor adv;
};

torch::Tensor total_generator_loss(const GeneratorTerms& terms, const LossConfig& config);
double total_generator_loss(double perceptual, double face, double tex, double adv, const LossConfig& config);

}  // namespace neurender::losses
