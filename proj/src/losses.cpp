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

#include "neurender/losses.hpp"

#include <cmath>

#include "neurender/error.hpp"

namespace neurender::losses {

namespace F = torch::nn::functional;

void LossConfig::validate() const {
  for (double w : {lambda_gan, lambda_vgg, lambda_face, lambda_tex}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("loss weights must be finite and non-negative");
    }
  }
  for (int p : face_parts) {
    if (p < 1 || p > uvatlas::kNumParts) {
      throw ConfigError("face part " + std::to_string(p) + " outside 1..24");
    }
  }
  if (face_crop_padding < 0.0) {
    throw ConfigError("face crop padding must be non-negative");
  }
}

torch::Tensor perceptual_loss(const torch::Tensor& generated, const torch::Tensor& target,
                              PerceptualBackbone& backbone) {
  if (generated.sizes() != target.sizes()) {
    throw ArgumentError("perceptual_loss: image sizes differ");
  }
  auto gen = backbone.activations(generated);
  std::vector<torch::Tensor> ref;
  {
    torch::NoGradGuard no_grad;
    ref = backbone.activations(target.detach());
  }
  if (gen.empty()) {
    throw ConfigError("perceptual_loss: backbone produced no layers");
  }
  auto loss = torch::zeros({}, generated.options());
  for (size_t j = 0; j < gen.size(); ++j) {
    loss = loss + (gen[j] - ref[j]).abs().mean();
  }
  return loss;
}

namespace {

torch::Tensor bce_over_scales(const std::vector<torch::Tensor>& logits, double label) {
  if (logits.empty()) {
    throw ArgumentError("adversarial loss: no logit maps");
  }
  auto total = torch::zeros({}, logits.front().options());
  for (const auto& l : logits) {
    total = total + F::binary_cross_entropy_with_logits(l, torch::full_like(l, label));
  }
  return total / static_cast<double>(logits.size());
}

}  // namespace

torch::Tensor adversarial_g_loss(const std::vector<torch::Tensor>& fake_logits) {
  return bce_over_scales(fake_logits, 1.0);
}

torch::Tensor adversarial_d_loss(const std::vector<torch::Tensor>& real_logits,
                                 const std::vector<torch::Tensor>& fake_logits) {
  return 0.5 * (bce_over_scales(real_logits, 1.0) + bce_over_scales(fake_logits, 0.0));
}

std::optional<CropBox> face_crop_box(const uvatlas::IuvMap& iuv, const LossConfig& config) {
  auto face = torch::zeros({iuv.height(), iuv.width()}, torch::kBool);
  for (int p : config.face_parts) {
    face.logical_or_(iuv.part.eq(p));
  }
  auto idx = face.nonzero();  // [K, 2] (row, col)
  if (idx.size(0) == 0) {
    return std::nullopt;
  }
  const auto rows = idx.select(1, 0);
  const auto cols = idx.select(1, 1);
  const double y0 = rows.min().item<int64_t>();
  const double y1 = rows.max().item<int64_t>() + 1;
  const double x0 = cols.min().item<int64_t>();
  const double x1 = cols.max().item<int64_t>() + 1;
  const double pad_x = (x1 - x0) * config.face_crop_padding;
  const double pad_y = (y1 - y0) * config.face_crop_padding;
  CropBox box;
  box.x0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(x0 - pad_x)));
  box.y0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(y0 - pad_y)));
  box.x1 = std::min<int64_t>(iuv.width(), static_cast<int64_t>(std::ceil(x1 + pad_x)));
  box.y1 = std::min<int64_t>(iuv.height(), static_cast<int64_t>(std::ceil(y1 + pad_y)));
  return box;
}

torch::Tensor face_identity_loss(const torch::Tensor& generated, const torch::Tensor& target,
                                 std::span<const uvatlas::IuvMap> target_iuvs, FaceEmbedder& embedder,
                                 const LossConfig& config) {
  if (generated.sizes() != target.sizes() || generated.dim() != 4) {
    throw ArgumentError("face_identity_loss: images must be N x 3 x H x W of equal size");
  }
  if (static_cast<int64_t>(target_iuvs.size()) != generated.size(0)) {
    throw ArgumentError("face_identity_loss: one IUV map per batch element required");
  }
  const int64_t size = embedder.input_size();
  auto crop = [&](const torch::Tensor& img, const CropBox& b) {
    auto c = img.slice(1, b.y0, b.y1).slice(2, b.x0, b.x1).unsqueeze(0);
    return F::interpolate(c, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>{size, size})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
  };
  auto total = torch::zeros({}, generated.options());
  for (int64_t n = 0; n < generated.size(0); ++n) {
    auto box = face_crop_box(target_iuvs[static_cast<size_t>(n)], config);
    if (!box) {
      continue;
    }
    auto gen_embed = embedder.embed(crop(generated[n], *box));
    torch::Tensor ref_embed;
    {
      torch::NoGradGuard no_grad;
      ref_embed = embedder.embed(crop(target[n].detach(), *box));
    }
    total = total + (gen_embed - ref_embed).abs().mean();
  }
  return total / static_cast<double>(generated.size(0));
}

torch::Tensor inpainting_loss(const torch::Tensor& atlas, const uvatlas::PartialTexture& source,
                              const uvatlas::PartialTexture& target) {
  if (atlas.dim() < 3 || atlas.size(-3) < 3) {
    throw ArgumentError("inpainting_loss: atlas needs at least 3 channels");
  }
  auto colour = atlas.narrow(-3, 0, 3);
  auto term = [&](const uvatlas::PartialTexture& t) {
    if (t.colour.sizes() != colour.sizes()) {
      throw ArgumentError("inpainting_loss: texture does not match the atlas");
    }
    auto mask = t.mask.unsqueeze(-3).to(colour.scalar_type());
    const double observed = t.mask.sum().item<double>();
    if (observed == 0.0) {
      return torch::zeros({}, colour.options());
    }
    return ((colour - t.colour.to(colour.scalar_type())).abs() * mask).sum() / (3.0 * observed);
  };
  return term(source) + term(target);
}

torch::Tensor total_generator_loss(const GeneratorTerms& terms, const LossConfig& config) {
  return config.lambda_vgg * terms.perceptual + config.lambda_face * terms.face + config.lambda_tex * terms.tex +
         config.lambda_gan * terms.adv;
}

double total_generator_loss(double perceptual, double face, double tex, double adv, const LossConfig& config) {
  return config.lambda_vgg * perceptual + config.lambda_face * face + config.lambda_tex * tex +
         config.lambda_gan * adv;
}

}  // namespace neurender::losses
