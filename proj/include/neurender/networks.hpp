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

#include <vector>

#include <torch/torch.h>

namespace neurender::networks {

struct FeatureNetConfig {
  int in_channels = 3;
  bool mask_channel = false;  // append the visibility mask as an extra input plane
  int out_channels = 16;
  int depth = 4;
  int base_width = 64;
  int max_width = 512;

  int input_channels() const { return in_channels + (mask_channel ? 1 : 0); }
};

struct RenderNetConfig {
  int in_channels = 16;
  int out_channels = 3;
  int down_blocks = 3;  // up blocks mirror the down blocks
  int residual_blocks = 6;
  int base_width = 64;
  int max_width = 512;
};

struct DiscriminatorConfig {
  int in_channels = 19;  // condition channels + 3 image channels
  int scales = 3;
  int layers = 3;
  int base_width = 64;
  int max_width = 512;
};

/// Zero-mean Gaussian (std 0.02) conv weights and zero biases.
void init_weights(torch::nn::Module& module);

// U-Net: down blocks of two 3x3 convolutions and a 2x max-pool, up blocks of
// a 2x bilinear upsample, skip concatenation and two 3x3 convolutions.
class FeatureNetImpl : public torch::nn::Module {
 public:
  explicit FeatureNetImpl(const FeatureNetConfig& config);

  torch::Tensor forward(const torch::Tensor& texture);

  struct Output {
    torch::Tensor atlas;
    torch::Tensor bottleneck;  // activation after the last pooling step
  };
  Output forward_with_bottleneck(const torch::Tensor& texture);

  const FeatureNetConfig& config() const { return config_; }

 private:
  FeatureNetConfig config_;
  torch::nn::ModuleList down_{nullptr};
  torch::nn::ModuleList up_{nullptr};
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(FeatureNet);

class ResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ResidualBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(ResidualBlock);

/// Translates a feature image into a colour image in [-1, 1] of the same size.
class RenderNetImpl : public torch::nn::Module {
 public:
  explicit RenderNetImpl(const RenderNetConfig& config);

  torch::Tensor forward(const torch::Tensor& features);

  const RenderNetConfig& config() const { return config_; }
  int residual_block_count() const { return static_cast<int>(residual_->size()); }
  torch::nn::Conv2d& final_conv() { return final_; }

 private:
  RenderNetConfig config_;
  torch::nn::Sequential encoder_{nullptr};
  torch::nn::Sequential residual_{nullptr};
  torch::nn::Sequential decoder_{nullptr};
  torch::nn::Conv2d final_{nullptr};
};
TORCH_MODULE(RenderNet);

/// A single-scale patch discriminator producing a map of logits.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  PatchDiscriminatorImpl(int in_channels, int layers, int base_width, int max_width);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential model_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

/// Patch discriminators on successively 2x average-pooled copies of
/// cat(condition, image).
class MultiscaleDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit MultiscaleDiscriminatorImpl(const DiscriminatorConfig& config);

  /// Logit maps, finest scale first.
  std::vector<torch::Tensor> forward(const torch::Tensor& condition, const torch::Tensor& image);

  /// The per-scale inputs the patch discriminators see.
  std::vector<torch::Tensor> scale_inputs(const torch::Tensor& condition, const torch::Tensor& image) const;

  const DiscriminatorConfig& config() const { return config_; }

 private:
  DiscriminatorConfig config_;
  torch::nn::ModuleList scales_{nullptr};
};
TORCH_MODULE(MultiscaleDiscriminator);

}  // namespace neurender::networks
