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

#include "neurender/networks.hpp"

#include <algorithm>

#include "neurender/error.hpp"

namespace neurender::networks {

namespace nn = torch::nn;

namespace {

int width_at(int base, int level, int cap) { return std::min(base << level, cap); }

nn::Conv2d conv3x3(int in, int out) { return nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1)); }

nn::InstanceNorm2d instance_norm(int channels) { return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels)); }

// Two 3x3 convolutions with ReLU; the network's very first convolution is
// left unnormalized.
nn::Sequential double_conv(int in, int out, bool normalize_first) {
  nn::Sequential seq;
  seq->push_back(conv3x3(in, out));
  if (normalize_first) {
    seq->push_back(instance_norm(out));
  }
  seq->push_back(nn::ReLU());
  seq->push_back(conv3x3(out, out));
  seq->push_back(instance_norm(out));
  seq->push_back(nn::ReLU());
  return seq;
}

void check_divisible(const torch::Tensor& x, int factor, const char* who) {
  if (x.dim() != 4) {
    throw ArgumentError(std::string(who) + ": expected an N x C x H x W tensor");
  }
  if (x.size(2) % factor != 0 || x.size(3) % factor != 0) {
    throw ConfigError(std::string(who) + ": spatial size " + std::to_string(x.size(2)) + "x" +
                      std::to_string(x.size(3)) + " is not divisible by " + std::to_string(factor));
  }
}

}  // namespace

void init_weights(nn::Module& module) {
  torch::NoGradGuard no_grad;
  for (auto& m : module.modules(/*include_self=*/false)) {
    if (auto* conv = m->as<nn::Conv2d>()) {
      nn::init::normal_(conv->weight, 0.0, 0.02);
      if (conv->bias.defined()) {
        nn::init::zeros_(conv->bias);
      }
    } else if (auto* convt = m->as<nn::ConvTranspose2d>()) {
      nn::init::normal_(convt->weight, 0.0, 0.02);
      if (convt->bias.defined()) {
        nn::init::zeros_(convt->bias);
      }
    }
  }
}

FeatureNetImpl::FeatureNetImpl(const FeatureNetConfig& config) : config_(config) {
  if (config.depth < 1 || config.base_width < 1 || config.out_channels < 1 || config.in_channels < 1) {
    throw ConfigError("FeatureNet: depth, widths and channel counts must be positive");
  }
  down_ = register_module("down", nn::ModuleList());
  up_ = register_module("up", nn::ModuleList());

  std::vector<int> widths;
  int in = config.input_channels();
  for (int k = 0; k < config.depth; ++k) {
    const int w = width_at(config.base_width, k, config.max_width);
    down_->push_back(double_conv(in, w, /*normalize_first=*/k > 0));
    widths.push_back(w);
    in = w;
  }
  int below = widths.back();
  for (int j = 0; j < config.depth; ++j) {
    const int level = config.depth - 1 - j;
    const int skip = widths[static_cast<size_t>(level)];
    const int out = level > 0 ? widths[static_cast<size_t>(level - 1)] : config.base_width;
    up_->push_back(double_conv(below + skip, out, true));
    below = out;
  }
  head_ = register_module("head", nn::Conv2d(nn::Conv2dOptions(below, config.out_channels, 1)));
  init_weights(*this);
}

FeatureNetImpl::Output FeatureNetImpl::forward_with_bottleneck(const torch::Tensor& texture) {
  check_divisible(texture, 1 << config_.depth, "FeatureNet");
  if (texture.size(1) != config_.input_channels()) {
    throw ArgumentError("FeatureNet: expected " + std::to_string(config_.input_channels()) + " input channels, got " +
                        std::to_string(texture.size(1)));
  }
  std::vector<torch::Tensor> skips;
  auto x = texture;
  for (auto& block : *down_) {
    x = block->as<nn::Sequential>()->forward(x);
    skips.push_back(x);
    x = torch::max_pool2d(x, 2);
  }
  auto bottleneck = x;
  for (size_t j = 0; j < up_->size(); ++j) {
    x = nn::functional::interpolate(x, nn::functional::InterpolateFuncOptions()
                                           .scale_factor(std::vector<double>{2.0, 2.0})
                                           .mode(torch::kBilinear)
                                           .align_corners(false));
    x = torch::cat({x, skips[skips.size() - 1 - j]}, 1);
    x = up_[j]->as<nn::Sequential>()->forward(x);
  }
  return {head_->forward(x), bottleneck};
}

torch::Tensor FeatureNetImpl::forward(const torch::Tensor& texture) { return forward_with_bottleneck(texture).atlas; }

ResidualBlockImpl::ResidualBlockImpl(int channels) {
  body_ = register_module(
      "body", nn::Sequential(nn::ReflectionPad2d(1), nn::Conv2d(nn::Conv2dOptions(channels, channels, 3)),
                             instance_norm(channels), nn::ReLU(), nn::ReflectionPad2d(1),
                             nn::Conv2d(nn::Conv2dOptions(channels, channels, 3)), instance_norm(channels)));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) { return x + body_->forward(x); }

RenderNetImpl::RenderNetImpl(const RenderNetConfig& config) : config_(config) {
  if (config.in_channels < 1 || config.down_blocks < 0 || config.residual_blocks < 0 || config.base_width < 1) {
    throw ConfigError("RenderNet: invalid configuration");
  }
  encoder_ = register_module("encoder", nn::Sequential());
  residual_ = register_module("residual", nn::Sequential());
  decoder_ = register_module("decoder", nn::Sequential());

  encoder_->push_back(nn::ReflectionPad2d(3));
  encoder_->push_back(nn::Conv2d(nn::Conv2dOptions(config.in_channels, config.base_width, 7)));
  encoder_->push_back(nn::ReLU());
  for (int k = 1; k <= config.down_blocks; ++k) {
    const int in = width_at(config.base_width, k - 1, config.max_width);
    const int out = width_at(config.base_width, k, config.max_width);
    encoder_->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(2).padding(1)));
    encoder_->push_back(instance_norm(out));
    encoder_->push_back(nn::ReLU());
  }
  const int inner = width_at(config.base_width, config.down_blocks, config.max_width);
  for (int r = 0; r < config.residual_blocks; ++r) {
    residual_->push_back(ResidualBlock(inner));
  }
  for (int k = config.down_blocks; k >= 1; --k) {
    const int in = width_at(config.base_width, k, config.max_width);
    const int out = width_at(config.base_width, k - 1, config.max_width);
    decoder_->push_back(
        nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 3).stride(2).padding(1).output_padding(1)));
    decoder_->push_back(instance_norm(out));
    decoder_->push_back(nn::ReLU());
  }
  decoder_->push_back(nn::ReflectionPad2d(3));
  final_ = register_module("final", nn::Conv2d(nn::Conv2dOptions(config.base_width, config.out_channels, 7)));
  init_weights(*this);
}

torch::Tensor RenderNetImpl::forward(const torch::Tensor& features) {
  check_divisible(features, 1 << config_.down_blocks, "RenderNet");
  if (features.size(1) != config_.in_channels) {
    throw ArgumentError("RenderNet: expected " + std::to_string(config_.in_channels) + " input channels, got " +
                        std::to_string(features.size(1)));
  }
  auto x = encoder_->forward(features);
  if (!residual_->is_empty()) {
    x = residual_->forward(x);
  }
  x = decoder_->forward(x);
  return torch::tanh(final_->forward(x));
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(int in_channels, int layers, int base_width, int max_width) {
  auto conv4 = [](int in, int out, int stride) {
    return nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(stride).padding(2));
  };
  auto lrelu = [] { return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)); };
  model_ = register_module("model", nn::Sequential());
  model_->push_back(conv4(in_channels, base_width, 2));
  model_->push_back(lrelu());
  int width = base_width;
  for (int n = 1; n < layers; ++n) {
    const int next = std::min(width * 2, max_width);
    model_->push_back(conv4(width, next, 2));
    model_->push_back(instance_norm(next));
    model_->push_back(lrelu());
    width = next;
  }
  const int next = std::min(width * 2, max_width);
  model_->push_back(conv4(width, next, 1));
  model_->push_back(instance_norm(next));
  model_->push_back(lrelu());
  model_->push_back(conv4(next, 1, 1));
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) { return model_->forward(x); }

MultiscaleDiscriminatorImpl::MultiscaleDiscriminatorImpl(const DiscriminatorConfig& config) : config_(config) {
  if (config.scales < 1 || config.layers < 1 || config.in_channels < 1) {
    throw ConfigError("Discriminator: invalid configuration");
  }
  scales_ = register_module("scales", nn::ModuleList());
  for (int s = 0; s < config.scales; ++s) {
    scales_->push_back(PatchDiscriminator(config.in_channels, config.layers, config.base_width, config.max_width));
  }
  init_weights(*this);
}

std::vector<torch::Tensor> MultiscaleDiscriminatorImpl::scale_inputs(const torch::Tensor& condition,
                                                                     const torch::Tensor& image) const {
  if (condition.dim() != 4 || image.dim() != 4 || condition.size(0) != image.size(0) ||
      condition.size(2) != image.size(2) || condition.size(3) != image.size(3)) {
    throw ArgumentError("Discriminator: condition and image must share batch and spatial size");
  }
  auto x = torch::cat({condition, image}, 1);
  if (x.size(1) != config_.in_channels) {
    throw ArgumentError("Discriminator: expected " + std::to_string(config_.in_channels) +
                        " concatenated channels, got " + std::to_string(x.size(1)));
  }
  std::vector<torch::Tensor> inputs{x};
  for (int s = 1; s < config_.scales; ++s) {
    inputs.push_back(torch::avg_pool2d(inputs.back(), 2));
  }
  return inputs;
}

std::vector<torch::Tensor> MultiscaleDiscriminatorImpl::forward(const torch::Tensor& condition,
                                                                const torch::Tensor& image) {
  auto inputs = scale_inputs(condition, image);
  std::vector<torch::Tensor> logits;
  for (size_t s = 0; s < inputs.size(); ++s) {
    logits.push_back(scales_[s]->as<PatchDiscriminator>()->forward(inputs[s]));
  }
  return logits;
}

}  // namespace neurender::networks
