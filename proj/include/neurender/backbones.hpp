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

// Frozen feature extractors used by the perceptual, face identity and
// LPIPS terms. Anything that maps images to feature maps can be plugged in;
// TorchScript files are the supported on-disk form.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace neurender::losses {

class PerceptualBackbone {
 public:
  virtual ~PerceptualBackbone() = default;
  /// Feature maps for an N x 3 x H x W batch in [-1, 1], one per layer.
  virtual std::vector<torch::Tensor> activations(const torch::Tensor& images) = 0;
  virtual std::string name() const = 0;
};

class FaceEmbedder {
 public:
  virtual ~FaceEmbedder() = default;
  /// Embeddings for an N x 3 x S x S batch of face crops, S = input_size().
  virtual torch::Tensor embed(const torch::Tensor& crops) = 0;
  virtual int64_t input_size() const = 0;
  virtual std::string name() const = 0;
};

/// Returns the image itself as its only activation.
class IdentityBackbone final : public PerceptualBackbone {
 public:
  std::vector<torch::Tensor> activations(const torch::Tensor& images) override { return {images}; }
  std::string name() const override { return "identity"; }
};

/// Returns the crop itself as the embedding.
class CropIdentityEmbedder final : public FaceEmbedder {
 public:
  explicit CropIdentityEmbedder(int64_t input_size = 32) : input_size_(input_size) {}
  torch::Tensor embed(const torch::Tensor& crops) override { return crops; }
  int64_t input_size() const override { return input_size_; }
  std::string name() const override { return "crop-identity"; }

 private:
  int64_t input_size_;
};

/// A scripted network whose forward returns a Dict[str, Tensor], a list or
/// tuple of tensors, or a single tensor. `layers` picks dictionary keys (or
/// list indices written as integers); empty means every returned tensor.
/// With `imagenet_normalize`, inputs are mapped from [-1, 1] to ImageNet
/// mean/std normalized values first.
class TorchScriptBackbone final : public PerceptualBackbone {
 public:
  TorchScriptBackbone(const std::filesystem::path& path, std::vector<std::string> layers,
                      bool imagenet_normalize = true);
  ~TorchScriptBackbone() override;
  std::vector<torch::Tensor> activations(const torch::Tensor& images) override;
  std::string name() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class TorchScriptEmbedder final : public FaceEmbedder {
 public:
  TorchScriptEmbedder(const std::filesystem::path& path, int64_t input_size);
  ~TorchScriptEmbedder() override;
  torch::Tensor embed(const torch::Tensor& crops) override;
  int64_t input_size() const override { return input_size_; }
  std::string name() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int64_t input_size_;
};

/// Builds a backbone from a spec string: "identity" or a TorchScript path.
std::shared_ptr<PerceptualBackbone> make_backbone(const std::string& spec, const std::vector<std::string>& layers);
/// "identity[:size]" or "<path>[:size]".
std::shared_ptr<FaceEmbedder> make_embedder(const std::string& spec);

}  // namespace neurender::losses
