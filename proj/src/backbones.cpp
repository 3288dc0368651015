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

#include "neurender/backbones.hpp"

#include <torch/script.h>

#include "neurender/error.hpp"

namespace neurender::losses {

namespace {

torch::jit::Module load_frozen(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("backbone file not found: " + path.string());
  }
  torch::jit::Module module;
  try {
    module = torch::jit::load(path.string());
  } catch (const c10::Error& e) {
    throw ConfigError("cannot load TorchScript module " + path.string() + ": " + e.what_without_backtrace());
  }
  module.eval();
  for (auto p : module.parameters()) {
    p.requires_grad_(false);
  }
  return module;
}

std::vector<torch::Tensor> unpack(const c10::IValue& out, const std::vector<std::string>& layers) {
  std::vector<torch::Tensor> all;
  if (out.isTensor()) {
    all.push_back(out.toTensor());
  } else if (out.isTensorList()) {
    for (const auto& t : out.toTensorVector()) {
      all.push_back(t);
    }
  } else if (out.isList() || out.isTuple()) {
    auto elems = out.isList() ? out.toListRef().vec() : out.toTupleRef().elements().vec();
    for (const auto& e : elems) {
      all.push_back(e.toTensor());
    }
  } else if (out.isGenericDict()) {
    auto dict = out.toGenericDict();
    if (layers.empty()) {
      for (const auto& kv : dict) {
        all.push_back(kv.value().toTensor());
      }
      return all;
    }
    std::vector<torch::Tensor> picked;
    for (const auto& tag : layers) {
      auto it = dict.find(tag);
      if (it == dict.end()) {
        throw ConfigError("backbone does not produce layer '" + tag + "'");
      }
      picked.push_back(it->value().toTensor());
    }
    return picked;
  } else {
    throw ConfigError("backbone returned an unsupported value");
  }
  if (layers.empty()) {
    return all;
  }
  std::vector<torch::Tensor> picked;
  for (const auto& tag : layers) {
    size_t idx = 0;
    try {
      idx = std::stoul(tag);
    } catch (const std::exception&) {
      throw ConfigError("backbone returns a list; layer tag '" + tag + "' must be an index");
    }
    if (idx >= all.size()) {
      throw ConfigError("backbone layer index " + tag + " out of range");
    }
    picked.push_back(all[idx]);
  }
  return picked;
}

}  // namespace

struct TorchScriptBackbone::Impl {
  torch::jit::Module module;
  std::vector<std::string> layers;
  bool imagenet_normalize;
  std::string path;
};

TorchScriptBackbone::TorchScriptBackbone(const std::filesystem::path& path, std::vector<std::string> layers,
                                         bool imagenet_normalize)
    : impl_(std::make_unique<Impl>(Impl{load_frozen(path), std::move(layers), imagenet_normalize, path.string()})) {}

TorchScriptBackbone::~TorchScriptBackbone() = default;

std::vector<torch::Tensor> TorchScriptBackbone::activations(const torch::Tensor& images) {
  auto x = images;
  if (impl_->imagenet_normalize) {
    auto mean = torch::tensor({0.485, 0.456, 0.406}, images.options()).view({1, 3, 1, 1});
    auto std = torch::tensor({0.229, 0.224, 0.225}, images.options()).view({1, 3, 1, 1});
    x = ((images + 1.0) * 0.5 - mean) / std;
  }
  return unpack(impl_->module.forward({x}), impl_->layers);
}

std::string TorchScriptBackbone::name() const { return impl_->path; }

struct TorchScriptEmbedder::Impl {
  torch::jit::Module module;
  std::string path;
};

TorchScriptEmbedder::TorchScriptEmbedder(const std::filesystem::path& path, int64_t input_size)
    : impl_(std::make_unique<Impl>(Impl{load_frozen(path), path.string()})), input_size_(input_size) {}

TorchScriptEmbedder::~TorchScriptEmbedder() = default;

torch::Tensor TorchScriptEmbedder::embed(const torch::Tensor& crops) {
  auto out = impl_->module.forward({crops});
  if (!out.isTensor()) {
    throw ConfigError("face embedder must return a tensor");
  }
  return out.toTensor();
}

std::string TorchScriptEmbedder::name() const { return impl_->path; }

std::shared_ptr<PerceptualBackbone> make_backbone(const std::string& spec, const std::vector<std::string>& layers) {
  if (spec.empty() || spec == "identity") {
    return std::make_shared<IdentityBackbone>();
  }
  return std::make_shared<TorchScriptBackbone>(spec, layers);
}

std::shared_ptr<FaceEmbedder> make_embedder(const std::string& spec) {
  std::string path = spec;
  int64_t size = 32;
  if (auto colon = spec.rfind(':'); colon != std::string::npos) {
    try {
      size = std::stoll(spec.substr(colon + 1));
      path = spec.substr(0, colon);
    } catch (const std::exception&) {
      throw ConfigError("face embedder spec '" + spec + "': size after ':' must be an integer");
    }
  }
  if (size <= 0) {
    throw ConfigError("face embedder input size must be positive");
  }
  if (path.empty() || path == "identity") {
    return std::make_shared<CropIdentityEmbedder>(size);
  }
  return std::make_shared<TorchScriptEmbedder>(path, size);
}

}  // namespace neurender::losses
