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

// Shared fixtures for the unit and acceptance tests.

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <torch/torch.h>

#include "neurender/config.hpp"
#include "neurender/uvatlas.hpp"

namespace neurender::testing {

/// Directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("neurender_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random IUV map; each pixel is foreground with probability `fg`.
inline uvatlas::IuvMap random_iuv(std::mt19937_64& rng, int64_t h, int64_t w, double fg = 0.7) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> part(1, uvatlas::kNumParts);
  auto iuv = uvatlas::IuvMap::background(h, w);
  auto p = iuv.part.accessor<uint8_t, 2>();
  auto u = iuv.u.accessor<float, 2>();
  auto v = iuv.v.accessor<float, 2>();
  for (int64_t i = 0; i < h; ++i) {
    for (int64_t j = 0; j < w; ++j) {
      if (unit(rng) < fg) {
        p[i][j] = static_cast<uint8_t>(part(rng));
        u[i][j] = static_cast<float>(unit(rng));
        v[i][j] = static_cast<float>(unit(rng));
      }
    }
  }
  return iuv;
}

inline torch::Tensor random_image(std::mt19937_64& rng, int64_t c, int64_t h, int64_t w) {
  std::uniform_real_distribution<float> d(-1.0F, 1.0F);
  auto t = torch::empty({c, h, w});
  auto* data = t.data_ptr<float>();
  for (int64_t i = 0; i < t.numel(); ++i) {
    data[i] = d(rng);
  }
  return t;
}

/// Small networks on 64 x 64 images with a 64 x 64 atlas and no adversarial term.
inline RunConfig toy_run_config() {
  RunConfig c;
  c.model.atlas_height = 64;
  c.model.atlas_width = 64;
  c.model.featurenet.depth = 3;
  c.model.featurenet.base_width = 32;
  c.model.rendernet.base_width = 16;
  c.model.rendernet.residual_blocks = 3;
  c.model.discriminator.base_width = 16;
  c.loss.lambda_gan = 0.0;
  c.train.batch_size = 2;
  c.train.total_steps = 500;
  c.train.seed = 1;
  c.data.image_size = 64;
  return c;
}

}  // namespace neurender::testing
