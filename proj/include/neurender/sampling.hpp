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

// Differentiable bilinear gather of a UV feature atlas into image space.
//
// A texel (row i, column j) is centred at continuous coordinate (x = j, y = i).
// Coordinates outside [0, W_a - 1] x [0, H_a - 1] are clamped to the edge.
// Background pixels render as exact zeros and never read the atlas.

#include <array>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "neurender/uvatlas.hpp"

namespace neurender::sampling {

/// Continuous atlas coordinates for a batch of target poses.
struct SamplingGrid {
  torch::Tensor coords;      // [N, H, W, 2] float64, (x, y) per pixel
  torch::Tensor foreground;  // [N, H, W] bool

  int64_t batch() const { return coords.size(0); }
  int64_t height() const { return coords.size(1); }
  int64_t width() const { return coords.size(2); }
};

SamplingGrid make_sampling_grid(const uvatlas::IuvMap& iuv, const uvatlas::AtlasLookup& lookup);
SamplingGrid make_sampling_grid(std::span<const uvatlas::IuvMap> iuvs, const uvatlas::AtlasLookup& lookup);

/// Renders an [N, d, H_a, W_a] atlas through `grid`, giving [N, d, H, W].
/// Differentiable with respect to the atlas; float32 and float64 supported.
torch::Tensor render_feature_image(const torch::Tensor& atlas, const SamplingGrid& grid);

/// Unbatched convenience: [d, H_a, W_a] atlas and one pose, giving [d, H, W].
torch::Tensor render_feature_image(const torch::Tensor& atlas, const uvatlas::IuvMap& target,
                                   const uvatlas::AtlasLookup& lookup);

struct Corner {
  int64_t row = 0;
  int64_t col = 0;
  double weight = 0.0;
};

/// The four interpolation taps at (x, y) after clamping. Weights sum to 1;
/// at the far edges the second tap repeats the first with weight 0.
std::array<Corner, 4> bilinear_corners(int64_t height, int64_t width, double x, double y);

/// Samples a [d, H_a, W_a] grid at (x, y).
std::vector<double> bilinear_sample(const torch::Tensor& grid, double x, double y);

/// Gradient of <upstream, bilinear_sample(grid, x, y)> with respect to grid.
struct SparseGradient {
  std::array<Corner, 4> corners;
  std::vector<double> upstream;

  /// Dense [d, H_a, W_a] float64 gradient.
  torch::Tensor to_dense(int64_t height, int64_t width) const;
};

SparseGradient sample_gradient(const torch::Tensor& grid, double x, double y, std::span<const double> upstream);

}  // namespace neurender::sampling
