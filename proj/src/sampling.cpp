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

#include "neurender/sampling.hpp"

#include <ATen/Parallel.h>

#include <cmath>

#include "neurender/error.hpp"

namespace neurender::sampling {

namespace {

using torch::autograd::AutogradContext;
using torch::autograd::variable_list;

// Flat tap table for one batch element: four texel offsets and weights per
// pixel. Background pixels keep weight 0 everywhere and are skipped.
struct Taps {
  std::vector<int64_t> offset;  // [pixels * 4]
  std::vector<double> weight;   // [pixels * 4]
  std::vector<uint8_t> active;  // [pixels]
};

Taps compute_taps(const torch::Tensor& coords, const torch::Tensor& fg, int64_t n, int64_t ha, int64_t wa) {
  const int64_t h = coords.size(1);
  const int64_t w = coords.size(2);
  Taps taps;
  taps.offset.assign(static_cast<size_t>(h * w * 4), 0);
  taps.weight.assign(static_cast<size_t>(h * w * 4), 0.0);
  taps.active.assign(static_cast<size_t>(h * w), 0);
  auto ca = coords.accessor<double, 4>();
  auto fa = fg.accessor<bool, 3>();
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      const auto pix = static_cast<size_t>(y * w + x);
      if (!fa[n][y][x]) {
        continue;
      }
      taps.active[pix] = 1;
      const auto corners = bilinear_corners(ha, wa, ca[n][y][x][0], ca[n][y][x][1]);
      for (size_t k = 0; k < 4; ++k) {
        taps.offset[pix * 4 + k] = corners[k].row * wa + corners[k].col;
        taps.weight[pix * 4 + k] = corners[k].weight;
      }
    }
  }
  return taps;
}

void check_inputs(const torch::Tensor& atlas, const SamplingGrid& grid) {
  if (atlas.dim() != 4) {
    throw ArgumentError("render_feature_image: atlas must be N x d x H_a x W_a");
  }
  if (atlas.size(1) == 0) {
    throw ArgumentError("render_feature_image: atlas has zero channels");
  }
  if (grid.coords.dim() != 4 || grid.coords.size(3) != 2 || grid.coords.scalar_type() != torch::kFloat64) {
    throw ArgumentError("render_feature_image: coords must be float64 N x H x W x 2");
  }
  if (grid.foreground.dim() != 3 || grid.foreground.scalar_type() != torch::kBool ||
      grid.foreground.sizes() != grid.coords.sizes().slice(0, 3)) {
    throw ArgumentError("render_feature_image: foreground must be bool N x H x W");
  }
  if (atlas.size(0) != grid.batch()) {
    throw ArgumentError("render_feature_image: atlas batch " + std::to_string(atlas.size(0)) +
                        " does not match grid batch " + std::to_string(grid.batch()));
  }
  if (!atlas.is_floating_point()) {
    throw ArgumentError("render_feature_image: atlas must be floating point");
  }
}

torch::Tensor gather_forward(const torch::Tensor& atlas_in, const torch::Tensor& coords, const torch::Tensor& fg) {
  auto atlas = atlas_in.contiguous();
  const int64_t n = atlas.size(0), d = atlas.size(1), ha = atlas.size(2), wa = atlas.size(3);
  const int64_t h = coords.size(1), w = coords.size(2);
  auto out = torch::zeros({n, d, h, w}, atlas.options());
  AT_DISPATCH_FLOATING_TYPES(atlas.scalar_type(), "gather_forward", [&] {
    const scalar_t* src = atlas.data_ptr<scalar_t>();
    scalar_t* dst = out.data_ptr<scalar_t>();
    for (int64_t b = 0; b < n; ++b) {
      const Taps taps = compute_taps(coords, fg, b, ha, wa);
      const scalar_t* plane0 = src + b * d * ha * wa;
      scalar_t* out0 = dst + b * d * h * w;
      // Pixels are independent, so any schedule gives identical output.
      at::parallel_for(0, h * w, 256, [&](int64_t begin, int64_t end) {
        for (int64_t pix = begin; pix < end; ++pix) {
          if (!taps.active[static_cast<size_t>(pix)]) {
            continue;
          }
          const auto t = static_cast<size_t>(pix) * 4;
          for (int64_t c = 0; c < d; ++c) {
            const scalar_t* plane = plane0 + c * ha * wa;
            double acc = 0.0;
            for (size_t k = 0; k < 4; ++k) {
              acc += taps.weight[t + k] * static_cast<double>(plane[taps.offset[t + k]]);
            }
            out0[c * h * w + pix] = static_cast<scalar_t>(acc);
          }
        }
      });
    }
  });
  return out;
}

torch::Tensor gather_backward(const torch::Tensor& grad_out_in, const torch::Tensor& coords, const torch::Tensor& fg,
                              int64_t ha, int64_t wa) {
  auto grad_out = grad_out_in.contiguous();
  const int64_t n = grad_out.size(0), d = grad_out.size(1), h = grad_out.size(2), w = grad_out.size(3);
  auto grad = torch::zeros({n, d, ha, wa}, grad_out.options());
  AT_DISPATCH_FLOATING_TYPES(grad_out.scalar_type(), "gather_backward", [&] {
    const scalar_t* g = grad_out.data_ptr<scalar_t>();
    scalar_t* dst = grad.data_ptr<scalar_t>();
    for (int64_t b = 0; b < n; ++b) {
      const Taps taps = compute_taps(coords, fg, b, ha, wa);
      // One task per channel plane; within a plane pixels accumulate in raster
      // order, so the reduction is deterministic.
      at::parallel_for(0, d, 1, [&](int64_t begin, int64_t end) {
        std::vector<double> acc(static_cast<size_t>(ha * wa));
        for (int64_t c = begin; c < end; ++c) {
          std::fill(acc.begin(), acc.end(), 0.0);
          const scalar_t* gp = g + (b * d + c) * h * w;
          for (int64_t pix = 0; pix < h * w; ++pix) {
            if (!taps.active[static_cast<size_t>(pix)]) {
              continue;
            }
            const double gv = static_cast<double>(gp[pix]);
            const auto t = static_cast<size_t>(pix) * 4;
            for (size_t k = 0; k < 4; ++k) {
              acc[static_cast<size_t>(taps.offset[t + k])] += taps.weight[t + k] * gv;
            }
          }
          scalar_t* out = dst + (b * d + c) * ha * wa;
          for (size_t i = 0; i < acc.size(); ++i) {
            out[i] = static_cast<scalar_t>(acc[i]);
          }
        }
      });
    }
  });
  return grad;
}

class BilinearGather : public torch::autograd::Function<BilinearGather> {
 public:
  static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& atlas, const torch::Tensor& coords,
                               const torch::Tensor& fg) {
    ctx->save_for_backward({coords, fg});
    ctx->saved_data["ha"] = atlas.size(2);
    ctx->saved_data["wa"] = atlas.size(3);
    return gather_forward(atlas, coords, fg);
  }

  static variable_list backward(AutogradContext* ctx, variable_list grad_outputs) {
    auto saved = ctx->get_saved_variables();
    auto grad = gather_backward(grad_outputs[0], saved[0], saved[1], ctx->saved_data["ha"].toInt(),
                                ctx->saved_data["wa"].toInt());
    return {grad, torch::Tensor(), torch::Tensor()};
  }
};

}  // namespace

SamplingGrid make_sampling_grid(const uvatlas::IuvMap& iuv, const uvatlas::AtlasLookup& lookup) {
  return make_sampling_grid(std::span<const uvatlas::IuvMap>(&iuv, 1), lookup);
}

SamplingGrid make_sampling_grid(std::span<const uvatlas::IuvMap> iuvs, const uvatlas::AtlasLookup& lookup) {
  if (iuvs.empty()) {
    throw ArgumentError("make_sampling_grid: no poses");
  }
  const int64_t h = iuvs[0].height();
  const int64_t w = iuvs[0].width();
  const auto n = static_cast<int64_t>(iuvs.size());
  SamplingGrid grid{torch::zeros({n, h, w, 2}, torch::kFloat64), torch::zeros({n, h, w}, torch::kBool)};
  auto ca = grid.coords.accessor<double, 4>();
  auto fa = grid.foreground.accessor<bool, 3>();
  for (int64_t b = 0; b < n; ++b) {
    const auto& iuv = iuvs[static_cast<size_t>(b)];
    if (iuv.height() != h || iuv.width() != w) {
      throw ArgumentError("make_sampling_grid: poses in a batch must share their size");
    }
    auto pa = iuv.part.accessor<uint8_t, 2>();
    auto ua = iuv.u.accessor<float, 2>();
    auto va = iuv.v.accessor<float, 2>();
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        const int p = pa[y][x];
        if (p == 0) {
          continue;
        }
        const auto t = lookup.map(p, ua[y][x], va[y][x]);
        ca[b][y][x][0] = t.x;
        ca[b][y][x][1] = t.y;
        fa[b][y][x] = true;
      }
    }
  }
  return grid;
}

torch::Tensor render_feature_image(const torch::Tensor& atlas, const SamplingGrid& grid) {
  check_inputs(atlas, grid);
  return BilinearGather::apply(atlas, grid.coords.contiguous(), grid.foreground.contiguous());
}

torch::Tensor render_feature_image(const torch::Tensor& atlas, const uvatlas::IuvMap& target,
                                   const uvatlas::AtlasLookup& lookup) {
  if (atlas.dim() != 3) {
    throw ArgumentError("render_feature_image: atlas must be d x H_a x W_a");
  }
  if (atlas.size(1) != lookup.height() || atlas.size(2) != lookup.width()) {
    throw ArgumentError("render_feature_image: atlas size does not match the lookup");
  }
  return render_feature_image(atlas.unsqueeze(0), make_sampling_grid(target, lookup)).squeeze(0);
}

std::array<Corner, 4> bilinear_corners(int64_t height, int64_t width, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height - 1));
  const auto x0 = static_cast<int64_t>(std::floor(x));
  const auto y0 = static_cast<int64_t>(std::floor(y));
  const int64_t x1 = std::min(x0 + 1, width - 1);
  const int64_t y1 = std::min(y0 + 1, height - 1);
  const double wx = x - static_cast<double>(x0);
  const double wy = y - static_cast<double>(y0);
  return {Corner{y0, x0, (1.0 - wx) * (1.0 - wy)}, Corner{y0, x1, wx * (1.0 - wy)},
          Corner{y1, x0, (1.0 - wx) * wy}, Corner{y1, x1, wx * wy}};
}

std::vector<double> bilinear_sample(const torch::Tensor& grid, double x, double y) {
  if (grid.dim() != 3 || grid.size(0) == 0) {
    throw ArgumentError("bilinear_sample: grid must be d x H x W with d > 0");
  }
  auto g = grid.to(torch::kFloat64).contiguous();
  auto ga = g.accessor<double, 3>();
  const auto corners = bilinear_corners(g.size(1), g.size(2), x, y);
  std::vector<double> out(static_cast<size_t>(g.size(0)), 0.0);
  for (int64_t c = 0; c < g.size(0); ++c) {
    for (const auto& k : corners) {
      out[static_cast<size_t>(c)] += k.weight * ga[c][k.row][k.col];
    }
  }
  return out;
}

torch::Tensor SparseGradient::to_dense(int64_t height, int64_t width) const {
  const auto d = static_cast<int64_t>(upstream.size());
  auto out = torch::zeros({d, height, width}, torch::kFloat64);
  auto oa = out.accessor<double, 3>();
  for (int64_t c = 0; c < d; ++c) {
    for (const auto& k : corners) {
      oa[c][k.row][k.col] += k.weight * upstream[static_cast<size_t>(c)];
    }
  }
  return out;
}

SparseGradient sample_gradient(const torch::Tensor& grid, double x, double y, std::span<const double> upstream) {
  if (grid.dim() != 3 || static_cast<size_t>(grid.size(0)) != upstream.size()) {
    throw ArgumentError("sample_gradient: upstream length must equal the grid channel count");
  }
  return {bilinear_corners(grid.size(1), grid.size(2), x, y), {upstream.begin(), upstream.end()}};
}

}  // namespace neurender::sampling
