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

// Dense-correspondence maps, the 24-part atlas layout and partial UV
// textures scattered from images.
//
// Coordinate convention shared with sampling: texel (row i, column j) of the
// atlas is centred at continuous coordinate (x = j, y = i).

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include <torch/torch.h>

namespace neurender::uvatlas {

inline constexpr int kNumParts = 24;
inline constexpr int kLayoutVersion = 1;

/// Per-pixel body part index (0 = background) plus part-local (u, v).
struct IuvMap {
  torch::Tensor part;  // [H, W] uint8, values in {0..24}
  torch::Tensor u;     // [H, W] float32 in [0, 1]
  torch::Tensor v;     // [H, W] float32 in [0, 1]

  int64_t height() const { return part.size(0); }
  int64_t width() const { return part.size(1); }

  /// Boolean [H, W] tensor, true where part > 0.
  torch::Tensor foreground() const;

  /// Throws ArgumentError naming the first violated invariant.
  void validate() const;

  static IuvMap background(int64_t height, int64_t width);
};

/// A part's rectangle in the atlas, in texels.
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  bool contains(int row, int col) const {
    return col >= x0 && col < x0 + width && row >= y0 && row < y0 + height;
  }
  bool overlaps(const CellRect& o) const {
    return x0 < o.x0 + o.width && o.x0 < x0 + width && y0 < o.y0 + o.height && o.y0 < y0 + height;
  }
};

/// Where each of the 24 parts lives inside the atlas. cells[p - 1] is part p.
struct AtlasLayout {
  int atlas_height = 256;
  int atlas_width = 256;
  std::array<CellRect, kNumParts> cells{};

  /// Equal cells on a `columns` x `rows` grid, part 1 top-left, row-major.
  /// The default gives 64x42 cells on a 256x256 atlas.
  static AtlasLayout grid(int atlas_height = 256, int atlas_width = 256, int columns = 4, int rows = 6);
};

/// Text form: a "uvatlas-layout v1" header, an "atlas <height> <width>" line,
/// then one "part <p> <x0> <y0> <width> <height>" line per part. '#' starts a comment.
std::string format_layout(const AtlasLayout& layout);
AtlasLayout parse_layout(std::string_view text);
AtlasLayout read_layout(const std::filesystem::path& path);
void write_layout(const AtlasLayout& layout, const std::filesystem::path& path);

struct TexelCoord {
  double x = 0.0;
  double y = 0.0;
};

/// Affine embedding of every part's unit (u, v) square into its atlas cell:
/// (u, v) = (0, 0) lands on the cell's top-left texel centre and (1, 1) on
/// its bottom-right texel centre.
class AtlasLookup {
 public:
  explicit AtlasLookup(const AtlasLayout& layout);

  TexelCoord map(int part, double u, double v) const;

  const CellRect& cell(int part) const { return layout_.cells.at(static_cast<size_t>(part - 1)); }
  const AtlasLayout& layout() const { return layout_; }
  int height() const { return layout_.atlas_height; }
  int width() const { return layout_.atlas_width; }

  /// Part owning texel (row, col), or 0 for texels outside every cell.
  int owner(int row, int col) const;

  /// Boolean [H_a, W_a] mask of the cells of `parts`.
  torch::Tensor region_mask(const std::set<int>& parts) const;

 private:
  AtlasLayout layout_;
  torch::Tensor owner_;  // [H_a, W_a] uint8
};

/// Validates the layout (in bounds, non-empty, pairwise disjoint cells) and
/// materializes the lookup. Throws ConfigError otherwise.
AtlasLookup build_atlas_lookup(const AtlasLayout& layout);

/// Colour atlas populated at observed texels.
struct PartialTexture {
  torch::Tensor colour;  // [C, H_a, W_a] float32, zero where mask is false
  torch::Tensor mask;    // [H_a, W_a] bool

  int64_t observed() const { return mask.sum().item<int64_t>(); }

  static PartialTexture empty(int64_t channels, int64_t height, int64_t width);
};

/// Scatters every foreground pixel to its nearest atlas texel. Texels hit by
/// several pixels hold the mean of their colours.
PartialTexture extract_partial_texture(const torch::Tensor& image, const IuvMap& iuv, const AtlasLookup& lookup);

/// Union of two textures with disjoint masks. Throws PreconditionError with
/// the overlapping texel count when the masks intersect.
PartialTexture union_textures(const PartialTexture& a, const PartialTexture& b);

/// Keeps only texels inside the cells of `parts`; an empty set yields an empty texture.
PartialTexture filter_texture_by_parts(const PartialTexture& texture, const std::set<int>& parts,
                                       const AtlasLookup& lookup);

// HDF5 containers. IUV files hold datasets "i" (uint8), "u" and "v" (float32);
// partial textures hold "colour" (float32, C x H x W) and "mask" (uint8).
void save_iuv(const IuvMap& iuv, const std::filesystem::path& path);
void save_partial_texture(const PartialTexture& texture, const std::filesystem::path& path);
PartialTexture load_partial_texture(const std::filesystem::path& path);

}  // namespace neurender::uvatlas
