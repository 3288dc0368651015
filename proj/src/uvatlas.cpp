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

#include "neurender/uvatlas.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "h5.hpp"
#include "neurender/error.hpp"

namespace neurender::uvatlas {

torch::Tensor IuvMap::foreground() const { return part.gt(0); }

void IuvMap::validate() const {
  if (!part.defined() || !u.defined() || !v.defined()) {
    throw ArgumentError("IuvMap: undefined plane");
  }
  if (part.dim() != 2 || u.sizes() != part.sizes() || v.sizes() != part.sizes()) {
    throw ArgumentError("IuvMap: planes must be 2-D with identical sizes");
  }
  if (part.scalar_type() != torch::kUInt8 || u.scalar_type() != torch::kFloat32 ||
      v.scalar_type() != torch::kFloat32) {
    throw ArgumentError("IuvMap: expected uint8 part plane and float32 u/v planes");
  }
  if (part.numel() == 0) {
    return;
  }
  if (part.max().item<int>() > kNumParts) {
    throw ArgumentError("IuvMap: part index above 24");
  }
  auto fg = foreground();
  auto bg = fg.logical_not();
  if (u.lt(0).logical_or(u.gt(1)).any().item<bool>() || v.lt(0).logical_or(v.gt(1)).any().item<bool>()) {
    throw ArgumentError("IuvMap: u/v outside [0, 1]");
  }
  if (u.masked_select(bg).ne(0).any().item<bool>() || v.masked_select(bg).ne(0).any().item<bool>()) {
    throw ArgumentError("IuvMap: background pixels must carry (u, v) = (0, 0)");
  }
}

IuvMap IuvMap::background(int64_t height, int64_t width) {
  return {torch::zeros({height, width}, torch::kUInt8), torch::zeros({height, width}),
          torch::zeros({height, width})};
}

AtlasLayout AtlasLayout::grid(int atlas_height, int atlas_width, int columns, int rows) {
  if (columns * rows < kNumParts || columns <= 0 || rows <= 0) {
    throw ConfigError("atlas grid needs at least 24 cells");
  }
  AtlasLayout layout;
  layout.atlas_height = atlas_height;
  layout.atlas_width = atlas_width;
  const int cw = atlas_width / columns;
  const int ch = atlas_height / rows;
  for (int k = 0; k < kNumParts; ++k) {
    layout.cells[static_cast<size_t>(k)] = CellRect{(k % columns) * cw, (k / columns) * ch, cw, ch};
  }
  return layout;
}

std::string format_layout(const AtlasLayout& layout) {
  std::ostringstream os;
  os << "uvatlas-layout v" << kLayoutVersion << "\n";
  os << "# part x0 y0 width height\n";
  os << "atlas " << layout.atlas_height << " " << layout.atlas_width << "\n";
  for (int p = 1; p <= kNumParts; ++p) {
    const auto& c = layout.cells[static_cast<size_t>(p - 1)];
    os << "part " << p << " " << c.x0 << " " << c.y0 << " " << c.width << " " << c.height << "\n";
  }
  return os.str();
}

AtlasLayout parse_layout(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  bool have_size = false;
  std::array<bool, kNumParts> seen{};
  AtlasLayout layout;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) {
      continue;
    }
    auto fail = [&](const std::string& why) {
      throw ConfigError("layout line " + std::to_string(lineno) + ": " + why);
    };
    if (!header) {
      std::string version;
      ls >> version;
      if (key != "uvatlas-layout" || version != "v" + std::to_string(kLayoutVersion)) {
        fail("expected header 'uvatlas-layout v" + std::to_string(kLayoutVersion) + "'");
      }
      header = true;
    } else if (key == "atlas") {
      if (!(ls >> layout.atlas_height >> layout.atlas_width)) {
        fail("expected 'atlas <height> <width>'");
      }
      have_size = true;
    } else if (key == "part") {
      int p = 0;
      CellRect c;
      if (!(ls >> p >> c.x0 >> c.y0 >> c.width >> c.height)) {
        fail("expected 'part <p> <x0> <y0> <width> <height>'");
      }
      if (p < 1 || p > kNumParts) {
        fail("part index out of range");
      }
      if (seen[static_cast<size_t>(p - 1)]) {
        fail("part " + std::to_string(p) + " listed twice");
      }
      seen[static_cast<size_t>(p - 1)] = true;
      layout.cells[static_cast<size_t>(p - 1)] = c;
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!header) {
    throw ConfigError("layout: missing header");
  }
  if (!have_size) {
    throw ConfigError("layout: missing atlas size");
  }
  for (int p = 1; p <= kNumParts; ++p) {
    if (!seen[static_cast<size_t>(p - 1)]) {
      throw ConfigError("layout: part " + std::to_string(p) + " has no cell");
    }
  }
  return layout;
}

AtlasLayout read_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read layout file " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_layout(ss.str());
}

void write_layout(const AtlasLayout& layout, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write layout file " + path.string());
  }
  out << format_layout(layout);
}

AtlasLookup::AtlasLookup(const AtlasLayout& layout) : layout_(layout) {
  if (layout.atlas_height <= 0 || layout.atlas_width <= 0) {
    throw ConfigError("atlas size must be positive");
  }
  for (int p = 1; p <= kNumParts; ++p) {
    const auto& c = layout.cells[static_cast<size_t>(p - 1)];
    if (c.width <= 0 || c.height <= 0) {
      throw ConfigError("cell of part " + std::to_string(p) + " is empty");
    }
    if (c.x0 < 0 || c.y0 < 0 || c.x0 + c.width > layout.atlas_width || c.y0 + c.height > layout.atlas_height) {
      throw ConfigError("cell of part " + std::to_string(p) + " leaves the atlas");
    }
    for (int q = 1; q < p; ++q) {
      if (c.overlaps(layout.cells[static_cast<size_t>(q - 1)])) {
        throw ConfigError("cells of parts " + std::to_string(q) + " and " + std::to_string(p) + " overlap");
      }
    }
  }
  owner_ = torch::zeros({layout.atlas_height, layout.atlas_width}, torch::kUInt8);
  auto o = owner_.accessor<uint8_t, 2>();
  for (int p = 1; p <= kNumParts; ++p) {
    const auto& c = layout.cells[static_cast<size_t>(p - 1)];
    for (int r = c.y0; r < c.y0 + c.height; ++r) {
      for (int col = c.x0; col < c.x0 + c.width; ++col) {
        o[r][col] = static_cast<uint8_t>(p);
      }
    }
  }
}

TexelCoord AtlasLookup::map(int part, double u, double v) const {
  const auto& c = cell(part);
  return {c.x0 + u * (c.width - 1), c.y0 + v * (c.height - 1)};
}

int AtlasLookup::owner(int row, int col) const {
  if (row < 0 || col < 0 || row >= height() || col >= width()) {
    return 0;
  }
  return owner_.accessor<uint8_t, 2>()[row][col];
}

torch::Tensor AtlasLookup::region_mask(const std::set<int>& parts) const {
  auto mask = torch::zeros({height(), width()}, torch::kBool);
  for (int p : parts) {
    if (p < 1 || p > kNumParts) {
      throw ArgumentError("part index " + std::to_string(p) + " outside 1..24");
    }
    mask.logical_or_(owner_.eq(p));
  }
  return mask;
}

AtlasLookup build_atlas_lookup(const AtlasLayout& layout) { return AtlasLookup(layout); }

PartialTexture PartialTexture::empty(int64_t channels, int64_t height, int64_t width) {
  return {torch::zeros({channels, height, width}), torch::zeros({height, width}, torch::kBool)};
}

PartialTexture extract_partial_texture(const torch::Tensor& image, const IuvMap& iuv, const AtlasLookup& lookup) {
  if (image.dim() != 3) {
    throw ArgumentError("extract_partial_texture: image must be C x H x W");
  }
  if (image.size(1) != iuv.height() || image.size(2) != iuv.width()) {
    throw ArgumentError("extract_partial_texture: image is " + std::to_string(image.size(1)) + "x" +
                        std::to_string(image.size(2)) + " but IUV map is " + std::to_string(iuv.height()) + "x" +
                        std::to_string(iuv.width()));
  }
  const int64_t channels = image.size(0);
  const int ha = lookup.height();
  const int wa = lookup.width();

  // Sum in double and divide once, so the mean does not depend on pixel order.
  auto sum = torch::zeros({channels, ha, wa}, torch::kFloat64);
  auto count = torch::zeros({ha, wa}, torch::kInt64);
  auto img = image.to(torch::kFloat64).contiguous();
  auto ia = img.accessor<double, 3>();
  auto sa = sum.accessor<double, 3>();
  auto ca = count.accessor<int64_t, 2>();
  auto pa = iuv.part.accessor<uint8_t, 2>();
  auto ua = iuv.u.accessor<float, 2>();
  auto va = iuv.v.accessor<float, 2>();

  for (int64_t y = 0; y < iuv.height(); ++y) {
    for (int64_t x = 0; x < iuv.width(); ++x) {
      const int p = pa[y][x];
      if (p == 0) {
        continue;
      }
      const auto t = lookup.map(p, ua[y][x], va[y][x]);
      const int col = std::clamp(static_cast<int>(std::floor(t.x + 0.5)), 0, wa - 1);
      const int row = std::clamp(static_cast<int>(std::floor(t.y + 0.5)), 0, ha - 1);
      for (int64_t c = 0; c < channels; ++c) {
        sa[c][row][col] += ia[c][y][x];
      }
      ca[row][col] += 1;
    }
  }

  auto mask = count.gt(0);
  auto colour = torch::where(mask, sum / count.clamp_min(1).to(torch::kFloat64), torch::zeros_like(sum));
  return {colour.to(torch::kFloat32), mask};
}

PartialTexture union_textures(const PartialTexture& a, const PartialTexture& b) {
  if (a.colour.sizes() != b.colour.sizes() || a.mask.sizes() != b.mask.sizes()) {
    throw ArgumentError("union_textures: texture sizes differ");
  }
  const auto overlap = a.mask.logical_and(b.mask).sum().item<int64_t>();
  if (overlap > 0) {
    throw PreconditionError("union_textures: masks overlap on " + std::to_string(overlap) + " texel" +
                            (overlap == 1 ? "" : "s"));
  }
  return {a.colour + b.colour, a.mask.logical_or(b.mask)};
}

PartialTexture filter_texture_by_parts(const PartialTexture& texture, const std::set<int>& parts,
                                       const AtlasLookup& lookup) {
  auto keep = lookup.region_mask(parts);
  if (keep.sizes() != texture.mask.sizes()) {
    throw ArgumentError("filter_texture_by_parts: texture does not match the atlas size");
  }
  auto mask = texture.mask.logical_and(keep);
  return {texture.colour * mask.unsqueeze(0).to(texture.colour.scalar_type()), mask};
}

void save_iuv(const IuvMap& iuv, const std::filesystem::path& path) {
  h5::File f(path, h5::Mode::kCreate);
  f.write_attribute("format", "iuv");
  f.write("i", iuv.part.contiguous());
  f.write("u", iuv.u.contiguous());
  f.write("v", iuv.v.contiguous());
}

void save_partial_texture(const PartialTexture& texture, const std::filesystem::path& path) {
  h5::File f(path, h5::Mode::kCreate);
  f.write_attribute("format", "partial-texture v1");
  f.write("colour", texture.colour.to(torch::kFloat32).contiguous());
  f.write("mask", texture.mask.to(torch::kUInt8).contiguous());
}

PartialTexture load_partial_texture(const std::filesystem::path& path) {
  h5::File f(path, h5::Mode::kRead);
  auto colour = f.read("colour", torch::kFloat32);
  auto mask = f.read("mask", torch::kUInt8).gt(0);
  if (colour.dim() != 3 || mask.dim() != 2 || colour.size(1) != mask.size(0) || colour.size(2) != mask.size(1)) {
    throw DataError(path.string() + ": colour and mask shapes disagree");
  }
  return {colour * mask.unsqueeze(0).to(torch::kFloat32), mask};
}

}  // namespace neurender::uvatlas
