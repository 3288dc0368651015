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

#include "neurender/data_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "h5.hpp"
#include "neurender/error.hpp"

namespace neurender::data_io {

namespace {

struct SquarePad {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
};

SquarePad square_pad(int height, int width) {
  const int side = std::max(height, width);
  SquarePad p;
  p.top = (side - height) / 2;
  p.bottom = side - height - p.top;
  p.left = (side - width) / 2;
  p.right = side - width - p.left;
  return p;
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

cv::Mat read_8bit(const fs::path& path) {
  if (!fs::exists(path)) {
    throw DataError("image not found: " + path.string());
  }
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) {
    throw DataError("cannot decode image " + path.string());
  }
  return bgr;
}

}  // namespace

torch::Tensor load_image(const fs::path& path, int size) {
  cv::Mat bgr = read_8bit(path);
  const auto pad = square_pad(bgr.rows, bgr.cols);
  if (pad.top + pad.bottom + pad.left + pad.right > 0) {
    cv::copyMakeBorder(bgr, bgr, pad.top, pad.bottom, pad.left, pad.right, cv::BORDER_REPLICATE);
  }
  if (size > 0 && bgr.rows != size) {
    cv::resize(bgr, bgr, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).div(127.5).sub(1.0).contiguous();
}

void save_image(const torch::Tensor& image, const fs::path& path) {
  if (image.dim() != 3 || image.size(0) != 3) {
    throw ArgumentError("save_image: expected a 3 x H x W tensor");
  }
  auto bytes = image.detach()
                   .to(torch::kFloat32)
                   .add(1.0)
                   .mul(127.5)
                   .round()
                   .clamp(0, 255)
                   .to(torch::kUInt8)
                   .permute({1, 2, 0})
                   .contiguous();
  cv::Mat rgb(static_cast<int>(bytes.size(0)), static_cast<int>(bytes.size(1)), CV_8UC3, bytes.data_ptr());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  if (!cv::imwrite(path.string(), bgr)) {
    throw DataError("cannot write image " + path.string());
  }
}

LoadedIuv load_iuv(const fs::path& path, int size) {
  h5::File file(path, h5::Mode::kRead);
  auto part = file.read("i", torch::kInt64);
  bool u_int = false;
  bool v_int = false;
  auto u = file.read("u", torch::kFloat32, &u_int);
  auto v = file.read("v", torch::kFloat32, &v_int);
  if (part.dim() != 2 || u.sizes() != part.sizes() || v.sizes() != part.sizes()) {
    throw DataError(path.string() + ": IUV planes must be 2-D with identical sizes");
  }
  if (u_int) {
    u = u / 255.0F;
  }
  if (v_int) {
    v = v / 255.0F;
  }

  LoadedIuv out;
  auto bad_part = part.gt(uvatlas::kNumParts).logical_or(part.lt(0));
  part = part.clamp(0, uvatlas::kNumParts);
  auto fg = part.gt(0);
  auto bad_uv = u.lt(0).logical_or(u.gt(1)).logical_or(v.lt(0)).logical_or(v.gt(1)).logical_and(fg);
  auto bad_bg = fg.logical_not().logical_and(u.ne(0).logical_or(v.ne(0)));
  out.clamped = bad_part.logical_or(bad_uv).logical_or(bad_bg).sum().item<int64_t>();
  u = torch::where(fg, u.clamp(0, 1), torch::zeros_like(u));
  v = torch::where(fg, v.clamp(0, 1), torch::zeros_like(v));
  out.iuv = {part.to(torch::kUInt8), u.contiguous(), v.contiguous()};

  if (size > 0 && (out.iuv.height() != size || out.iuv.width() != size)) {
    const auto pad = square_pad(static_cast<int>(out.iuv.height()), static_cast<int>(out.iuv.width()));
    auto resize_plane = [&](const torch::Tensor& plane, int type) {
      auto t = plane.contiguous();
      cv::Mat m(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), type, t.data_ptr());
      cv::Mat padded;
      cv::copyMakeBorder(m, padded, pad.top, pad.bottom, pad.left, pad.right, cv::BORDER_CONSTANT, cv::Scalar(0));
      cv::Mat resized;
      cv::resize(padded, resized, cv::Size(size, size), 0, 0, cv::INTER_NEAREST_EXACT);
      auto dtype = type == CV_8UC1 ? torch::kUInt8 : torch::kFloat32;
      return torch::from_blob(resized.data, {size, size}, dtype).clone();
    };
    out.iuv = {resize_plane(out.iuv.part, CV_8UC1), resize_plane(out.iuv.u, CV_32FC1),
               resize_plane(out.iuv.v, CV_32FC1)};
  }
  if (out.clamped > 0) {
    std::clog << "warning: " << path.string() << ": repaired " << out.clamped << " IUV pixel"
              << (out.clamped == 1 ? "" : "s") << "\n";
  }
  return out;
}

std::vector<PairRecord> read_pair_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot read pair list " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || trim(line) != kPairHeader) {
    throw DataError(path.string() + ": expected header '" + std::string(kPairHeader) + "'");
  }
  std::vector<PairRecord> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(trim(cell));
    }
    if (cells.size() != 5) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": expected 5 columns");
    }
    rows.push_back({cells[0], cells[1], cells[2], cells[3], cells[4]});
  }
  return rows;
}

void write_pair_list(const std::vector<PairRecord>& rows, const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write pair list " + path.string());
  }
  out << kPairHeader << "\n";
  for (const auto& r : rows) {
    out << r.person_id << "," << r.source_image << "," << r.target_image << "," << r.source_iuv << ","
        << r.target_iuv << "\n";
  }
}

DatasetManifest DatasetManifest::from_config(const DataConfig& data, Split split) {
  return {data.root, split, split == Split::kTrain ? data.train_pairs : data.test_pairs, data.image_size};
}

fs::path DatasetManifest::pair_list_path() const {
  return pair_list.is_absolute() ? pair_list : data_root / pair_list;
}

ManifestReport validate_manifest(const DatasetManifest& manifest) {
  ManifestReport report;
  std::vector<PairRecord> rows;
  try {
    rows = read_pair_list(manifest.pair_list_path());
  } catch (const std::exception& e) {
    report.failed = 1;
    report.problems.push_back(e.what());
    return report;
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    ++report.checked;
    std::vector<std::string> issues;
    auto check_pair = [&](const std::string& image_rel, const std::string& iuv_rel) {
      const auto image_path = manifest.data_root / image_rel;
      const auto iuv_path = manifest.data_root / iuv_rel;
      cv::Mat img;
      if (!fs::exists(image_path)) {
        issues.push_back("missing image " + image_rel);
      } else {
        img = cv::imread(image_path.string(), cv::IMREAD_COLOR);
        if (img.empty()) {
          issues.push_back("undecodable image " + image_rel);
        }
      }
      if (!fs::exists(iuv_path)) {
        issues.push_back("missing IUV file " + iuv_rel);
        return;
      }
      try {
        h5::File f(iuv_path, h5::Mode::kRead);
        auto part = f.read("i", torch::kInt64);
        if (!img.empty() && (part.size(0) != img.rows || part.size(1) != img.cols)) {
          issues.push_back("IUV " + iuv_rel + " is " + std::to_string(part.size(0)) + "x" +
                           std::to_string(part.size(1)) + " but its image is " + std::to_string(img.rows) + "x" +
                           std::to_string(img.cols));
        }
        f.read("u", torch::kFloat32);
        f.read("v", torch::kFloat32);
      } catch (const std::exception& e) {
        issues.push_back(std::string("unreadable IUV file ") + iuv_rel + " (" + e.what() + ")");
      }
    };
    check_pair(row.source_image, row.source_iuv);
    check_pair(row.target_image, row.target_iuv);
    if (!issues.empty()) {
      ++report.failed;
      for (const auto& issue : issues) {
        report.problems.push_back("row " + std::to_string(i + 1) + " (" + row.person_id + "): " + issue);
      }
    }
  }
  return report;
}

training::TrainPair load_pair(const PairRecord& row, const fs::path& root, int image_size) {
  training::TrainPair pair;
  pair.person_id = row.person_id;
  pair.source_image = load_image(root / row.source_image, image_size);
  pair.target_image = load_image(root / row.target_image, image_size);
  pair.source_iuv = load_iuv(root / row.source_iuv, image_size).iuv;
  pair.target_iuv = load_iuv(root / row.target_iuv, image_size).iuv;
  if (pair.source_iuv.height() != pair.source_image.size(1) || pair.target_iuv.height() != pair.target_image.size(1)) {
    throw DataError("pair of " + row.person_id + ": IUV and image sizes disagree");
  }
  return pair;
}

std::vector<training::TrainPair> load_pairs(const DatasetManifest& manifest) {
  std::vector<training::TrainPair> pairs;
  for (const auto& row : read_pair_list(manifest.pair_list_path())) {
    pairs.push_back(load_pair(row, manifest.data_root, manifest.image_size));
  }
  return pairs;
}

void run_external_predictor(const std::string& command_template, const fs::path& image, const fs::path& output) {
  auto quote = [](const std::string& s) {
    std::string q = "'";
    for (char c : s) {
      q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    }
    return q + "'";
  };
  std::string cmd = command_template;
  auto replace_all = [&](const std::string& key, const std::string& value) {
    for (size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
      cmd.replace(pos, key.size(), value);
    }
  };
  replace_all("{image}", quote(image.string()));
  replace_all("{output}", quote(output.string()));
  const int rc = std::system(cmd.c_str());
  if (rc != 0) {
    throw DataError("correspondence predictor failed (exit status " + std::to_string(rc) + "): " + cmd);
  }
  if (!fs::exists(output)) {
    throw DataError("correspondence predictor produced no output at " + output.string());
  }
}

}  // namespace neurender::data_io
