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

// Dataset ingestion: images, precomputed IUV maps and pair lists.
//
// Layout on disk: <root>/images/..., <root>/iuv/... (mirrored paths) and
// <root>/pairs_{train,test}.csv with the header
// person_id,source_image,target_image,source_iuv,target_iuv
// where paths are relative to <root>.

#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "neurender/config.hpp"
#include "neurender/training.hpp"
#include "neurender/uvatlas.hpp"

namespace neurender::data_io {

namespace fs = std::filesystem;

/// Decodes an 8-bit image into [3, size, size] floats in [-1, 1] (x / 127.5 - 1).
/// Non-square images are padded to a square by edge replication (centred)
/// before the bilinear resize. size <= 0 keeps the padded native size.
torch::Tensor load_image(const fs::path& path, int size);

/// Writes a [3, H, W] image in [-1, 1] as an 8-bit file (format from the extension).
void save_image(const torch::Tensor& image, const fs::path& path);

struct LoadedIuv {
  uvatlas::IuvMap iuv;
  int64_t clamped = 0;  // pixels whose part index or u/v had to be repaired
};

/// Reads an IUV container ("i", "u", "v"). 8-bit u/v planes are dequantized
/// by 1/255. Part indices above 24 and u/v outside [0, 1] are clamped, and
/// background pixels get (u, v) = (0, 0); each repaired pixel is counted.
/// With size > 0 the map goes through the same pad-to-square as load_image
/// (background padding) and a nearest-neighbour resize.
LoadedIuv load_iuv(const fs::path& path, int size = 0);

struct PairRecord {
  std::string person_id;
  std::string source_image;
  std::string target_image;
  std::string source_iuv;
  std::string target_iuv;
};

inline constexpr const char* kPairHeader = "person_id,source_image,target_image,source_iuv,target_iuv";

std::vector<PairRecord> read_pair_list(const fs::path& path);
void write_pair_list(const std::vector<PairRecord>& rows, const fs::path& path);

enum class Split { kTrain, kTest };

struct DatasetManifest {
  fs::path data_root;
  Split split = Split::kTrain;
  fs::path pair_list;  // relative paths resolve against data_root
  int image_size = 256;

  static DatasetManifest from_config(const DataConfig& data, Split split);
  fs::path pair_list_path() const;
};

struct ManifestReport {
  size_t checked = 0;
  size_t failed = 0;
  std::vector<std::string> problems;

  bool ok() const { return failed == 0; }
};

/// Checks every row: files exist and decode, and each IUV map matches its
/// image's native size. Problems are collected, never thrown.
ManifestReport validate_manifest(const DatasetManifest& manifest);

training::TrainPair load_pair(const PairRecord& row, const fs::path& root, int image_size);
std::vector<training::TrainPair> load_pairs(const DatasetManifest& manifest);

/// Runs a user-supplied correspondence predictor for one image. `{image}` and
/// `{output}` in the template are replaced by the quoted paths. Throws
/// DataError when the command fails or leaves no output.
void run_external_predictor(const std::string& command_template, const fs::path& image, const fs::path& output);

}  // namespace neurender::data_io
