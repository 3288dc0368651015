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

// Thin HDF5 helpers for the array containers. Internal to the library.

#include <filesystem>
#include <string>

#include <torch/torch.h>

namespace neurender::h5 {

enum class Mode { kCreate, kRead };

class File {
 public:
  File(const std::filesystem::path& path, Mode mode);
  ~File();
  File(const File&) = delete;
  File& operator=(const File&) = delete;

  /// Writes a contiguous uint8 or float32 tensor as a dataset of the same shape.
  void write(const std::string& name, const torch::Tensor& tensor);
  void write_attribute(const std::string& name, const std::string& value);

  bool has(const std::string& name) const;
  /// Reads a dataset, converting to `dtype`. Integer datasets read as float
  /// are reported through `was_integer`.
  torch::Tensor read(const std::string& name, torch::Dtype dtype, bool* was_integer = nullptr) const;
  std::string read_attribute(const std::string& name) const;

 private:
  struct Impl;
  Impl* impl_;
  std::filesystem::path path_;
};

}  // namespace neurender::h5
