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

#include "neurender/applications.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include "neurender/data_io.hpp"
#include "neurender/error.hpp"
#include "neurender/sampling.hpp"

namespace neurender::applications {

namespace fs = std::filesystem;

namespace {

std::set<int> all_parts() {
  std::set<int> parts;
  for (int p = 1; p <= uvatlas::kNumParts; ++p) {
    parts.insert(p);
  }
  return parts;
}

torch::Tensor render_encoding(training::TrainState& state, const torch::Tensor& encoding,
                              const uvatlas::IuvMap& target_iuv) {
  const auto grid = sampling::make_sampling_grid(target_iuv, state.lookup());
  auto input = training::generator_input(state, encoding, grid, std::span<const uvatlas::IuvMap>(&target_iuv, 1));
  return state.rendernet()->forward(input).squeeze(0);
}

}  // namespace

void require_trained(const training::TrainState& state) {
  if (state.step() <= 0) {
    throw PreconditionError("checkpoint is untrained (step 0)");
  }
}

torch::Tensor render_texture(training::TrainState& state, const uvatlas::PartialTexture& texture,
                             const uvatlas::IuvMap& target_iuv) {
  require_trained(state);
  torch::NoGradGuard no_grad;
  return render_encoding(state, training::encode_source(state, texture), target_iuv);
}

torch::Tensor pose_transfer(training::TrainState& state, const torch::Tensor& source_image,
                            const uvatlas::IuvMap& source_iuv, const uvatlas::IuvMap& target_iuv) {
  const auto texture = uvatlas::extract_partial_texture(source_image, source_iuv, state.lookup());
  return render_texture(state, texture, target_iuv);
}

void GarmentSpec::validate() const {
  for (const auto* set : {&body_parts, &garment_parts}) {
    for (int p : *set) {
      if (p < 1 || p > uvatlas::kNumParts) {
        throw ConfigError("garment spec: part index " + std::to_string(p) + " is outside 1.." +
                          std::to_string(uvatlas::kNumParts));
      }
    }
  }
  for (int p : garment_parts) {
    if (body_parts.count(p) != 0) {
      throw ConfigError("garment spec: part " + std::to_string(p) + " is in both the body and garment sets");
    }
  }
}

GarmentSpec GarmentSpec::preset(const std::string& name) {
  GarmentSpec spec;
  if (name == "none") {
    spec.body_parts = all_parts();
    return spec;
  }
  if (name == "default") {
    spec.garment_parts = {1, 2, 7, 8, 9, 10, 11, 12, 13, 14};
    for (int p : all_parts()) {
      if (spec.garment_parts.count(p) == 0) {
        spec.body_parts.insert(p);
      }
    }
    return spec;
  }
  throw ConfigError("unknown garment preset '" + name + "' (expected default or none)");
}

uvatlas::PartialTexture garment_texture(const uvatlas::PartialTexture& body, const uvatlas::PartialTexture& garment,
                                        const GarmentSpec& spec, const uvatlas::AtlasLookup& lookup) {
  spec.validate();
  return uvatlas::union_textures(uvatlas::filter_texture_by_parts(body, spec.body_parts, lookup),
                                 uvatlas::filter_texture_by_parts(garment, spec.garment_parts, lookup));
}

torch::Tensor garment_transfer(training::TrainState& state, const torch::Tensor& body_image,
                               const uvatlas::IuvMap& body_iuv, const torch::Tensor& garment_image,
                               const uvatlas::IuvMap& garment_iuv, const GarmentSpec& spec) {
  const auto& lookup = state.lookup();
  const auto body = uvatlas::extract_partial_texture(body_image, body_iuv, lookup);
  const auto garment = uvatlas::extract_partial_texture(garment_image, garment_iuv, lookup);
  return render_texture(state, garment_texture(body, garment, spec, lookup), body_iuv);
}

void PoseSequence::validate() const {
  for (size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].height() != frames[0].height() || frames[i].width() != frames[0].width()) {
      throw ArgumentError("pose sequence: frame " + std::to_string(i) + " is " + std::to_string(frames[i].height()) +
                          "x" + std::to_string(frames[i].width()) + ", frame 0 is " +
                          std::to_string(frames[0].height()) + "x" + std::to_string(frames[0].width()));
    }
  }
}

std::vector<torch::Tensor> motion_transfer(training::TrainState& state, const torch::Tensor& source_image,
                                           const uvatlas::IuvMap& source_iuv, const PoseSequence& poses) {
  poses.validate();
  std::vector<torch::Tensor> out;
  if (poses.frames.empty()) {
    return out;
  }
  require_trained(state);
  torch::NoGradGuard no_grad;
  const auto texture = uvatlas::extract_partial_texture(source_image, source_iuv, state.lookup());
  const auto encoding = training::encode_source(state, texture);
  out.reserve(poses.frames.size());
  for (const auto& frame : poses.frames) {
    out.push_back(render_encoding(state, encoding, frame));
  }
  return out;
}

PoseSequence load_pose_sequence(const fs::path& dir, int size) {
  if (!fs::is_directory(dir)) {
    throw DataError("pose directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".h5") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  PoseSequence seq;
  for (const auto& f : files) {
    seq.frames.push_back(data_io::load_iuv(f, size).iuv);
  }
  seq.validate();
  return seq;
}

std::vector<fs::path> write_frames(const std::vector<torch::Tensor>& frames, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> paths;
  for (size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.png", i);
    paths.push_back(dir / name);
    data_io::save_image(frames[i], paths.back());
  }
  return paths;
}

void mux_frames(const std::string& command_template, const fs::path& frame_dir, double fps, const fs::path& output) {
  std::string cmd = command_template;
  auto replace_all = [&](const std::string& key, const std::string& value) {
    for (size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
      cmd.replace(pos, key.size(), value);
    }
  };
  replace_all("{frames}", "'" + (frame_dir / "frame_%05d.png").string() + "'");
  replace_all("{fps}", std::to_string(fps));
  replace_all("{output}", "'" + output.string() + "'");
  if (std::system(cmd.c_str()) != 0) {
    throw DataError("video encoder failed: " + cmd);
  }
}

}  // namespace neurender::applications
