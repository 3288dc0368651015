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

// Inference-time uses of a trained pipeline: pose, garment and motion transfer.
// Nothing here updates network weights.

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "neurender/training.hpp"
#include "neurender/uvatlas.hpp"

namespace neurender::applications {

/// Throws PreconditionError when the state has never taken a training step.
void require_trained(const training::TrainState& state);

/// Renders a partial texture through a target pose: g(r(f(T), P)).
/// Returns [3, H, W] in [-1, 1].
torch::Tensor render_texture(training::TrainState& state, const uvatlas::PartialTexture& texture,
                             const uvatlas::IuvMap& target_iuv);

torch::Tensor pose_transfer(training::TrainState& state, const torch::Tensor& source_image,
                            const uvatlas::IuvMap& source_iuv, const uvatlas::IuvMap& target_iuv);

/// Which atlas parts come from the body image and which from the garment image.
struct GarmentSpec {
  std::set<int> body_parts;
  std::set<int> garment_parts;

  /// Throws ConfigError on out-of-range indices or a shared part.
  void validate() const;

  /// "default": torso and leg parts from the garment image, the rest from the
  /// body image. "none": everything from the body image.
  static GarmentSpec preset(const std::string& name);
};

/// Composited texture handed to the renderer by garment_transfer.
uvatlas::PartialTexture garment_texture(const uvatlas::PartialTexture& body, const uvatlas::PartialTexture& garment,
                                        const GarmentSpec& spec, const uvatlas::AtlasLookup& lookup);

torch::Tensor garment_transfer(training::TrainState& state, const torch::Tensor& body_image,
                               const uvatlas::IuvMap& body_iuv, const torch::Tensor& garment_image,
                               const uvatlas::IuvMap& garment_iuv, const GarmentSpec& spec);

struct PoseSequence {
  std::vector<uvatlas::IuvMap> frames;
  std::optional<double> frame_rate;

  /// Throws ArgumentError when frame sizes differ.
  void validate() const;
};

/// Encodes the source once and renders it through every frame in order.
std::vector<torch::Tensor> motion_transfer(training::TrainState& state, const torch::Tensor& source_image,
                                           const uvatlas::IuvMap& source_iuv, const PoseSequence& poses);

/// Reads every IUV container (*.h5) in `dir`, ordered by file name.
PoseSequence load_pose_sequence(const std::filesystem::path& dir, int size = 0);

/// Writes frame_00000.png, frame_00001.png, ... into `dir`.
std::vector<std::filesystem::path> write_frames(const std::vector<torch::Tensor>& frames,
                                                const std::filesystem::path& dir);

/// Hands a frame directory to an external encoder. `{frames}` expands to the
/// printf-style frame pattern, `{fps}` to the frame rate and `{output}` to
/// the target file.
void mux_frames(const std::string& command_template, const std::filesystem::path& frame_dir, double fps,
                const std::filesystem::path& output);

}  // namespace neurender::applications
