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

// Procedural people with exact IUV maps, for tests and the offline demo.
// Every foreground pixel's colour is a function of its (part, u, v) alone,
// so two poses of one appearance share a single underlying texture.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include <torch/torch.h>

#include "neurender/training.hpp"
#include "neurender/uvatlas.hpp"

namespace neurender::synthetic {

/// Joint positions in normalised image coordinates (x right, y down).
struct Pose {
  struct Point {
    double x = 0;
    double y = 0;
  };
  Point head, neck, pelvis;
  Point shoulder_r, elbow_r, wrist_r, hand_r;
  Point shoulder_l, elbow_l, wrist_l, hand_l;
  Point hip_r, knee_r, ankle_r, toe_r;
  Point hip_l, knee_l, ankle_l, toe_l;
  double head_radius = 0.07;
  double limb_radius = 0.035;
  double torso_half_width = 0.11;
};

Pose standing_pose();
Pose stride_pose();
/// standing_pose with every limb rotated by a random angle about its joint.
Pose random_pose(uint64_t seed);
/// "standing", "stride" or "random:<seed>". Throws ArgumentError otherwise.
Pose pose_by_name(const std::string& name);

/// Texture parameters of one synthetic person.
struct Appearance {
  float skin[3];
  float top[3];
  float bottom[3];
  float shoe[3];
  double stripe_frequency = 3.0;
  double stripe_angle = 0.0;

  static Appearance from_seed(uint64_t seed);
  /// RGB in [-1, 1] for a surface point.
  std::array<float, 3> colour(int part, double u, double v) const;
};

inline constexpr float kBackground = 0.6F;

struct Rendering {
  torch::Tensor image;  // [3, size, size] in [-1, 1]
  uvatlas::IuvMap iuv;
};

Rendering render_person(const Pose& pose, const Appearance& appearance, int size);

/// One person seen in the standing and the stride pose.
training::TrainPair toy_pair(int size = 64, uint64_t seed = 7);

/// Writes `people` synthetic identities (two poses each) in the on-disk
/// dataset layout, with the first people - 1 in the train list and the
/// last one in the test list (or all in both when people == 1).
void write_dataset(const std::filesystem::path& root, int people, int size, uint64_t seed = 0);

}  // namespace neurender::synthetic
