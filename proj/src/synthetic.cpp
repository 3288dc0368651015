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

#include "neurender/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "neurender/data_io.hpp"
#include "neurender/error.hpp"

namespace neurender::synthetic {

namespace {

using Point = Pose::Point;

Point rotate_about(Point p, Point pivot, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double dx = p.x - pivot.x;
  const double dy = p.y - pivot.y;
  return {pivot.x + c * dx - s * dy, pivot.y + s * dx + c * dy};
}

// A body part drawn as an oriented box from a to b; u runs along the axis,
// v across it.
struct Segment {
  int part;
  Point a;
  Point b;
  double radius;
};

std::vector<Segment> segments(const Pose& p) {
  const double r = p.limb_radius;
  // Painter's order: later segments cover earlier ones.
  return {
      {7, p.hip_r, p.knee_r, r * 1.3},      {8, p.hip_l, p.knee_l, r * 1.3},
      {11, p.knee_r, p.ankle_r, r * 1.1},   {12, p.knee_l, p.ankle_l, r * 1.1},
      {6, p.ankle_r, p.toe_r, r * 0.9},     {5, p.ankle_l, p.toe_l, r * 0.9},
      {2, p.neck, p.pelvis, p.torso_half_width},
      {16, p.shoulder_r, p.elbow_r, r},     {15, p.shoulder_l, p.elbow_l, r},
      {20, p.elbow_r, p.wrist_r, r * 0.9},  {19, p.elbow_l, p.wrist_l, r * 0.9},
      {3, p.wrist_r, p.hand_r, r * 0.8},    {4, p.wrist_l, p.hand_l, r * 0.8},
  };
}

bool project(const Segment& s, double x, double y, double& u, double& v) {
  const double ax = s.b.x - s.a.x;
  const double ay = s.b.y - s.a.y;
  const double len2 = ax * ax + ay * ay;
  if (len2 <= 0) {
    return false;
  }
  const double t = ((x - s.a.x) * ax + (y - s.a.y) * ay) / len2;
  if (t < 0 || t > 1) {
    return false;
  }
  const double len = std::sqrt(len2);
  const double across = ((x - s.a.x) * -ay + (y - s.a.y) * ax) / len;
  if (std::abs(across) > s.radius) {
    return false;
  }
  u = t;
  v = 0.5 * (across / s.radius + 1.0);
  return true;
}

void fill(float out[3], std::mt19937_64& rng, float lo, float hi) {
  std::uniform_real_distribution<float> d(lo, hi);
  for (int c = 0; c < 3; ++c) {
    out[c] = d(rng);
  }
}

}  // namespace

Pose standing_pose() {
  Pose p;
  p.head = {0.5, 0.14};
  p.neck = {0.5, 0.22};
  p.pelvis = {0.5, 0.52};
  p.shoulder_r = {0.39, 0.25};
  p.elbow_r = {0.35, 0.38};
  p.wrist_r = {0.33, 0.50};
  p.hand_r = {0.32, 0.56};
  p.shoulder_l = {0.61, 0.25};
  p.elbow_l = {0.65, 0.38};
  p.wrist_l = {0.67, 0.50};
  p.hand_l = {0.68, 0.56};
  p.hip_r = {0.45, 0.52};
  p.knee_r = {0.44, 0.70};
  p.ankle_r = {0.44, 0.88};
  p.toe_r = {0.40, 0.92};
  p.hip_l = {0.55, 0.52};
  p.knee_l = {0.56, 0.70};
  p.ankle_l = {0.56, 0.88};
  p.toe_l = {0.60, 0.92};
  return p;
}

Pose stride_pose() {
  Pose p = standing_pose();
  p.elbow_r = rotate_about(p.elbow_r, p.shoulder_r, 0.5);
  p.wrist_r = rotate_about(rotate_about(p.wrist_r, p.shoulder_r, 0.5), p.elbow_r, 0.4);
  p.hand_r = rotate_about(rotate_about(p.hand_r, p.shoulder_r, 0.5), p.elbow_r, 0.4);
  p.elbow_l = rotate_about(p.elbow_l, p.shoulder_l, -0.9);
  p.wrist_l = rotate_about(rotate_about(p.wrist_l, p.shoulder_l, -0.9), p.elbow_l, -0.6);
  p.hand_l = rotate_about(rotate_about(p.hand_l, p.shoulder_l, -0.9), p.elbow_l, -0.6);
  for (Point* q : {&p.knee_r, &p.ankle_r, &p.toe_r}) {
    *q = rotate_about(*q, p.hip_r, 0.3);
  }
  for (Point* q : {&p.knee_l, &p.ankle_l, &p.toe_l}) {
    *q = rotate_about(*q, p.hip_l, -0.25);
  }
  return p;
}

Pose random_pose(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-0.6, 0.6);
  Pose p = standing_pose();
  auto swing = [&](Point pivot, std::initializer_list<Point*> chain) {
    const double a = angle(rng);
    for (Point* q : chain) {
      *q = rotate_about(*q, pivot, a);
    }
  };
  swing(p.shoulder_r, {&p.elbow_r, &p.wrist_r, &p.hand_r});
  swing(p.elbow_r, {&p.wrist_r, &p.hand_r});
  swing(p.shoulder_l, {&p.elbow_l, &p.wrist_l, &p.hand_l});
  swing(p.elbow_l, {&p.wrist_l, &p.hand_l});
  swing(p.hip_r, {&p.knee_r, &p.ankle_r, &p.toe_r});
  swing(p.knee_r, {&p.ankle_r, &p.toe_r});
  swing(p.hip_l, {&p.knee_l, &p.ankle_l, &p.toe_l});
  swing(p.knee_l, {&p.ankle_l, &p.toe_l});
  return p;
}

Pose pose_by_name(const std::string& name) {
  if (name == "standing") {
    return standing_pose();
  }
  if (name == "stride") {
    return stride_pose();
  }
  if (name.rfind("random:", 0) == 0) {
    try {
      return random_pose(std::stoull(name.substr(7)));
    } catch (const std::logic_error&) {
    }
  }
  throw ArgumentError("unknown pose '" + name + "' (expected standing, stride or random:<seed>)");
}

Appearance Appearance::from_seed(uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xA11CEULL);
  Appearance a{};
  fill(a.skin, rng, 0.1F, 0.6F);
  fill(a.top, rng, -0.9F, 0.9F);
  fill(a.bottom, rng, -0.9F, 0.9F);
  fill(a.shoe, rng, -0.9F, -0.3F);
  std::uniform_real_distribution<double> freq(2.0, 5.0);
  std::uniform_real_distribution<double> ang(0.0, std::numbers::pi);
  a.stripe_frequency = freq(rng);
  a.stripe_angle = ang(rng);
  return a;
}

std::array<float, 3> Appearance::colour(int part, double u, double v) const {
  const float* base = skin;
  double modulation = 0.0;
  const double phase = std::cos(stripe_angle) * u + std::sin(stripe_angle) * v;
  switch (part) {
    case 1: case 2: case 15: case 16: case 17: case 18:
      base = top;
      modulation = 0.3 * std::sin(2.0 * std::numbers::pi * stripe_frequency * phase);
      break;
    case 7: case 8: case 9: case 10: case 11: case 12: case 13: case 14:
      base = bottom;
      modulation = 0.2 * ((static_cast<int>(std::floor(u * 4)) + static_cast<int>(std::floor(v * 2))) % 2 ? 1 : -1);
      break;
    case 5: case 6:
      base = shoe;
      break;
    case 23: case 24:
      // Hair on the upper half of the head.
      if (v < 0.4) {
        return {-0.7F, -0.75F, -0.8F};
      }
      modulation = 0.1 * (v - 0.5);
      break;
    default:
      modulation = 0.1 * (u - 0.5);
      break;
  }
  std::array<float, 3> out{};
  for (int c = 0; c < 3; ++c) {
    out[c] = static_cast<float>(std::clamp(base[c] + modulation, -1.0, 1.0));
  }
  return out;
}

Rendering render_person(const Pose& pose, const Appearance& appearance, int size) {
  if (size <= 0) {
    throw ArgumentError("render_person: size must be positive");
  }
  auto image = torch::full({3, size, size}, kBackground, torch::kFloat32);
  auto iuv = uvatlas::IuvMap::background(size, size);
  auto img = image.accessor<float, 3>();
  auto part = iuv.part.accessor<uint8_t, 2>();
  auto u_acc = iuv.u.accessor<float, 2>();
  auto v_acc = iuv.v.accessor<float, 2>();
  const auto segs = segments(pose);

  auto put = [&](int row, int col, int p, double u, double v) {
    part[row][col] = static_cast<uint8_t>(p);
    u_acc[row][col] = static_cast<float>(u);
    v_acc[row][col] = static_cast<float>(v);
    const auto rgb = appearance.colour(p, u, v);
    for (int c = 0; c < 3; ++c) {
      img[c][row][col] = rgb[c];
    }
  };

  for (int row = 0; row < size; ++row) {
    for (int col = 0; col < size; ++col) {
      const double x = (col + 0.5) / size;
      const double y = (row + 0.5) / size;
      for (const auto& s : segs) {
        double u = 0;
        double v = 0;
        if (project(s, x, y, u, v)) {
          put(row, col, s.part, u, v);
        }
      }
      // The head is a disc split vertically into the two head parts.
      const double hx = (x - pose.head.x) / pose.head_radius;
      const double hy = (y - pose.head.y) / pose.head_radius;
      if (hx * hx + hy * hy <= 1.0) {
        const double u = 0.5 * (hx + 1.0);
        const double v = 0.5 * (hy + 1.0);
        if (u < 0.5) {
          put(row, col, 23, 2.0 * u, v);
        } else {
          put(row, col, 24, 2.0 * u - 1.0, v);
        }
      }
    }
  }
  return {image, iuv};
}

training::TrainPair toy_pair(int size, uint64_t seed) {
  const auto appearance = Appearance::from_seed(seed);
  auto source = render_person(standing_pose(), appearance, size);
  auto target = render_person(stride_pose(), appearance, size);
  return {source.image, target.image, source.iuv, target.iuv, "toy" + std::to_string(seed)};
}

void write_dataset(const std::filesystem::path& root, int people, int size, uint64_t seed) {
  if (people <= 0) {
    throw ArgumentError("write_dataset: need at least one person");
  }
  namespace fs = std::filesystem;
  fs::create_directories(root / "images");
  fs::create_directories(root / "iuv");
  std::vector<data_io::PairRecord> train;
  std::vector<data_io::PairRecord> test;
  for (int i = 0; i < people; ++i) {
    const std::string id = "person" + std::to_string(i);
    const auto appearance = Appearance::from_seed(seed + static_cast<uint64_t>(i));
    const Pose poses[2] = {random_pose(seed * 1000 + 2 * i), random_pose(seed * 1000 + 2 * i + 1)};
    data_io::PairRecord row{id, "", "", "", ""};
    for (int k = 0; k < 2; ++k) {
      const auto r = render_person(poses[k], appearance, size);
      const std::string stem = id + "_" + std::to_string(k);
      data_io::save_image(r.image, root / "images" / (stem + ".png"));
      uvatlas::save_iuv(r.iuv, root / "iuv" / (stem + ".h5"));
      (k == 0 ? row.source_image : row.target_image) = "images/" + stem + ".png";
      (k == 0 ? row.source_iuv : row.target_iuv) = "iuv/" + stem + ".h5";
    }
    if (people == 1) {
      train.push_back(row);
      test.push_back(row);
    } else {
      (i + 1 < people ? train : test).push_back(row);
    }
  }
  data_io::write_pair_list(train, root / "pairs_train.csv");
  data_io::write_pair_list(test, root / "pairs_test.csv");
}

}  // namespace neurender::synthetic
