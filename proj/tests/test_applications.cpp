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

#include "doctest_torch.hpp"

#include <fstream>

#include "neurender/applications.hpp"
#include "neurender/error.hpp"
#include "neurender/synthetic.hpp"
#include "support.hpp"

using namespace neurender;
using namespace neurender::applications;

namespace {

RunConfig tiny_config() {
  auto c = testing::toy_run_config();
  c.model.atlas_height = 32;
  c.model.atlas_width = 32;
  c.model.featurenet.base_width = 8;
  c.model.rendernet.base_width = 8;
  c.model.rendernet.residual_blocks = 1;
  return c;
}

struct Fixture {
  training::TrainState state{tiny_config()};
  training::TrainPair a = synthetic::toy_pair(32, 7);
  training::TrainPair b = synthetic::toy_pair(32, 11);

  Fixture() { state.set_step(1); }
};

}  // namespace

TEST_CASE("an untrained state is refused") {
  training::TrainState state(tiny_config());
  const auto p = synthetic::toy_pair(32, 7);
  CHECK_THROWS_WITH_AS(pose_transfer(state, p.source_image, p.source_iuv, p.target_iuv),
                       doctest::Contains("untrained"), PreconditionError);
}

TEST_CASE("pose transfer output contract") {
  Fixture f;
  const auto out = pose_transfer(f.state, f.a.source_image, f.a.source_iuv, f.a.target_iuv);
  CHECK(out.sizes() == torch::IntArrayRef({3, 32, 32}));
  CHECK(out.min().item<double>() >= -1.0);
  CHECK(out.max().item<double>() <= 1.0);
  CHECK_FALSE(out.requires_grad());
  const auto blank = pose_transfer(f.state, f.a.source_image, f.a.source_iuv, uvatlas::IuvMap::background(32, 32));
  torch::NoGradGuard no_grad;
  CHECK(torch::equal(blank, f.state.rendernet()->forward(torch::zeros({1, 16, 32, 32}))[0]));
}

TEST_CASE("garment presets are disjoint and cover every part") {
  for (const auto* name : {"default", "none"}) {
    const auto spec = GarmentSpec::preset(name);
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.body_parts.size() + spec.garment_parts.size() == 24);
  }
  const auto def = GarmentSpec::preset("default");
  CHECK(def.garment_parts == std::set<int>{1, 2, 7, 8, 9, 10, 11, 12, 13, 14});
  CHECK(def.body_parts.count(23) == 1);
  CHECK(def.body_parts.count(3) == 1);
  CHECK_THROWS_AS(GarmentSpec::preset("kilt"), ConfigError);
  CHECK_THROWS_AS((GarmentSpec{{0}, {}}.validate()), ConfigError);
}

TEST_CASE("garment transfer with no garment parts is pose transfer") {
  Fixture f;
  const auto g = garment_transfer(f.state, f.a.source_image, f.a.source_iuv, f.b.source_image, f.b.source_iuv,
                                  GarmentSpec::preset("none"));
  const auto p = pose_transfer(f.state, f.a.source_image, f.a.source_iuv, f.a.source_iuv);
  CHECK(torch::equal(g, p));
}

TEST_CASE("garment texture of one image with itself is its full extraction") {
  Fixture f;
  const auto t = uvatlas::extract_partial_texture(f.a.source_image, f.a.source_iuv, f.state.lookup());
  const auto merged = garment_texture(t, t, GarmentSpec::preset("default"), f.state.lookup());
  CHECK(torch::equal(merged.mask, t.mask));
  CHECK(torch::equal(merged.colour, t.colour));
}

TEST_CASE("garment texture takes garment cells from the garment image") {
  Fixture f;
  const auto& lookup = f.state.lookup();
  const auto body = uvatlas::extract_partial_texture(f.a.source_image, f.a.source_iuv, lookup);
  const auto dress = uvatlas::extract_partial_texture(f.b.source_image, f.b.source_iuv, lookup);
  const auto spec = GarmentSpec::preset("default");
  const auto merged = garment_texture(body, dress, spec, lookup);
  const auto garment_cells = lookup.region_mask(spec.garment_parts);
  CHECK(torch::equal(merged.mask.logical_and(garment_cells), dress.mask.logical_and(garment_cells)));
  CHECK(torch::equal(merged.mask.logical_and(garment_cells.logical_not()),
                     body.mask.logical_and(garment_cells.logical_not())));
}

TEST_CASE("motion transfer is frame-wise pose transfer") {
  Fixture f;
  PoseSequence seq;
  CHECK(motion_transfer(f.state, f.a.source_image, f.a.source_iuv, seq).empty());
  seq.frames = {f.a.target_iuv, f.b.target_iuv, f.a.target_iuv};
  const auto frames = motion_transfer(f.state, f.a.source_image, f.a.source_iuv, seq);
  REQUIRE(frames.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(torch::equal(frames[i], pose_transfer(f.state, f.a.source_image, f.a.source_iuv, seq.frames[i])));
  }
  CHECK(torch::equal(frames[0], frames[2]));

  PoseSequence reversed;
  reversed.frames = {seq.frames[2], seq.frames[1], seq.frames[0]};
  const auto back = motion_transfer(f.state, f.a.source_image, f.a.source_iuv, reversed);
  CHECK(torch::equal(back[1], frames[1]));

  seq.frames.push_back(uvatlas::IuvMap::background(16, 16));
  CHECK_THROWS_AS(motion_transfer(f.state, f.a.source_image, f.a.source_iuv, seq), ArgumentError);
}

TEST_CASE("pose sequences load in file-name order and frames are numbered") {
  testing::TempDir tmp("motion");
  std::filesystem::create_directories(tmp / "poses");
  const auto p = synthetic::toy_pair(32, 7);
  uvatlas::save_iuv(p.target_iuv, tmp / "poses" / "b.h5");
  uvatlas::save_iuv(p.source_iuv, tmp / "poses" / "a.h5");
  std::ofstream(tmp / "poses" / "notes.txt") << "ignored";
  const auto seq = load_pose_sequence(tmp / "poses");
  REQUIRE(seq.frames.size() == 2);
  CHECK(torch::equal(seq.frames[0].part, p.source_iuv.part));
  CHECK(torch::equal(seq.frames[1].part, p.target_iuv.part));
  CHECK_THROWS_AS(load_pose_sequence(tmp / "nowhere"), DataError);

  const auto paths = write_frames({p.source_image, p.target_image}, tmp / "frames");
  REQUIRE(paths.size() == 2);
  CHECK(paths[1].filename() == "frame_00001.png");
  CHECK(std::filesystem::exists(paths[1]));
}
