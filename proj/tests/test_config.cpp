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

#include "neurender/config.hpp"
#include "neurender/error.hpp"
#include "support.hpp"

using namespace neurender;

TEST_CASE("defaults survive a format/parse round trip") {
  const RunConfig defaults;
  const auto text = format_run_config(defaults);
  CHECK(format_run_config(parse_run_config(text)) == text);
  CHECK(text.find("[featurenet]\n") != std::string::npos);
  CHECK(defaults.model.featurenet.out_channels == 16);
  CHECK(defaults.train.adam_beta1 == 0.5);
}

TEST_CASE("a tuned config round-trips exactly") {
  auto c = testing::toy_run_config();
  c.train.learning_rate = 1.0 / 3.0;
  c.train.variant = Variant::kWarpCond;
  c.loss.face_parts = {23, 24};
  c.loss.perceptual_layers = {"relu1_1", "relu2_1"};
  c.run_dir = "runs/x y";
  const auto back = parse_run_config(format_run_config(c));
  CHECK(back.train.learning_rate == c.train.learning_rate);
  CHECK(back.train.variant == Variant::kWarpCond);
  CHECK(back.loss.face_parts == c.loss.face_parts);
  CHECK(back.loss.perceptual_layers == c.loss.perceptual_layers);
  CHECK(back.run_dir == "runs/x y");
  CHECK(back.model.featurenet.base_width == 32);
}

TEST_CASE("partial files keep defaults for missing keys") {
  const auto c = parse_run_config("[train]\nbatch_size = 4\n; comment\n[loss]\nlambda_gan = 0.5\n");
  CHECK(c.train.batch_size == 4);
  CHECK(c.loss.lambda_gan == 0.5);
  CHECK(c.train.learning_rate == RunConfig{}.train.learning_rate);
}

TEST_CASE("bad configs are rejected with the offending key") {
  CHECK_THROWS_WITH_AS(parse_run_config("[train]\nbatchsize = 4\n"), doctest::Contains("batchsize"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("[train]\nbatch_size = four\n"), doctest::Contains("batch_size"),
                       ConfigError);
  CHECK_THROWS_AS(parse_run_config("[train]\nbatch_size = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[loss]\nlambda_gan = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[loss]\nface_parts = 25\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[train]\nvariant = hybrid\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[train\n"), ConfigError);
  CHECK_THROWS_AS(read_config_file("/nonexistent/neurender.ini"), ConfigError);
}

TEST_CASE("variant names") {
  for (auto v : {Variant::kFull, Variant::kNoInt, Variant::kIp, Variant::kWarp, Variant::kWarpCond}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
  CHECK(to_string(Variant::kNoInt) == "no_int");
}

TEST_CASE("precedence is file, then environment, then assignments") {
  auto table = parse_config_text("[train]\nseed = 1\nbatch_size = 2\n");
  apply_env_overrides(table, {"NEURENDER_TRAIN_SEED=5", "NEURENDER_TRAIN_BATCH_SIZE=3", "HOME=/root",
                              "NEURENDER_NOT_A_KEY=1"});
  apply_assignments(table, {"train.batch_size=8"});
  const auto c = run_config_from_table(table);
  CHECK(c.train.seed == 5);
  CHECK(c.train.batch_size == 8);
  CHECK_THROWS_AS(apply_assignments(table, {"batch_size=8"}), ConfigError);
  CHECK_THROWS_AS(apply_assignments(table, {"train.batch_size"}), ConfigError);
}

TEST_CASE("layouts resolve from the atlas size or a file") {
  ModelConfig m;
  m.atlas_height = 48;
  m.atlas_width = 32;
  const auto grid = resolve_layout(m);
  CHECK(grid.atlas_height == 48);
  CHECK(grid.atlas_width == 32);

  testing::TempDir tmp("layout");
  uvatlas::write_layout(uvatlas::AtlasLayout::grid(24, 16), tmp / "l.txt");
  m.layout_file = (tmp / "l.txt").string();
  CHECK_THROWS_WITH_AS(resolve_layout(m), doctest::Contains("24x16"), ConfigError);
  m.atlas_height = 24;
  m.atlas_width = 16;
  CHECK(resolve_layout(m).atlas_width == 16);
}
