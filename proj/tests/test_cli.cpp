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
#include <iostream>
#include <sstream>

#include "neurender/cli.hpp"
#include "neurender/config.hpp"
#include "neurender/data_io.hpp"
#include "neurender/training.hpp"
#include "support.hpp"

using namespace neurender;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes a 32 px synthetic dataset and trains `steps` steps into `run_dir`.
Result train(const testing::TempDir& tmp, const std::string& run_dir, int steps,
             std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"train",
                                "--config",
                                (tmp / "data" / "demo.ini").string(),
                                "--set",
                                "run.run_dir=" + (tmp / run_dir).string(),
                                "--set",
                                "train.total_steps=" + std::to_string(steps),
                                "--set",
                                "logging.log_every=1",
                                "--set",
                                "logging.sample_every=2",
                                "--set",
                                "logging.checkpoint_every=2"};
  args.insert(args.end(), extra.begin(), extra.end());
  return run(args);
}

struct Trained {
  testing::TempDir tmp{"cli"};
  Result synth;
  Result first;

  Trained() {
    synth = run({"synth", "--out", (tmp / "data").string(), "--people", "2", "--size", "32", "--seed", "3"});
    first = train(tmp, "run", 4);
  }
};

}  // namespace

TEST_CASE("exit codes") {
  testing::TempDir tmp("codes");
  CHECK(run({"--help"}).code == cli::kExitOk);
  CHECK(run({}).code == cli::kExitConfig);
  CHECK(run({"frobnicate"}).code == cli::kExitConfig);
  CHECK(run({"infer", "--ckpt", "x"}).code == cli::kExitConfig);

  const auto missing = run({"extract-texture", "--image", (tmp / "no.png").string(), "--iuv",
                            (tmp / "no.h5").string(), "--out", (tmp / "t.h5").string(), "--atlas-size", "32"});
  CHECK(missing.code == cli::kExitData);
  CHECK(missing.err.find("no.png") != std::string::npos);

  const auto bad_layout = run({"extract-texture", "--image", "a.png", "--iuv", "a.h5", "--out", "t.h5",
                               "--layout", (tmp / "none.txt").string()});
  CHECK(bad_layout.code == cli::kExitConfig);

  std::ofstream(tmp / "bad.ini") << "[train]\nbatchsize = 1\n";
  CHECK(run({"validate", "--config", (tmp / "bad.ini").string()}).code == cli::kExitConfig);
  CHECK(run({"train", "--config", (tmp / "bad.ini").string()}).code == cli::kExitConfig);
}

TEST_CASE("synth, layout, validate and extract-texture") {
  testing::TempDir tmp("tools");
  const auto synth = run({"synth", "--out", (tmp / "d").string(), "--people", "2", "--size", "32"});
  REQUIRE(synth.code == 0);
  CHECK(fs::exists(tmp / "d" / "demo.ini"));
  CHECK(fs::exists(tmp / "d" / "pairs_test.csv"));

  const auto ok = run({"validate", "--config", (tmp / "d" / "demo.ini").string(), "--split", "test"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("1 row(s) checked, 0 failed") != std::string::npos);
  fs::remove(tmp / "d" / "images" / "person0_0.png");
  const auto broken = run({"validate", "--config", (tmp / "d" / "demo.ini").string()});
  CHECK(broken.code == cli::kExitData);
  CHECK(broken.out.find("person0_0.png") != std::string::npos);

  REQUIRE(run({"layout", "--out", (tmp / "l.txt").string(), "--atlas-size", "32"}).code == 0);
  const auto ex = run({"extract-texture", "--image", (tmp / "d" / "images" / "person1_0.png").string(), "--iuv",
                       (tmp / "d" / "iuv" / "person1_0.h5").string(), "--out", (tmp / "tex.h5").string(),
                       "--layout", (tmp / "l.txt").string()});
  CHECK(ex.code == 0);
  const auto tex = uvatlas::load_partial_texture(tmp / "tex.h5");
  CHECK(tex.mask.sizes() == torch::IntArrayRef({32, 32}));
  CHECK(tex.observed() > 0);
  CHECK(fs::exists(tmp / "tex_preview.png"));
}

TEST_CASE("train writes its artefacts and resumes") {
  Trained t;
  REQUIRE(t.synth.code == 0);
  REQUIRE(t.first.code == 0);
  const auto run_dir = t.tmp / "run";
  CHECK(fs::exists(run_dir / "config.ini"));
  CHECK(fs::exists(run_dir / "ckpt_2"));
  CHECK(fs::exists(run_dir / "ckpt_4"));
  CHECK(fs::exists(run_dir / "samples" / "step_0000004.png"));
  CHECK(t.first.out.find("finished at step 4") != std::string::npos);
  const auto cfg = parse_run_config(slurp(run_dir / "config.ini"));
  CHECK(cfg.train.total_steps == 4);

  const auto log = slurp(run_dir / "losses.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 5);

  const auto resumed = train(t.tmp, "run", 6, {"--resume", run_dir.string()});
  REQUIRE(resumed.code == 0);
  CHECK(resumed.out.find("resuming from step 4") != std::string::npos);
  CHECK(resumed.out.find("finished at step 6") != std::string::npos);
  CHECK(fs::exists(run_dir / "ckpt_6"));
}

TEST_CASE("training twice gives identical logs") {
  Trained t;
  REQUIRE(t.first.code == 0);
  REQUIRE(train(t.tmp, "again", 4).code == 0);
  CHECK(slurp(t.tmp / "run" / "losses.csv") == slurp(t.tmp / "again" / "losses.csv"));
}

TEST_CASE("inference subcommands") {
  Trained t;
  REQUIRE(t.first.code == 0);
  const auto d = t.tmp / "data";
  const std::string ckpt = (t.tmp / "run").string();
  const std::string img = (d / "images" / "person0_0.png").string();
  const std::string iuv = (d / "iuv" / "person0_0.h5").string();
  const std::string other_img = (d / "images" / "person1_0.png").string();
  const std::string other_iuv = (d / "iuv" / "person1_0.h5").string();
  const std::string target_iuv = (d / "iuv" / "person0_1.h5").string();

  const auto infer = run({"infer", "--ckpt", ckpt, "--source-image", img, "--source-iuv", iuv, "--target-iuv",
                          target_iuv, "--out", (t.tmp / "a.png").string()});
  REQUIRE(infer.code == 0);
  CHECK(data_io::load_image(t.tmp / "a.png", 0).sizes() == torch::IntArrayRef({3, 32, 32}));
  run({"infer", "--ckpt", ckpt, "--source-image", img, "--source-iuv", iuv, "--target-iuv", target_iuv, "--out",
       (t.tmp / "b.png").string()});
  CHECK(slurp(t.tmp / "a.png") == slurp(t.tmp / "b.png"));

  // With no garment parts the output is a re-render of the body person.
  REQUIRE(run({"infer", "--ckpt", ckpt, "--source-image", img, "--source-iuv", iuv, "--target-iuv", iuv, "--out",
               (t.tmp / "self.png").string()})
              .code == 0);
  REQUIRE(run({"garment", "--ckpt", ckpt, "--body-image", img, "--body-iuv", iuv, "--garment-image", other_img,
               "--garment-iuv", other_iuv, "--parts-preset", "none", "--out", (t.tmp / "g.png").string()})
              .code == 0);
  CHECK(slurp(t.tmp / "self.png") == slurp(t.tmp / "g.png"));
  CHECK(run({"garment", "--ckpt", ckpt, "--body-image", img, "--body-iuv", iuv, "--garment-image", other_img,
             "--garment-iuv", other_iuv, "--parts-preset", "kilt"})
            .code == cli::kExitConfig);

  fs::create_directories(t.tmp / "poses");
  fs::copy_file(iuv, t.tmp / "poses" / "000.h5");
  fs::copy_file(target_iuv, t.tmp / "poses" / "001.h5");
  const auto motion = run({"motion", "--ckpt", ckpt, "--source-image", img, "--source-iuv", iuv, "--poses-dir",
                           (t.tmp / "poses").string(), "--out-dir", (t.tmp / "frames").string()});
  REQUIRE(motion.code == 0);
  CHECK(slurp(t.tmp / "frames" / "frame_00001.png") == slurp(t.tmp / "a.png"));
  CHECK(slurp(t.tmp / "frames" / "frame_00000.png") == slurp(t.tmp / "self.png"));

  const auto eval = run({"eval", "--pairs", (d / "pairs_test.csv").string(), "--ckpt", ckpt, "--out-dir",
                         (t.tmp / "eval").string()});
  CHECK(eval.code == 0);
  CHECK(fs::exists(t.tmp / "eval" / "report.csv"));
  CHECK(eval.out.find("0.768") != std::string::npos);
}

TEST_CASE("untrained checkpoints are refused") {
  testing::TempDir tmp("untrained");
  auto config = testing::toy_run_config();
  config.model.atlas_height = config.model.atlas_width = 32;
  training::TrainState state(config);
  training::save_checkpoint(state, tmp / "ckpt_0");
  const auto r = run({"infer", "--ckpt", (tmp / "ckpt_0").string(), "--source-image", "a.png", "--source-iuv", "a.h5",
                      "--target-iuv", "b.h5"});
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("untrained") != std::string::npos);
}

TEST_CASE("eval with the identity generator on self-pairs") {
  testing::TempDir tmp("evalid");
  REQUIRE(run({"synth", "--out", (tmp / "d").string(), "--people", "2", "--size", "32"}).code == 0);
  auto rows = data_io::read_pair_list(tmp / "d" / "pairs_train.csv");
  for (auto& r : rows) {
    r.target_image = r.source_image;
    r.target_iuv = r.source_iuv;
  }
  data_io::write_pair_list(rows, tmp / "d" / "self.csv");
  const auto r = run({"eval", "--pairs", (tmp / "d" / "self.csv").string(), "--identity-generator", "--out-dir",
                      (tmp / "e").string(), "--size", "32"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("1.000  0.000") != std::string::npos);
  CHECK(slurp(tmp / "e" / "summary.txt") == r.out);

  const auto none = run({"eval", "--pairs", (tmp / "d" / "self.csv").string(), "--out-dir", (tmp / "e").string()});
  CHECK(none.code == cli::kExitConfig);
}
