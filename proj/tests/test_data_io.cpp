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

#include <opencv2/imgcodecs.hpp>

#include <fstream>
#include <random>

#include "h5.hpp"
#include "neurender/data_io.hpp"
#include "neurender/error.hpp"
#include "neurender/synthetic.hpp"
#include "support.hpp"

using namespace neurender;
using namespace neurender::data_io;

namespace {

void write_grey(const std::filesystem::path& p, int rows, int cols, int value) {
  cv::imwrite(p.string(), cv::Mat(rows, cols, CV_8UC3, cv::Scalar(value, value, value)));
}

}  // namespace

TEST_CASE("8-bit decoding maps to [-1, 1]") {
  testing::TempDir tmp("img");
  write_grey(tmp / "black.png", 4, 4, 0);
  write_grey(tmp / "white.png", 4, 4, 255);
  write_grey(tmp / "grey.png", 4, 4, 128);
  CHECK(load_image(tmp / "black.png", 0).max().item<float>() == -1.0F);
  CHECK(load_image(tmp / "white.png", 0).min().item<float>() == 1.0F);
  CHECK(load_image(tmp / "grey.png", 0)[0][0][0].item<float>() == doctest::Approx(128 / 127.5 - 1));
  CHECK_THROWS_AS(load_image(tmp / "absent.png", 0), DataError);
  std::ofstream(tmp / "junk.png") << "no image here";
  CHECK_THROWS_AS(load_image(tmp / "junk.png", 0), DataError);
}

TEST_CASE("colour channels come out as RGB") {
  testing::TempDir tmp("rgb");
  cv::imwrite((tmp / "red.png").string(), cv::Mat(2, 2, CV_8UC3, cv::Scalar(0, 0, 255)));
  const auto img = load_image(tmp / "red.png", 0);
  CHECK(img[0].min().item<float>() == 1.0F);
  CHECK(img[2].max().item<float>() == -1.0F);
}

TEST_CASE("non-square images are padded to a square before resizing") {
  testing::TempDir tmp("pad");
  write_grey(tmp / "tall.png", 40, 20, 200);
  const auto img = load_image(tmp / "tall.png", 16);
  CHECK(img.sizes() == torch::IntArrayRef({3, 16, 16}));
  // Edge replication keeps a uniform image uniform.
  CHECK(img.max().item<float>() == img.min().item<float>());
}

TEST_CASE("save/load round-trips within 8-bit quantization") {
  testing::TempDir tmp("rt");
  std::mt19937_64 rng(3);
  const auto img = testing::random_image(rng, 3, 9, 9);
  save_image(img, tmp / "x.png");
  const auto back = load_image(tmp / "x.png", 0);
  CHECK((back - img).abs().max().item<double>() <= 1.0 / 127.5 + 1e-6);
}

TEST_CASE("IUV loading repairs out-of-range values and counts them") {
  testing::TempDir tmp("iuv");
  {
    h5::File f(tmp / "q.h5", h5::Mode::kCreate);
    f.write("i", torch::tensor({0, 3, 25, 7}, torch::kUInt8).view({2, 2}));
    f.write("u", torch::tensor({9, 255, 128, 0}, torch::kUInt8).view({2, 2}));
    f.write("v", torch::tensor({0, 51, 0, 0}, torch::kUInt8).view({2, 2}));
  }
  const auto loaded = load_iuv(tmp / "q.h5");
  CHECK(loaded.clamped == 2);  // part 25 and the background pixel carrying u != 0
  CHECK(loaded.iuv.part[1][0].item<int>() == 24);
  CHECK(loaded.iuv.u[0][1].item<float>() == 1.0F);
  CHECK(loaded.iuv.v[0][1].item<float>() == doctest::Approx(0.2));
  CHECK(loaded.iuv.u[0][0].item<float>() == 0.0F);
  CHECK_NOTHROW(loaded.iuv.validate());
}

TEST_CASE("malformed IUV containers are data errors") {
  testing::TempDir tmp("badiuv");
  {
    h5::File f(tmp / "missing_v.h5", h5::Mode::kCreate);
    f.write("i", torch::zeros({2, 2}, torch::kUInt8));
    f.write("u", torch::zeros({2, 2}));
  }
  CHECK_THROWS_AS(load_iuv(tmp / "missing_v.h5"), DataError);
  std::ofstream(tmp / "text.h5") << "not hdf5";
  CHECK_THROWS_AS(load_iuv(tmp / "text.h5"), DataError);
}

TEST_CASE("IUV resizing keeps parts and pads with background") {
  testing::TempDir tmp("iuvsize");
  auto iuv = uvatlas::IuvMap::background(8, 4);
  iuv.part.fill_(5);
  iuv.u.fill_(0.5F);
  iuv.v.fill_(0.25F);
  uvatlas::save_iuv(iuv, tmp / "a.h5");
  const auto r = load_iuv(tmp / "a.h5", 16).iuv;
  CHECK(r.height() == 16);
  CHECK(r.width() == 16);
  CHECK(r.part[8][0].item<int>() == 0);   // left padding
  CHECK(r.part[8][8].item<int>() == 5);   // body
  CHECK(r.part[8][15].item<int>() == 0);  // right padding
  CHECK(r.u[8][8].item<float>() == 0.5F);
  CHECK_NOTHROW(r.validate());
}

TEST_CASE("pair lists") {
  testing::TempDir tmp("pairs");
  const std::vector<PairRecord> rows{{"p1", "images/a.png", "images/b.png", "iuv/a.h5", "iuv/b.h5"}};
  write_pair_list(rows, tmp / "l.csv");
  const auto back = read_pair_list(tmp / "l.csv");
  REQUIRE(back.size() == 1);
  CHECK(back[0].target_iuv == "iuv/b.h5");
  std::ofstream(tmp / "bad.csv") << "a,b,c\n";
  CHECK_THROWS_AS(read_pair_list(tmp / "bad.csv"), DataError);
  std::ofstream(tmp / "short.csv") << kPairHeader << "\np1,x,y\n";
  CHECK_THROWS_AS(read_pair_list(tmp / "short.csv"), DataError);
}

TEST_CASE("manifest validation reports problems per row") {
  testing::TempDir tmp("manifest");
  synthetic::write_dataset(tmp.path(), 3, 32, 1);
  DatasetManifest m{tmp.path(), Split::kTrain, "pairs_train.csv", 32};

  auto ok = validate_manifest(m);
  CHECK(ok.ok());
  CHECK(ok.checked == 2);

  write_pair_list({}, tmp / "empty.csv");
  m.pair_list = "empty.csv";
  const auto empty = validate_manifest(m);
  CHECK(empty.checked == 0);
  CHECK(empty.failed == 0);

  m.pair_list = "pairs_train.csv";
  std::filesystem::remove(tmp / "iuv" / "person1_1.h5");
  const auto missing = validate_manifest(m);
  CHECK(missing.failed == 1);
  REQUIRE(missing.problems.size() == 1);
  CHECK(missing.problems[0].find("row 2 (person1)") != std::string::npos);
  CHECK(missing.problems[0].find("iuv/person1_1.h5") != std::string::npos);

  // A size mismatch between an image and its IUV map.
  uvatlas::save_iuv(uvatlas::IuvMap::background(8, 8), tmp / "iuv" / "person1_1.h5");
  const auto sized = validate_manifest(m);
  CHECK(sized.failed == 1);
  CHECK(sized.problems[0].find("8x8") != std::string::npos);

  m.pair_list = "absent.csv";
  CHECK(validate_manifest(m).failed == 1);
}

TEST_CASE("loading pairs is deterministic") {
  testing::TempDir tmp("load");
  synthetic::write_dataset(tmp.path(), 2, 32, 5);
  DatasetManifest m{tmp.path(), Split::kTrain, "pairs_train.csv", 32};
  const auto a = load_pairs(m);
  const auto b = load_pairs(m);
  REQUIRE(a.size() == 1);
  CHECK(torch::equal(a[0].source_image, b[0].source_image));
  CHECK(torch::equal(a[0].target_iuv.u, b[0].target_iuv.u));
  CHECK(a[0].person_id == "person0");
}

TEST_CASE("external predictor adapter") {
  testing::TempDir tmp("pred");
  std::ofstream(tmp / "in put.png") << "x";
  run_external_predictor("cp {image} {output}", tmp / "in put.png", tmp / "o.h5");
  CHECK(std::filesystem::exists(tmp / "o.h5"));
  CHECK_THROWS_WITH_AS(run_external_predictor("false {image} {output}", tmp / "in put.png", tmp / "p.h5"),
                       doctest::Contains("exit status"), DataError);
  CHECK_THROWS_WITH_AS(run_external_predictor("true {image} {output}", tmp / "in put.png", tmp / "q.h5"),
                       doctest::Contains("no output"), DataError);
}
