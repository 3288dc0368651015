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

#include <random>

#include "neurender/error.hpp"
#include "neurender/sampling.hpp"
#include "support.hpp"

using namespace neurender;
using namespace neurender::sampling;

TEST_CASE("bilinear_sample identities") {
  auto grid = torch::arange(4, torch::kFloat64).view({1, 2, 2});
  CHECK(bilinear_sample(grid, 0.5, 0.5)[0] == doctest::Approx(1.5));
  CHECK(bilinear_sample(grid, 1.0, 0.0)[0] == 1.0);
  CHECK(bilinear_sample(grid, 0.0, 1.0)[0] == 2.0);
  CHECK(bilinear_sample(grid, -0.3, 0.4)[0] == bilinear_sample(grid, 0.0, 0.4)[0]);
  CHECK(bilinear_sample(grid, 7.0, 9.0)[0] == 3.0);
  // Midpoint between horizontal neighbours a = 0 and b = 1.
  CHECK(bilinear_sample(grid, 0.5, 0.0)[0] == doctest::Approx(0.5));
}

TEST_CASE("bilinear weights form a partition of unity") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> xs(-2, 9);
  for (int k = 0; k < 500; ++k) {
    double sum = 0;
    for (const auto& c : bilinear_corners(5, 7, xs(rng), xs(rng))) {
      CHECK(c.weight >= 0.0);
      CHECK(c.row >= 0);
      CHECK(c.row < 5);
      CHECK(c.col >= 0);
      CHECK(c.col < 7);
      sum += c.weight;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("sample_gradient weights") {
  auto grid = torch::zeros({2, 3, 3}, torch::kFloat64);
  const std::vector<double> up{1.0, -2.0};
  SUBCASE("integer coordinates concentrate on one texel") {
    const auto g = sample_gradient(grid, 1.0, 2.0, up).to_dense(3, 3);
    CHECK(g[0][2][1].item<double>() == 1.0);
    CHECK(g[1][2][1].item<double>() == -2.0);
    CHECK(g.abs().sum().item<double>() == 3.0);
  }
  SUBCASE("cell centre splits evenly") {
    const auto g = sample_gradient(grid, 0.5, 0.5, up).to_dense(3, 3);
    CHECK(g[0][0][0].item<double>() == 0.25);
    CHECK(g[0][0][1].item<double>() == 0.25);
    CHECK(g[0][1][0].item<double>() == 0.25);
    CHECK(g[0][1][1].item<double>() == 0.25);
  }
}

TEST_CASE("sample_gradient matches finite differences of bilinear_sample") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> xs(0, 3);
  std::uniform_real_distribution<double> vals(-1, 1);
  constexpr double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    auto grid = torch::empty({2, 4, 4}, torch::kFloat64).uniform_(-1, 1);
    const double x = xs(rng);
    const double y = xs(rng);
    const std::vector<double> up{vals(rng), vals(rng)};
    const auto analytic = sample_gradient(grid, x, y, up).to_dense(4, 4);
    auto flat = grid.view(-1);
    auto a = analytic.view(-1);
    for (int64_t i = 0; i < flat.numel(); ++i) {
      const double orig = flat[i].item<double>();
      flat[i] = orig + h;
      const auto p = bilinear_sample(grid, x, y);
      flat[i] = orig - h;
      const auto m = bilinear_sample(grid, x, y);
      flat[i] = orig;
      const double fd = (up[0] * (p[0] - m[0]) + up[1] * (p[1] - m[1])) / (2 * h);
      CHECK(std::abs(fd - a[i].item<double>()) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("render_feature_image through an IUV map") {
  const auto lookup = uvatlas::build_atlas_lookup(uvatlas::AtlasLayout::grid(48, 32));
  auto atlas = torch::randn({4, 48, 32});

  SUBCASE("all background renders zero") {
    const auto out = render_feature_image(atlas, uvatlas::IuvMap::background(5, 6), lookup);
    CHECK(out.sizes() == torch::IntArrayRef({4, 5, 6}));
    CHECK(out.abs().sum().item<double>() == 0.0);
  }
  SUBCASE("texel centres reproduce the texel") {
    auto iuv = uvatlas::IuvMap::background(1, 1);
    iuv.part[0][0] = 6;  // column 1, row 1: x0 = 8, y0 = 8, 8 x 8 cells
    iuv.u[0][0] = 0.0F;
    iuv.v[0][0] = 1.0F;
    const auto out = render_feature_image(atlas, iuv, lookup);
    CHECK(torch::allclose(out.view({4}), atlas.index({torch::indexing::Slice(), 15, 8})));
  }
  SUBCASE("zero channels is an argument error") {
    CHECK_THROWS_AS(render_feature_image(torch::zeros({0, 48, 32}), uvatlas::IuvMap::background(2, 2), lookup),
                    ArgumentError);
  }
  SUBCASE("atlas size must match the lookup") {
    CHECK_THROWS_AS(render_feature_image(torch::zeros({2, 8, 8}), uvatlas::IuvMap::background(2, 2), lookup),
                    ArgumentError);
  }
}

TEST_CASE("rendering is linear in the atlas") {
  const auto lookup = uvatlas::build_atlas_lookup(uvatlas::AtlasLayout::grid(48, 32));
  std::mt19937_64 rng(4);
  const auto iuv = testing::random_iuv(rng, 9, 7);
  auto a = torch::randn({3, 48, 32}, torch::kFloat64);
  auto b = torch::randn({3, 48, 32}, torch::kFloat64);
  const auto lhs = render_feature_image(2.0 * a - 0.5 * b, iuv, lookup);
  const auto rhs = 2.0 * render_feature_image(a, iuv, lookup) - 0.5 * render_feature_image(b, iuv, lookup);
  CHECK(torch::allclose(lhs, rhs, 1e-12, 1e-12));
}

TEST_CASE("batched gradients are deterministic and zero on background") {
  const auto lookup = uvatlas::build_atlas_lookup(uvatlas::AtlasLayout::grid(48, 32));
  std::mt19937_64 rng(6);
  std::vector<uvatlas::IuvMap> poses{testing::random_iuv(rng, 8, 8), uvatlas::IuvMap::background(8, 8)};
  const auto grid = make_sampling_grid(poses, lookup);
  auto run = [&] {
    auto atlas = torch::ones({2, 5, 48, 32}).requires_grad_(true);
    (render_feature_image(atlas, grid) * torch::linspace(0, 1, 64).view({1, 1, 8, 8})).sum().backward();
    return atlas.grad();
  };
  const auto g1 = run();
  const auto g2 = run();
  CHECK(torch::equal(g1, g2));
  CHECK(g1[1].abs().sum().item<double>() == 0.0);
  CHECK(g1[0].abs().sum().item<double>() > 0.0);
}
