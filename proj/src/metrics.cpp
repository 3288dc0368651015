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

#include "neurender/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "neurender/error.hpp"

namespace neurender::metrics {

namespace {

torch::Tensor as_batch(const torch::Tensor& t) {
  if (t.dim() == 3) {
    return t.unsqueeze(0);
  }
  if (t.dim() != 4) {
    throw ArgumentError("expected a [C, H, W] or [N, C, H, W] image");
  }
  return t;
}

torch::Tensor gaussian_window(int size, double sigma) {
  auto x = torch::arange(size, torch::kFloat64) - (size - 1) / 2.0;
  auto g = torch::exp(-(x * x) / (2 * sigma * sigma));
  g = g / g.sum();
  return torch::outer(g, g);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

double ssim(const torch::Tensor& a, const torch::Tensor& b, const SsimOptions& options) {
  if (a.sizes() != b.sizes()) {
    throw ArgumentError("ssim: image sizes differ");
  }
  auto x = as_batch(a).to(torch::kFloat64);
  auto y = as_batch(b).to(torch::kFloat64);
  const int64_t n = x.size(0);
  const int64_t c = x.size(1);
  if (x.size(2) < options.window || x.size(3) < options.window) {
    throw ArgumentError("ssim: images must be at least " + std::to_string(options.window) + " pixels on each side");
  }
  // Depthwise convolution over every (sample, channel) plane.
  x = x.reshape({n * c, 1, x.size(2), x.size(3)});
  y = y.reshape({n * c, 1, y.size(2), y.size(3)});
  const auto w = gaussian_window(options.window, options.sigma).view({1, 1, options.window, options.window});
  auto filt = [&](const torch::Tensor& t) { return torch::conv2d(t, w); };
  const auto mu_x = filt(x);
  const auto mu_y = filt(y);
  const auto sxx = filt(x * x) - mu_x * mu_x;
  const auto syy = filt(y * y) - mu_y * mu_y;
  const auto sxy = filt(x * y) - mu_x * mu_y;
  const double c1 = std::pow(options.k1 * options.data_range, 2);
  const double c2 = std::pow(options.k2 * options.data_range, 2);
  const auto map = ((2 * mu_x * mu_y + c1) * (2 * sxy + c2)) / ((mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2));
  return map.mean().item<double>();
}

LpipsWeights LpipsWeights::unit(losses::PerceptualBackbone& backbone, int64_t size) {
  torch::NoGradGuard no_grad;
  LpipsWeights w;
  for (const auto& act : backbone.activations(torch::zeros({1, 3, size, size}))) {
    w.layers.push_back(torch::ones({act.size(1)}, torch::kFloat64));
  }
  return w;
}

LpipsWeights LpipsWeights::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read LPIPS weights " + path.string());
  }
  LpipsWeights w;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<double> values;
    double v = 0;
    while (ss >> v) {
      values.push_back(v);
    }
    if (!ss.eof()) {
      throw ConfigError(path.string() + ": non-numeric LPIPS weight on layer " + std::to_string(w.layers.size() + 1));
    }
    if (!values.empty()) {
      w.layers.push_back(torch::tensor(values, torch::kFloat64));
    }
  }
  return w;
}

double lpips(const torch::Tensor& a, const torch::Tensor& b, losses::PerceptualBackbone& backbone,
             const LpipsWeights& weights) {
  if (a.sizes() != b.sizes()) {
    throw ArgumentError("lpips: image sizes differ");
  }
  torch::NoGradGuard no_grad;
  const auto fa = backbone.activations(as_batch(a).to(torch::kFloat32));
  const auto fb = backbone.activations(as_batch(b).to(torch::kFloat32));
  if (weights.layers.size() < fa.size()) {
    throw ConfigError("lpips: weights cover " + std::to_string(weights.layers.size()) + " layer(s) but the backbone " +
                      backbone.name() + " produces " + std::to_string(fa.size()));
  }
  constexpr double kEps = 1e-10;
  double total = 0.0;
  for (size_t l = 0; l < fa.size(); ++l) {
    auto x = fa[l].to(torch::kFloat64);
    auto y = fb[l].to(torch::kFloat64);
    x = x / (x.square().sum(1, true).sqrt() + kEps);
    y = y / (y.square().sum(1, true).sqrt() + kEps);
    const auto& w = weights.layers[l];
    if (w.numel() != x.size(1)) {
      throw ConfigError("lpips: layer " + std::to_string(l + 1) + " has " + std::to_string(x.size(1)) +
                        " channels but " + std::to_string(w.numel()) + " weights");
    }
    const auto per_pixel = ((x - y).square() * w.view({1, -1, 1, 1})).sum(1);
    total += per_pixel.mean().item<double>();
  }
  return total;
}

size_t EvalReport::count() const {
  size_t n = 0;
  for (const auto& p : pairs) {
    n += p.ok ? 1 : 0;
  }
  return n;
}

size_t EvalReport::skipped() const { return pairs.size() - count(); }

std::optional<double> EvalReport::mean_ssim() const {
  if (count() == 0) {
    return std::nullopt;
  }
  double s = 0;
  for (const auto& p : pairs) {
    s += p.ok ? p.ssim : 0.0;
  }
  return s / static_cast<double>(count());
}

std::optional<double> EvalReport::mean_lpips() const {
  if (count() == 0) {
    return std::nullopt;
  }
  double s = 0;
  for (const auto& p : pairs) {
    s += p.ok ? p.lpips : 0.0;
  }
  return s / static_cast<double>(count());
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write report " + path.string());
  }
  out << "person_id,source_image,target_image,status,ssim,lpips\n";
  for (const auto& p : pairs) {
    out << p.person_id << "," << p.source_image << "," << p.target_image << "," << (p.ok ? "ok" : "skipped") << ","
        << (p.ok ? fixed(p.ssim, 9) : "") << "," << (p.ok ? fixed(p.lpips, 9) : "") << "\n";
  }
}

std::string EvalReport::summary() const {
  std::ostringstream out;
  out << "pairs scored: " << count() << ", skipped: " << skipped() << "\n";
  out << "method                 SSIM   LPIPS\n";
  if (count() == 0) {
    out << "this run               n/a    n/a    (no pairs scored)\n";
  } else {
    out << "this run               " << fixed(*mean_ssim(), 3) << "  " << fixed(*mean_lpips(), 3) << "\n";
  }
  out << "reference (published)  " << fixed(kReferenceSsim, 3) << "  " << fixed(kReferenceLpips, 3) << "\n";
  return out.str();
}

EvalReport evaluate_pairs(const std::vector<data_io::PairRecord>& rows, const std::filesystem::path& root,
                          int image_size, const Generator& generate, losses::PerceptualBackbone& backbone,
                          const LpipsWeights& weights) {
  EvalReport report;
  for (const auto& row : rows) {
    PairScore score;
    score.person_id = row.person_id;
    score.source_image = row.source_image;
    score.target_image = row.target_image;
    try {
      const auto pair = data_io::load_pair(row, root, image_size);
      const auto generated = generate(pair);
      score.ssim = ssim(generated, pair.target_image);
      score.lpips = lpips(generated, pair.target_image, backbone, weights);
      score.ok = true;
    } catch (const DataError& e) {
      score.error = e.what();
    }
    report.pairs.push_back(std::move(score));
  }
  if (report.skipped() > 0) {
    std::clog << "warning: " << report.skipped() << " pair(s) skipped because of missing or unreadable files\n";
    for (const auto& p : report.pairs) {
      if (!p.ok) {
        std::clog << "  " << p.person_id << ": " << p.error << "\n";
      }
    }
  }
  return report;
}

}  // namespace neurender::metrics
