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

#include "neurender/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "neurender/error.hpp"

namespace neurender::training {

PipelineSpec build_variant_pipeline(Variant variant, ModelConfig& model) {
  PipelineSpec spec;
  spec.variant = variant;
  model.featurenet.in_channels = 3;
  switch (variant) {
    case Variant::kFull:
    case Variant::kNoInt:
      spec.uses_featurenet = true;
      spec.featurenet_out_channels = model.featurenet.out_channels;
      spec.rendernet_in_channels = model.featurenet.out_channels;
      spec.texture_loss = variant == Variant::kFull;
      if (spec.texture_loss && model.featurenet.out_channels < 3) {
        throw ConfigError("the texture loss needs at least 3 FeatureNet output channels");
      }
      break;
    case Variant::kIp:
      spec.uses_featurenet = true;
      spec.featurenet_out_channels = 3;
      spec.rendernet_in_channels = 3;
      spec.texture_loss = false;  // only in the first phase
      spec.two_phase = true;
      break;
    case Variant::kWarp:
      spec.uses_featurenet = false;
      spec.featurenet_out_channels = 0;
      spec.rendernet_in_channels = 3;
      spec.texture_loss = false;
      break;
    case Variant::kWarpCond:
      spec.uses_featurenet = false;
      spec.featurenet_out_channels = 0;
      spec.rendernet_in_channels = 6;
      spec.texture_loss = false;
      spec.pose_condition = true;
      break;
  }
  if (spec.uses_featurenet) {
    model.featurenet.out_channels = spec.featurenet_out_channels;
  }
  model.rendernet.in_channels = spec.rendernet_in_channels;
  model.discriminator.in_channels = spec.discriminator_in_channels();
  return spec;
}

RunConfig resolve_run_config(RunConfig config) {
  config.train.validate();
  build_variant_pipeline(config.train.variant, config.model);
  if (config.train.variant == Variant::kNoInt) {
    config.loss.lambda_tex = 0.0;
  }
  config.loss.validate();
  return config;
}

torch::Tensor encode_pose(const uvatlas::IuvMap& iuv) {
  return torch::stack({iuv.part.to(torch::kFloat32) / static_cast<double>(uvatlas::kNumParts), iuv.u, iuv.v});
}

PreparedPair prepare_pair(TrainPair pair, const uvatlas::AtlasLookup& lookup) {
  pair.source_iuv.validate();
  pair.target_iuv.validate();
  auto src = uvatlas::extract_partial_texture(pair.source_image, pair.source_iuv, lookup);
  auto tgt = uvatlas::extract_partial_texture(pair.target_image, pair.target_iuv, lookup);
  return {std::move(pair), std::move(src), std::move(tgt)};
}

Batch make_batch(std::span<const PreparedPair* const> pairs, const uvatlas::AtlasLookup& lookup) {
  if (pairs.empty()) {
    throw ArgumentError("make_batch: empty batch");
  }
  std::vector<torch::Tensor> si, ti, sc, sm, tc, tm;
  Batch batch;
  for (const auto* p : pairs) {
    si.push_back(p->pair.source_image);
    ti.push_back(p->pair.target_image);
    sc.push_back(p->source_texture.colour);
    sm.push_back(p->source_texture.mask);
    tc.push_back(p->target_texture.colour);
    tm.push_back(p->target_texture.mask);
    batch.source_iuvs.push_back(p->pair.source_iuv);
    batch.target_iuvs.push_back(p->pair.target_iuv);
  }
  batch.source_images = torch::stack(si);
  batch.target_images = torch::stack(ti);
  batch.source_texture = {torch::stack(sc), torch::stack(sm)};
  batch.target_texture = {torch::stack(tc), torch::stack(tm)};
  batch.target_grid = sampling::make_sampling_grid(batch.target_iuvs, lookup);
  return batch;
}

Batch make_batch(const PreparedPair& pair, const uvatlas::AtlasLookup& lookup) {
  const PreparedPair* ptr = &pair;
  return make_batch(std::span<const PreparedPair* const>(&ptr, 1), lookup);
}

PairDataset::PairDataset(const std::vector<TrainPair>& pairs, const uvatlas::AtlasLookup& lookup,
                         bool both_directions) {
  for (const auto& p : pairs) {
    items_.push_back(prepare_pair(p, lookup));
    if (both_directions) {
      TrainPair reversed{p.target_image, p.source_image, p.target_iuv, p.source_iuv, p.person_id};
      items_.push_back(prepare_pair(std::move(reversed), lookup));
    }
  }
}

std::vector<size_t> PairDataset::batch_indices(int64_t step, int batch_size, uint64_t seed) const {
  if (items_.empty()) {
    throw DataError("training set is empty");
  }
  const auto m = static_cast<int64_t>(items_.size());
  std::vector<size_t> out;
  for (int b = 0; b < batch_size; ++b) {
    const int64_t s = step * batch_size + b;
    const int64_t epoch = s / m;
    if (!cached_perm_ || cached_perm_->seed != seed || cached_perm_->epoch != epoch) {
      std::vector<size_t> perm(items_.size());
      std::iota(perm.begin(), perm.end(), size_t{0});
      std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<uint64_t>(epoch));
      std::shuffle(perm.begin(), perm.end(), rng);
      cached_perm_ = CachedPermutation{seed, epoch, std::move(perm)};
    }
    out.push_back(cached_perm_->order[static_cast<size_t>(s % m)]);
  }
  return out;
}

TrainState::TrainState(const RunConfig& config, const std::optional<uvatlas::AtlasLayout>& layout)
    : config_(resolve_run_config(config)),
      lookup_(uvatlas::build_atlas_lookup(layout ? *layout : resolve_layout(config_.model))) {
  spec_ = build_variant_pipeline(config_.train.variant, config_.model);
  if (lookup_.height() != config_.model.atlas_height || lookup_.width() != config_.model.atlas_width) {
    throw ConfigError("atlas layout size does not match [atlas] height/width");
  }
  torch::manual_seed(config_.train.seed);
  if (spec_.uses_featurenet) {
    featurenet_ = networks::FeatureNet(config_.model.featurenet);
  }
  rendernet_ = networks::RenderNet(config_.model.rendernet);
  discriminator_ = networks::MultiscaleDiscriminator(config_.model.discriminator);

  const auto& t = config_.train;
  auto options = [&] {
    return torch::optim::AdamOptions(t.learning_rate)
        .betas({t.adam_beta1, t.adam_beta2})
        .eps(t.adam_eps)
        .weight_decay(t.weight_decay);
  };
  opt_g_ = std::make_unique<torch::optim::Adam>(generator_parameters(), options());
  opt_d_ = std::make_unique<torch::optim::Adam>(discriminator_->parameters(), options());

  const int64_t d = config_.model.rendernet.in_channels;
  std::mt19937_64 rng(config_.train.seed ^ 0x5EEDF00DULL);
  std::normal_distribution<float> normal(0.0F, 1.0F);
  preview_projection_ = torch::empty({3, d});
  auto pa = preview_projection_.accessor<float, 2>();
  for (int64_t r = 0; r < 3; ++r) {
    for (int64_t c = 0; c < d; ++c) {
      pa[r][c] = normal(rng);
    }
  }

  perceptual_backbone = losses::make_backbone(config_.backbones.perceptual, config_.loss.perceptual_layers);
  face_embedder = losses::make_embedder(config_.backbones.face);
}

std::vector<torch::Tensor> TrainState::generator_parameters() {
  std::vector<torch::Tensor> params;
  if (featurenet_) {
    for (auto& p : featurenet_->parameters()) {
      params.push_back(p);
    }
  }
  for (auto& p : rendernet_->parameters()) {
    params.push_back(p);
  }
  return params;
}

namespace {

bool in_inpainting_phase(const TrainState& state) {
  return state.spec().two_phase && state.step() < state.config().train.ip_stage1_steps;
}

torch::Tensor featurenet_input(const TrainState& state, const uvatlas::PartialTexture& texture) {
  auto colour = texture.colour;
  if (colour.dim() == 3) {
    colour = colour.unsqueeze(0);
  }
  if (!state.config().model.featurenet.mask_channel) {
    return colour;
  }
  auto mask = texture.mask.dim() == 2 ? texture.mask.unsqueeze(0) : texture.mask;
  return torch::cat({colour, mask.unsqueeze(1).to(colour.scalar_type())}, 1);
}

double checked(const torch::Tensor& value, const char* term, int64_t step) {
  const double v = value.item<double>();
  if (!std::isfinite(v)) {
    throw NumericalError(term, std::string("non-finite ") + term + " at step " + std::to_string(step + 1));
  }
  return v;
}

void set_requires_grad(torch::nn::Module& module, bool flag) {
  for (auto& p : module.parameters()) {
    p.requires_grad_(flag);
  }
}

}  // namespace

torch::Tensor encode_source(TrainState& state, const uvatlas::PartialTexture& source_texture) {
  if (!state.spec().uses_featurenet) {
    auto colour = source_texture.colour;
    return colour.dim() == 3 ? colour.unsqueeze(0) : colour;
  }
  auto input = featurenet_input(state, source_texture);
  if (state.spec().two_phase && !in_inpainting_phase(state)) {
    torch::NoGradGuard frozen;
    return state.featurenet()->forward(input);
  }
  return state.featurenet()->forward(input);
}

torch::Tensor generator_input(TrainState& state, const torch::Tensor& encoding, const sampling::SamplingGrid& grid,
                              std::span<const uvatlas::IuvMap> target_iuvs) {
  auto rendered = sampling::render_feature_image(encoding, grid);
  if (!state.spec().pose_condition) {
    return rendered;
  }
  std::vector<torch::Tensor> poses;
  for (const auto& iuv : target_iuvs) {
    poses.push_back(encode_pose(iuv).to(rendered.scalar_type()));
  }
  return torch::cat({rendered, torch::stack(poses)}, 1);
}

PipelineOutput forward_pipeline(const Batch& batch, TrainState& state) {
  PipelineOutput out;
  auto encoding = encode_source(state, batch.source_texture);
  if (state.spec().uses_featurenet) {
    out.atlas = encoding;
  }
  out.feature_image = generator_input(state, encoding, batch.target_grid, batch.target_iuvs);
  out.generated = state.rendernet()->forward(out.feature_image);
  return out;
}

StepLosses train_step(const Batch& batch, TrainState& state) {
  const auto& cfg = state.config().loss;
  const int64_t step = state.step();
  StepLosses result;

  if (in_inpainting_phase(state)) {
    auto atlas = state.featurenet()->forward(featurenet_input(state, batch.source_texture));
    auto tex = losses::inpainting_loss(atlas, batch.source_texture, batch.target_texture);
    result.tex = checked(tex, "L_tex", step);
    result.total_g = result.tex;
    auto& opt = state.generator_optimizer();
    opt.zero_grad();
    if (tex.requires_grad()) {
      tex.backward();
      opt.step();
    }
  } else {
    auto& disc = state.discriminator();
    set_requires_grad(*disc, false);
    auto out = forward_pipeline(batch, state);
    auto zero = torch::zeros({}, out.generated.options());
    losses::GeneratorTerms terms{zero, zero, zero, zero};

    if (cfg.lambda_vgg > 0.0) {
      terms.perceptual = losses::perceptual_loss(out.generated, batch.target_images, *state.perceptual_backbone);
      result.perceptual = checked(terms.perceptual, "L_p", step);
    }
    if (cfg.lambda_face > 0.0) {
      terms.face = losses::face_identity_loss(out.generated, batch.target_images, batch.target_iuvs,
                                              *state.face_embedder, cfg);
      result.face = checked(terms.face, "L_face", step);
    }
    if (state.spec().texture_loss && cfg.lambda_tex > 0.0 && out.atlas.defined()) {
      terms.tex = losses::inpainting_loss(out.atlas, batch.source_texture, batch.target_texture);
      result.tex = checked(terms.tex, "L_tex", step);
    }
    if (cfg.lambda_gan > 0.0) {
      terms.adv = losses::adversarial_g_loss(disc->forward(out.feature_image.detach(), out.generated));
      result.adv = checked(terms.adv, "L_adv", step);
    }
    auto total = losses::total_generator_loss(terms, cfg);
    result.total_g = checked(total, "L_G", step);

    auto& opt_g = state.generator_optimizer();
    opt_g.zero_grad();
    if (total.requires_grad()) {
      total.backward();
      opt_g.step();
    }

    set_requires_grad(*disc, true);
    if (cfg.lambda_gan > 0.0) {
      auto condition = out.feature_image.detach();
      auto real = disc->forward(condition, batch.target_images);
      auto fake = disc->forward(condition, out.generated.detach());
      auto d_loss = losses::adversarial_d_loss(real, fake);
      result.d = checked(d_loss, "L_D", step);
      auto& opt_d = state.discriminator_optimizer();
      opt_d.zero_grad();
      d_loss.backward();
      opt_d.step();
    }
  }

  state.set_step(step + 1);
  auto& running = state.running_losses();
  const auto values = result.values();
  for (size_t i = 0; i < running.size(); ++i) {
    running[i] = step == 0 ? values[i] : 0.98 * running[i] + 0.02 * values[i];
  }
  return result;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void run_training(TrainState& state, const PairDataset& data, const LoopOptions& options) {
  std::filesystem::create_directories(options.run_dir);
  const auto log_path = options.run_dir / "losses.csv";
  const bool fresh = !std::filesystem::exists(log_path) || std::filesystem::file_size(log_path) == 0;
  std::ofstream log(log_path, std::ios::app);
  if (!log) {
    throw DataError("cannot open " + log_path.string());
  }
  if (fresh) {
    log << "step";
    for (const char* name : StepLosses::kNames) {
      log << "," << name;
    }
    log << "\n";
  }

  const auto& train = state.config().train;
  const int64_t end = options.until_step >= 0 ? std::min(options.until_step, train.total_steps) : train.total_steps;
  while (state.step() < end) {
    const auto indices = data.batch_indices(state.step(), train.batch_size, train.seed);
    std::vector<const PreparedPair*> ptrs;
    for (size_t i : indices) {
      ptrs.push_back(&data[i]);
    }
    const auto batch = make_batch(ptrs, state.lookup());
    const auto losses = train_step(batch, state);
    const int64_t s = state.step();

    if (options.log_every > 0 && s % options.log_every == 0) {
      log << s;
      for (double v : losses.values()) {
        log << "," << shortest(v);
      }
      log << "\n";
      log.flush();
      if (options.on_log) {
        options.on_log(s, losses);
      }
    }
    if (options.on_sample && options.sample_every > 0 && s % options.sample_every == 0) {
      torch::NoGradGuard no_grad;
      auto out = forward_pipeline(batch, state);
      options.on_sample(state, batch, out);
    }
    if ((options.checkpoint_every > 0 && s % options.checkpoint_every == 0) || s == end) {
      write_run_checkpoint(state, options.run_dir);
    }
  }
}

}  // namespace neurender::training
