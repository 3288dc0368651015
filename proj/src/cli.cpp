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

#include "neurender/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "neurender/applications.hpp"
#include "neurender/config.hpp"
#include "neurender/data_io.hpp"
#include "neurender/error.hpp"
#include "neurender/metrics.hpp"
#include "neurender/synthetic.hpp"
#include "neurender/training.hpp"
#include "neurender/uvatlas.hpp"

namespace neurender::cli {

namespace fs = std::filesystem;

namespace {

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& assignments,
                          const std::string& variant) {
  auto table = path.empty() ? ConfigTable{} : read_config_file(path);
  apply_env_overrides(table);
  apply_assignments(table, assignments);
  if (!variant.empty()) {
    table["train"]["variant"] = variant;
  }
  return training::resolve_run_config(run_config_from_table(table));
}

fs::path checkpoint_path(const fs::path& p) { return fs::is_directory(p) ? p / "ckpt_latest" : p; }

std::unique_ptr<training::TrainState> load_trained(const std::string& ckpt, const std::string& config_path) {
  std::optional<RunConfig> expected;
  if (!config_path.empty()) {
    expected = load_run_config(config_path, {}, "");
  }
  auto state = training::load_checkpoint(checkpoint_path(ckpt), expected ? &*expected : nullptr);
  applications::require_trained(*state);
  return state;
}

int image_size_for(const training::TrainState& state, int requested) {
  return requested > 0 ? requested : state.config().data.image_size;
}

// Unobserved texels are tinted so the mask reads at a glance.
torch::Tensor texture_preview(const uvatlas::PartialTexture& texture) {
  auto tint = torch::tensor({0.5F, -0.5F, 0.5F}).view({3, 1, 1}).expand_as(texture.colour);
  return torch::where(texture.mask.unsqueeze(0), texture.colour, tint);
}

torch::Tensor feature_preview(const torch::Tensor& feature_image, const torch::Tensor& projection) {
  auto projected = torch::einsum("cd,dhw->chw", {projection.to(feature_image.scalar_type()), feature_image});
  const double scale = projected.abs().max().item<double>();
  return scale > 0 ? projected / scale : projected;
}

void write_sample_grid(training::TrainState& state, const training::Batch& batch,
                       const training::PipelineOutput& out, const fs::path& dir) {
  auto preview = feature_preview(out.feature_image[0].detach(), state.preview_projection());
  auto grid = torch::cat({batch.source_images[0], preview, out.generated[0].detach(), batch.target_images[0]}, 2);
  char name[32];
  std::snprintf(name, sizeof(name), "step_%07lld.png", static_cast<long long>(state.step()));
  data_io::save_image(grid.clamp(-1, 1), dir / name);
}

void add_config_flags(CLI::App* cmd, std::string& config, std::vector<std::string>& sets) {
  cmd->add_option("--config", config, "INI run configuration");
  cmd->add_option("--set", sets, "Override as section.key=value (repeatable)");
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Single-image human re-rendering through a learned UV feature atlas", "neurender"};
  app.require_subcommand(1);

  // extract-texture
  std::string image_path;
  std::string iuv_path;
  std::string out_path;
  std::string layout_path;
  int image_size = 0;
  int atlas_size = 256;
  auto* extract = app.add_subcommand("extract-texture", "Scatter an image into a partial UV texture");
  extract->add_option("--image", image_path, "Source image")->required();
  extract->add_option("--iuv", iuv_path, "IUV container of the image")->required();
  extract->add_option("--out", out_path, "Output texture container (.h5)")->required();
  extract->add_option("--layout", layout_path, "Atlas layout file (default grid when omitted)");
  extract->add_option("--atlas-size", atlas_size, "Atlas side for the default grid");
  extract->add_option("--size", image_size, "Resize inputs to this side (0 keeps native size)");

  // train
  std::string config_path;
  std::vector<std::string> sets;
  std::string resume;
  std::string variant;
  int64_t until_step = -1;
  auto* train = app.add_subcommand("train", "Train a variant end to end");
  add_config_flags(train, config_path, sets);
  train->add_option("--resume", resume, "Checkpoint file or run directory to continue from");
  train->add_option("--variant", variant, "full, no_int, ip, warp or warp_cond");
  train->add_option("--until-step", until_step, "Stop once the step counter reaches this value");

  // infer
  std::string ckpt;
  std::string source_image;
  std::string source_iuv;
  std::string target_iuv;
  auto* infer = app.add_subcommand("infer", "Render a source person in a target pose");
  infer->add_option("--ckpt", ckpt, "Checkpoint file or run directory")->required();
  infer->add_option("--source-image", source_image)->required();
  infer->add_option("--source-iuv", source_iuv)->required();
  infer->add_option("--target-iuv", target_iuv)->required();
  infer->add_option("--out", out_path, "Output image")->default_val("out.png");
  infer->add_option("--config", config_path, "Configuration the checkpoint must match");
  infer->add_option("--size", image_size, "Input side (default: the checkpoint's data.image_size)");

  // garment
  std::string garment_image;
  std::string garment_iuv;
  std::string preset = "default";
  auto* garment = app.add_subcommand("garment", "Dress the body person in the garment person's clothes");
  garment->add_option("--ckpt", ckpt)->required();
  garment->add_option("--body-image", source_image)->required();
  garment->add_option("--body-iuv", source_iuv)->required();
  garment->add_option("--garment-image", garment_image)->required();
  garment->add_option("--garment-iuv", garment_iuv)->required();
  garment->add_option("--parts-preset", preset, "default or none")->default_val("default");
  garment->add_option("--out", out_path)->default_val("garment.png");
  garment->add_option("--config", config_path);
  garment->add_option("--size", image_size);

  // motion
  std::string poses_dir;
  std::string out_dir;
  std::string encoder;
  std::string video;
  double fps = 25.0;
  auto* motion = app.add_subcommand("motion", "Drive a source person with a pose sequence");
  motion->add_option("--ckpt", ckpt)->required();
  motion->add_option("--source-image", source_image)->required();
  motion->add_option("--source-iuv", source_iuv)->required();
  motion->add_option("--poses-dir", poses_dir, "Directory of IUV containers, one per frame")->required();
  motion->add_option("--out-dir", out_dir, "Frame output directory")->default_val("frames");
  motion->add_option("--fps", fps);
  motion->add_option("--encoder", encoder, "Video encoder command with {frames}, {fps} and {output}");
  motion->add_option("--video", video, "Video file produced by --encoder");
  motion->add_option("--config", config_path);
  motion->add_option("--size", image_size);

  // eval
  std::string pairs_path;
  std::string data_root;
  bool identity_generator = false;
  auto* eval = app.add_subcommand("eval", "Score generated images against ground truth");
  eval->add_option("--pairs", pairs_path, "Pair list CSV")->required();
  eval->add_option("--root", data_root, "Dataset root (default: the pair list's directory)");
  auto* ckpt_opt = eval->add_option("--ckpt", ckpt, "Checkpoint file or run directory");
  eval->add_flag("--identity-generator", identity_generator, "Score the source image itself")->excludes(ckpt_opt);
  eval->add_option("--out-dir", out_dir, "Report directory")->default_val("eval");
  eval->add_option("--config", config_path, "Backbone settings when no checkpoint is given");
  eval->add_option("--size", image_size);

  // synth
  int people = 3;
  int synth_size = 64;
  uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a procedural dataset and a starter configuration");
  synth->add_option("--out", out_dir, "Dataset root")->required();
  synth->add_option("--people", people)->default_val(3);
  synth->add_option("--size", synth_size)->default_val(64);
  synth->add_option("--seed", seed)->default_val(0);

  // layout
  int layout_cols = 4;
  int layout_rows = 6;
  auto* layout = app.add_subcommand("layout", "Write the default atlas layout");
  layout->add_option("--out", out_path)->required();
  layout->add_option("--atlas-size", atlas_size)->default_val(256);
  layout->add_option("--cols", layout_cols)->default_val(4);
  layout->add_option("--rows", layout_rows)->default_val(6);

  // validate
  std::string split = "train";
  auto* validate = app.add_subcommand("validate", "Check a dataset manifest");
  add_config_flags(validate, config_path, sets);
  validate->add_option("--split", split)->check(CLI::IsMember({"train", "test"}))->default_val("train");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*extract) {
      const auto lookup = uvatlas::build_atlas_lookup(
          layout_path.empty() ? uvatlas::AtlasLayout::grid(atlas_size, atlas_size) : uvatlas::read_layout(layout_path));
      const auto image = data_io::load_image(image_path, image_size);
      const auto iuv = data_io::load_iuv(iuv_path, image_size).iuv;
      const auto texture = uvatlas::extract_partial_texture(image, iuv, lookup);
      if (texture.observed() == 0) {
        std::cerr << "warning: " << iuv_path << " has no foreground; the texture is empty\n";
      }
      uvatlas::save_partial_texture(texture, out_path);
      fs::path preview = out_path;
      preview.replace_extension("").concat("_preview.png");
      data_io::save_image(texture_preview(texture), preview);
      std::cout << "wrote " << out_path << " (" << texture.observed() << " texels observed) and " << preview.string()
                << "\n";
    } else if (*train) {
      const auto config = load_run_config(config_path, sets, variant);
      if (config.data.root.empty()) {
        throw ConfigError("[data] root is not set");
      }
      const fs::path run_dir = config.run_dir;
      fs::create_directories(run_dir);
      {
        std::ofstream out(run_dir / "config.ini");
        out << format_run_config(config);
      }
      std::unique_ptr<training::TrainState> state;
      if (!resume.empty()) {
        state = training::load_checkpoint(checkpoint_path(resume), &config);
        std::cout << "resuming from step " << state->step() << "\n";
      } else {
        state = std::make_unique<training::TrainState>(config);
      }
      const auto manifest = data_io::DatasetManifest::from_config(config.data, data_io::Split::kTrain);
      const auto pairs = data_io::load_pairs(manifest);
      if (pairs.empty()) {
        throw DataError("no training pairs in " + manifest.pair_list_path().string());
      }
      const training::PairDataset dataset(pairs, state->lookup());
      training::LoopOptions options;
      options.run_dir = run_dir;
      options.log_every = config.logging.log_every;
      options.sample_every = config.logging.sample_every;
      options.checkpoint_every = config.logging.checkpoint_every;
      options.until_step = until_step;
      options.on_log = [](int64_t step, const training::StepLosses& l) {
        std::cout << "step " << step;
        const auto values = l.values();
        for (size_t i = 0; i < values.size(); ++i) {
          std::cout << " " << training::StepLosses::kNames[i] << "=" << values[i];
        }
        std::cout << "\n";
      };
      options.on_sample = [&](training::TrainState& s, const training::Batch& b, const training::PipelineOutput& o) {
        write_sample_grid(s, b, o, run_dir / "samples");
      };
      training::run_training(*state, dataset, options);
      std::cout << "finished at step " << state->step() << "\n";
    } else if (*infer) {
      auto state = load_trained(ckpt, config_path);
      const int size = image_size_for(*state, image_size);
      const auto out = applications::pose_transfer(*state, data_io::load_image(source_image, size),
                                                   data_io::load_iuv(source_iuv, size).iuv,
                                                   data_io::load_iuv(target_iuv, size).iuv);
      data_io::save_image(out, out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (*garment) {
      const auto spec = applications::GarmentSpec::preset(preset);
      auto state = load_trained(ckpt, config_path);
      const int size = image_size_for(*state, image_size);
      const auto out = applications::garment_transfer(
          *state, data_io::load_image(source_image, size), data_io::load_iuv(source_iuv, size).iuv,
          data_io::load_image(garment_image, size), data_io::load_iuv(garment_iuv, size).iuv, spec);
      data_io::save_image(out, out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (*motion) {
      auto state = load_trained(ckpt, config_path);
      const int size = image_size_for(*state, image_size);
      auto poses = applications::load_pose_sequence(poses_dir, size);
      poses.frame_rate = fps;
      const auto frames = applications::motion_transfer(*state, data_io::load_image(source_image, size),
                                                        data_io::load_iuv(source_iuv, size).iuv, poses);
      applications::write_frames(frames, out_dir);
      std::cout << "wrote " << frames.size() << " frame(s) to " << out_dir << "\n";
      if (!encoder.empty()) {
        if (video.empty()) {
          throw ConfigError("--encoder needs --video");
        }
        applications::mux_frames(encoder, out_dir, fps, video);
      }
    } else if (*eval) {
      if (!identity_generator && ckpt.empty()) {
        throw ConfigError("eval needs --ckpt or --identity-generator");
      }
      std::unique_ptr<training::TrainState> state;
      RunConfig config;
      if (!ckpt.empty()) {
        state = load_trained(ckpt, config_path);
        config = state->config();
      } else if (!config_path.empty()) {
        config = load_run_config(config_path, {}, "");
      }
      const int size = image_size > 0 ? image_size : config.data.image_size;
      auto backbone = losses::make_backbone(config.backbones.lpips, config.loss.perceptual_layers);
      metrics::LpipsWeights weights;
      if (!config.backbones.lpips_weights.empty()) {
        weights = metrics::LpipsWeights::read(config.backbones.lpips_weights);
      } else if (config.backbones.lpips == "identity") {
        weights = metrics::LpipsWeights::unit(*backbone, size);
      } else {
        throw ConfigError("[backbones] lpips_weights is required for the " + config.backbones.lpips + " backbone");
      }
      metrics::Generator generate;
      if (identity_generator) {
        generate = [](const training::TrainPair& p) { return p.source_image; };
      } else {
        generate = [&](const training::TrainPair& p) {
          return applications::pose_transfer(*state, p.source_image, p.source_iuv, p.target_iuv);
        };
      }
      const fs::path root = data_root.empty() ? fs::path(pairs_path).parent_path() : fs::path(data_root);
      const auto report =
          metrics::evaluate_pairs(data_io::read_pair_list(pairs_path), root, size, generate, *backbone, weights);
      fs::create_directories(out_dir);
      report.write_csv(fs::path(out_dir) / "report.csv");
      const auto summary = report.summary();
      std::ofstream(fs::path(out_dir) / "summary.txt") << summary;
      std::cout << summary;
    } else if (*synth) {
      synthetic::write_dataset(out_dir, people, synth_size, seed);
      RunConfig demo;
      demo.data.root = fs::absolute(out_dir).string();
      demo.data.image_size = synth_size;
      demo.model.atlas_height = demo.model.atlas_width = synth_size;
      demo.model.featurenet.base_width = 16;
      demo.model.featurenet.depth = 3;
      demo.model.rendernet.base_width = 16;
      demo.model.rendernet.residual_blocks = 2;
      demo.model.discriminator.base_width = 16;
      demo.train.total_steps = 200;
      demo.logging.sample_every = 50;
      demo.logging.checkpoint_every = 100;
      demo.run_dir = (fs::absolute(out_dir) / "run").string();
      demo = training::resolve_run_config(demo);
      std::ofstream(fs::path(out_dir) / "demo.ini") << format_run_config(demo);
      std::cout << "wrote " << people << " synthetic people to " << out_dir << " and " << out_dir << "/demo.ini\n";
    } else if (*layout) {
      uvatlas::write_layout(uvatlas::AtlasLayout::grid(atlas_size, atlas_size, layout_cols, layout_rows), out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (*validate) {
      const auto config = load_run_config(config_path, sets, "");
      const auto manifest = data_io::DatasetManifest::from_config(
          config.data, split == "test" ? data_io::Split::kTest : data_io::Split::kTrain);
      const auto report = data_io::validate_manifest(manifest);
      for (const auto& p : report.problems) {
        std::cout << p << "\n";
      }
      std::cout << report.checked << " row(s) checked, " << report.failed << " failed\n";
      return report.ok() ? kExitOk : kExitData;
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ArgumentError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

}  // namespace neurender::cli
