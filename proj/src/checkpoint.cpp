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

#include <sstream>

#include "neurender/error.hpp"
#include "neurender/training.hpp"

namespace neurender::training {

namespace {

using torch::serialize::InputArchive;
using torch::serialize::OutputArchive;

const std::vector<std::string> kModelSections{"atlas", "featurenet", "rendernet", "discriminator"};

std::string read_string(InputArchive& ar, const std::string& key, const std::filesystem::path& path) {
  c10::IValue value;
  if (!ar.try_read(key, value) || !value.isString()) {
    throw DataError(path.string() + ": checkpoint lacks '" + key + "'");
  }
  return value.toStringRef();
}

int64_t read_int(InputArchive& ar, const std::string& key, const std::filesystem::path& path) {
  c10::IValue value;
  if (!ar.try_read(key, value) || !value.isInt()) {
    throw DataError(path.string() + ": checkpoint lacks '" + key + "'");
  }
  return value.toInt();
}

void check_compatible(const RunConfig& stored, const RunConfig& expected) {
  const auto a = to_table(resolve_run_config(stored));
  const auto b = to_table(resolve_run_config(expected));
  if (a.at("train").at("variant") != b.at("train").at("variant")) {
    throw ConfigError("checkpoint/config mismatch: [train] variant is '" + a.at("train").at("variant") +
                      "' in the checkpoint but '" + b.at("train").at("variant") + "' in the config");
  }
  for (const auto& section : kModelSections) {
    for (const auto& [key, value] : a.at(section)) {
      if (section == "atlas" && key == "layout_file") {
        continue;  // the layout itself travels inside the checkpoint
      }
      const auto& other = b.at(section).at(key);
      if (value != other) {
        throw ConfigError("checkpoint/config mismatch: [" + section + "] " + key + " is " + value +
                          " in the checkpoint but " + other + " in the config");
      }
    }
  }
}

}  // namespace

void save_checkpoint(TrainState& state, const std::filesystem::path& path) {
  OutputArchive ar;
  ar.write("format_version", c10::IValue(kCheckpointVersion));
  ar.write("run_config", c10::IValue(format_run_config(state.config())));
  ar.write("layout", c10::IValue(uvatlas::format_layout(state.lookup().layout())));
  ar.write("step", c10::IValue(state.step()));

  if (state.featurenet()) {
    OutputArchive f;
    state.featurenet()->save(f);
    ar.write("featurenet", f);
  }
  OutputArchive g;
  state.rendernet()->save(g);
  ar.write("rendernet", g);
  OutputArchive d;
  state.discriminator()->save(d);
  ar.write("discriminator", d);
  OutputArchive og;
  state.generator_optimizer().save(og);
  ar.write("optimizer_g", og);
  OutputArchive od;
  state.discriminator_optimizer().save(od);
  ar.write("optimizer_d", od);

  const auto& running = state.running_losses();
  ar.write("running_losses", torch::tensor(std::vector<double>(running.begin(), running.end()), torch::kFloat64));
  ar.write("preview_projection", state.preview_projection());

  try {
    ar.save_to(path.string());
  } catch (const c10::Error& e) {
    throw DataError("cannot write checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
}

std::unique_ptr<TrainState> load_checkpoint(const std::filesystem::path& path, const RunConfig* expected) {
  if (!std::filesystem::exists(path)) {
    throw DataError("checkpoint not found: " + path.string());
  }
  InputArchive ar;
  try {
    ar.load_from(path.string());
  } catch (const c10::Error& e) {
    throw DataError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  const int64_t version = read_int(ar, "format_version", path);
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": checkpoint format v" + std::to_string(version) + " is not supported (expected v" +
                    std::to_string(kCheckpointVersion) + ")");
  }
  const auto stored = parse_run_config(read_string(ar, "run_config", path));
  const auto layout = uvatlas::parse_layout(read_string(ar, "layout", path));
  if (expected != nullptr) {
    check_compatible(stored, *expected);
  }
  auto state = std::make_unique<TrainState>(expected != nullptr ? *expected : stored, layout);

  try {
    if (state->featurenet()) {
      InputArchive f;
      ar.read("featurenet", f);
      state->featurenet()->load(f);
    }
    InputArchive g;
    ar.read("rendernet", g);
    state->rendernet()->load(g);
    InputArchive d;
    ar.read("discriminator", d);
    state->discriminator()->load(d);
    InputArchive og;
    ar.read("optimizer_g", og);
    state->generator_optimizer().load(og);
    InputArchive od;
    ar.read("optimizer_d", od);
    state->discriminator_optimizer().load(od);

    torch::Tensor running;
    ar.read("running_losses", running);
    auto ra = running.accessor<double, 1>();
    for (size_t i = 0; i < state->running_losses().size(); ++i) {
      state->running_losses()[i] = ra[static_cast<int64_t>(i)];
    }
    torch::Tensor projection;
    ar.read("preview_projection", projection);
    state->set_preview_projection(projection);
  } catch (const c10::Error& e) {
    throw ConfigError("checkpoint " + path.string() + " does not match its networks: " + e.what_without_backtrace());
  }
  state->set_step(read_int(ar, "step", path));
  return state;
}

std::filesystem::path write_run_checkpoint(TrainState& state, const std::filesystem::path& run_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(run_dir);
  const std::string name = "ckpt_" + std::to_string(state.step());
  const auto path = run_dir / name;
  save_checkpoint(state, path);
  const auto latest = run_dir / "ckpt_latest";
  std::error_code ec;
  fs::remove(latest, ec);
  fs::create_symlink(name, latest, ec);
  if (ec) {
    fs::copy_file(path, latest, fs::copy_options::overwrite_existing);
  }
  return path;
}

}  // namespace neurender::training
