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

#include "neurender/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "neurender/error.hpp"

extern char** environ;

namespace neurender {

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kFull:
      return "full";
    case Variant::kNoInt:
      return "no_int";
    case Variant::kIp:
      return "ip";
    case Variant::kWarp:
      return "warp";
    case Variant::kWarpCond:
      return "warp_cond";
  }
  return "full";
}

Variant parse_variant(std::string_view name) {
  if (name == "full") return Variant::kFull;
  if (name == "no_int") return Variant::kNoInt;
  if (name == "ip") return Variant::kIp;
  if (name == "warp") return Variant::kWarp;
  if (name == "warp_cond") return Variant::kWarpCond;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, no_int, ip, warp or warp_cond)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw ConfigError("train.learning_rate must be positive");
  }
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (weight_decay < 0.0) {
    throw ConfigError("train.weight_decay must be non-negative");
  }
  if (batch_size < 1) {
    throw ConfigError("train.batch_size must be at least 1");
  }
  if (total_steps < 0 || ip_stage1_steps < 0) {
    throw ConfigError("step counts must be non-negative");
  }
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ConfigError(where + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(where + ": expected a boolean, got '" + text + "'");
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

// Builders for the common field shapes. `Access` returns a reference into
// the config.
template <typename Access>
Field real_field(std::string section, std::string key, Access access) {
  return {section, key, [access](const RunConfig& c) { return fmt_double(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& v, const std::string& where) {
            access(c) = parse_number<double>(v, where);
          }};
}

template <typename Int, typename Access>
Field int_field(std::string section, std::string key, Access access) {
  return {section, key, [access](const RunConfig& c) { return std::to_string(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& v, const std::string& where) {
            access(c) = parse_number<Int>(v, where);
          }};
}

template <typename Access>
Field bool_field(std::string section, std::string key, Access access) {
  return {section, key,
          [access](const RunConfig& c) { return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [access](RunConfig& c, const std::string& v, const std::string& where) { access(c) = parse_bool(v, where); }};
}

template <typename Access>
Field string_field(std::string section, std::string key, Access access) {
  return {section, key, [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); },
          [access](RunConfig& c, const std::string& v, const std::string&) { access(c) = v; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back(string_field("run", "run_dir", [](RunConfig& c) -> std::string& { return c.run_dir; }));

    f.push_back(real_field("train", "learning_rate", [](RunConfig& c) -> double& { return c.train.learning_rate; }));
    f.push_back(real_field("train", "adam_beta1", [](RunConfig& c) -> double& { return c.train.adam_beta1; }));
    f.push_back(real_field("train", "adam_beta2", [](RunConfig& c) -> double& { return c.train.adam_beta2; }));
    f.push_back(real_field("train", "adam_eps", [](RunConfig& c) -> double& { return c.train.adam_eps; }));
    f.push_back(real_field("train", "weight_decay", [](RunConfig& c) -> double& { return c.train.weight_decay; }));
    f.push_back(int_field<int>("train", "batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; }));
    f.push_back(
        int_field<int64_t>("train", "total_steps", [](RunConfig& c) -> int64_t& { return c.train.total_steps; }));
    f.push_back(int_field<uint64_t>("train", "seed", [](RunConfig& c) -> uint64_t& { return c.train.seed; }));
    f.push_back({"train", "variant", [](const RunConfig& c) { return to_string(c.train.variant); },
                 [](RunConfig& c, const std::string& v, const std::string&) { c.train.variant = parse_variant(v); }});
    f.push_back(int_field<int64_t>("train", "ip_stage1_steps",
                                   [](RunConfig& c) -> int64_t& { return c.train.ip_stage1_steps; }));

    f.push_back(real_field("loss", "lambda_gan", [](RunConfig& c) -> double& { return c.loss.lambda_gan; }));
    f.push_back(real_field("loss", "lambda_vgg", [](RunConfig& c) -> double& { return c.loss.lambda_vgg; }));
    f.push_back(real_field("loss", "lambda_face", [](RunConfig& c) -> double& { return c.loss.lambda_face; }));
    f.push_back(real_field("loss", "lambda_tex", [](RunConfig& c) -> double& { return c.loss.lambda_tex; }));
    f.push_back({"loss", "perceptual_layers",
                 [](const RunConfig& c) {
                   std::string s;
                   for (const auto& l : c.loss.perceptual_layers) {
                     s += (s.empty() ? "" : ",") + l;
                   }
                   return s;
                 },
                 [](RunConfig& c, const std::string& v, const std::string&) {
                   c.loss.perceptual_layers = split_list(v);
                 }});
    f.push_back({"loss", "face_parts",
                 [](const RunConfig& c) {
                   std::string s;
                   for (int p : c.loss.face_parts) {
                     s += (s.empty() ? "" : ",") + std::to_string(p);
                   }
                   return s;
                 },
                 [](RunConfig& c, const std::string& v, const std::string& where) {
                   c.loss.face_parts.clear();
                   for (const auto& item : split_list(v)) {
                     c.loss.face_parts.insert(parse_number<int>(item, where));
                   }
                 }});
    f.push_back(
        real_field("loss", "face_crop_padding", [](RunConfig& c) -> double& { return c.loss.face_crop_padding; }));

    f.push_back(int_field<int>("atlas", "height", [](RunConfig& c) -> int& { return c.model.atlas_height; }));
    f.push_back(int_field<int>("atlas", "width", [](RunConfig& c) -> int& { return c.model.atlas_width; }));
    f.push_back(string_field("atlas", "layout_file", [](RunConfig& c) -> std::string& { return c.model.layout_file; }));

    f.push_back(int_field<int>("featurenet", "in_channels",
                               [](RunConfig& c) -> int& { return c.model.featurenet.in_channels; }));
    f.push_back(bool_field("featurenet", "mask_channel",
                           [](RunConfig& c) -> bool& { return c.model.featurenet.mask_channel; }));
    f.push_back(int_field<int>("featurenet", "out_channels",
                               [](RunConfig& c) -> int& { return c.model.featurenet.out_channels; }));
    f.push_back(int_field<int>("featurenet", "depth", [](RunConfig& c) -> int& { return c.model.featurenet.depth; }));
    f.push_back(int_field<int>("featurenet", "base_width",
                               [](RunConfig& c) -> int& { return c.model.featurenet.base_width; }));
    f.push_back(int_field<int>("featurenet", "max_width",
                               [](RunConfig& c) -> int& { return c.model.featurenet.max_width; }));

    f.push_back(int_field<int>("rendernet", "in_channels",
                               [](RunConfig& c) -> int& { return c.model.rendernet.in_channels; }));
    f.push_back(int_field<int>("rendernet", "down_blocks",
                               [](RunConfig& c) -> int& { return c.model.rendernet.down_blocks; }));
    f.push_back(int_field<int>("rendernet", "residual_blocks",
                               [](RunConfig& c) -> int& { return c.model.rendernet.residual_blocks; }));
    f.push_back(int_field<int>("rendernet", "base_width",
                               [](RunConfig& c) -> int& { return c.model.rendernet.base_width; }));
    f.push_back(int_field<int>("rendernet", "max_width",
                               [](RunConfig& c) -> int& { return c.model.rendernet.max_width; }));

    f.push_back(int_field<int>("discriminator", "in_channels",
                               [](RunConfig& c) -> int& { return c.model.discriminator.in_channels; }));
    f.push_back(
        int_field<int>("discriminator", "scales", [](RunConfig& c) -> int& { return c.model.discriminator.scales; }));
    f.push_back(
        int_field<int>("discriminator", "layers", [](RunConfig& c) -> int& { return c.model.discriminator.layers; }));
    f.push_back(int_field<int>("discriminator", "base_width",
                               [](RunConfig& c) -> int& { return c.model.discriminator.base_width; }));
    f.push_back(int_field<int>("discriminator", "max_width",
                               [](RunConfig& c) -> int& { return c.model.discriminator.max_width; }));

    f.push_back(string_field("data", "root", [](RunConfig& c) -> std::string& { return c.data.root; }));
    f.push_back(string_field("data", "train_pairs", [](RunConfig& c) -> std::string& { return c.data.train_pairs; }));
    f.push_back(string_field("data", "test_pairs", [](RunConfig& c) -> std::string& { return c.data.test_pairs; }));
    f.push_back(int_field<int>("data", "image_size", [](RunConfig& c) -> int& { return c.data.image_size; }));

    f.push_back(
        string_field("backbones", "perceptual", [](RunConfig& c) -> std::string& { return c.backbones.perceptual; }));
    f.push_back(string_field("backbones", "face", [](RunConfig& c) -> std::string& { return c.backbones.face; }));
    f.push_back(string_field("backbones", "lpips", [](RunConfig& c) -> std::string& { return c.backbones.lpips; }));
    f.push_back(string_field("backbones", "lpips_weights",
                             [](RunConfig& c) -> std::string& { return c.backbones.lpips_weights; }));

    f.push_back(
        int_field<int64_t>("logging", "log_every", [](RunConfig& c) -> int64_t& { return c.logging.log_every; }));
    f.push_back(int_field<int64_t>("logging", "sample_every",
                                   [](RunConfig& c) -> int64_t& { return c.logging.sample_every; }));
    f.push_back(int_field<int64_t>("logging", "checkpoint_every",
                                   [](RunConfig& c) -> int64_t& { return c.logging.checkpoint_every; }));
    return f;
  }();
  return all;
}

}  // namespace

ConfigTable parse_config_text(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ConfigTable table;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: key '" + section + "' outside of a [section]");
    }
    for (const auto& [key, value] : body) {
      table[section][key] = trim(value.data());
    }
  }
  return table;
}

ConfigTable read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_env_overrides(ConfigTable& table, const std::vector<std::string>& environ_entries) {
  const std::string prefix = "NEURENDER_";
  for (const auto& entry : environ_entries) {
    if (entry.rfind(prefix, 0) != 0) {
      continue;
    }
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      continue;
    }
    std::string name = entry.substr(prefix.size(), eq - prefix.size());
    for (auto& ch : name) {
      ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    for (const auto& field : fields()) {
      if (name == field.section + "_" + field.key) {
        table[field.section][field.key] = entry.substr(eq + 1);
      }
    }
  }
}

void apply_env_overrides(ConfigTable& table) {
  std::vector<std::string> entries;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    entries.emplace_back(*e);
  }
  apply_env_overrides(table, entries);
}

void apply_assignments(ConfigTable& table, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    const auto dot = a.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw ConfigError("override '" + a + "' must look like section.key=value");
    }
    table[trim(a.substr(0, dot))][trim(a.substr(dot + 1, eq - dot - 1))] = trim(a.substr(eq + 1));
  }
}

RunConfig run_config_from_table(const ConfigTable& table) {
  RunConfig config;
  for (const auto& [section, entries] : table) {
    for (const auto& [key, value] : entries) {
      const auto it = std::find_if(fields().begin(), fields().end(),
                                   [&](const Field& f) { return f.section == section && f.key == key; });
      if (it == fields().end()) {
        throw ConfigError("config: unknown key [" + section + "] " + key);
      }
      it->set(config, value, "[" + section + "] " + key);
    }
  }
  config.train.validate();
  config.loss.validate();
  return config;
}

ConfigTable to_table(const RunConfig& config) {
  ConfigTable table;
  for (const auto& f : fields()) {
    table[f.section][f.key] = f.get(config);
  }
  return table;
}

std::string format_run_config(const RunConfig& config) {
  std::ostringstream os;
  std::string current;
  for (const auto& f : fields()) {
    if (f.section != current) {
      os << (current.empty() ? "" : "\n") << "[" << f.section << "]\n";
      current = f.section;
    }
    os << f.key << " = " << f.get(config) << "\n";
  }
  return os.str();
}

RunConfig parse_run_config(std::string_view text) { return run_config_from_table(parse_config_text(text)); }

uvatlas::AtlasLayout resolve_layout(const ModelConfig& model) {
  if (!model.layout_file.empty()) {
    auto layout = uvatlas::read_layout(model.layout_file);
    if (layout.atlas_height != model.atlas_height || layout.atlas_width != model.atlas_width) {
      throw ConfigError("layout file " + model.layout_file + " describes a " + std::to_string(layout.atlas_height) +
                        "x" + std::to_string(layout.atlas_width) + " atlas but the model expects " +
                        std::to_string(model.atlas_height) + "x" + std::to_string(model.atlas_width));
    }
    return layout;
  }
  return uvatlas::AtlasLayout::grid(model.atlas_height, model.atlas_width);
}

}  // namespace neurender
