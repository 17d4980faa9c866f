/* Copyright 2026 The kgalign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "kgalign/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace kgalign {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int64_t v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + value + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") {
    cfg.train.seed = static_cast<uint64_t>(parse_int(key, value));
  } else if (key == "precision") {
    if (value == "f32") {
      cfg.precision = Precision::kFloat32;
    } else if (value == "f64") {
      cfg.precision = Precision::kFloat64;
    } else {
      throw ConfigError("config key 'precision': expected f32 or f64, got '" + value + "'");
    }
  } else if (key == "data.source") {
    if (value == "openea") {
      cfg.data_source = DataSource::kOpenEa;
    } else if (value == "synthetic") {
      cfg.data_source = DataSource::kSynthetic;
    } else {
      throw ConfigError("config key 'data.source': expected openea or synthetic, got '" +
                        value + "'");
    }
  } else if (key == "data.path") {
    cfg.data_path = value;
  } else if (key == "data.fold") {
    cfg.fold = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "synthetic.entities") {
    cfg.synthetic.n_entities = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "synthetic.relations") {
    cfg.synthetic.n_relations = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "synthetic.avg_degree") {
    cfg.synthetic.avg_degree = parse_double(key, value);
  } else if (key == "synthetic.perturb") {
    cfg.synthetic.perturb_ratio = parse_double(key, value);
  } else if (key == "train.lr") {
    cfg.train.lr = parse_double(key, value);
  } else if (key == "train.weight_decay") {
    cfg.train.weight_decay = parse_double(key, value);
  } else if (key == "train.dropout") {
    cfg.train.dropout = parse_double(key, value);
  } else if (key == "train.layers") {
    cfg.train.layers = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "train.negatives") {
    cfg.train.negatives_per_side = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "train.epsilon") {
    cfg.train.epsilon = parse_double(key, value);
  } else if (key == "train.margin") {
    cfg.train.margin = parse_double(key, value);
  } else if (key == "train.lambda") {
    cfg.train.lambda = parse_double(key, value);
  } else if (key == "train.d_ent") {
    cfg.train.d_ent = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "train.d_rel") {
    cfg.train.d_rel = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "train.d_proj") {
    cfg.train.d_proj = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "train.pr") {
    cfg.train.pr = parse_double(key, value);
  } else if (key == "train.refresh_period") {
    cfg.train.refresh_period = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "train.eval_period") {
    cfg.train.eval_period = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "train.max_epochs") {
    cfg.train.max_epochs = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "train.patience") {
    cfg.train.patience = static_cast<int32_t>(parse_int(key, value));
  } else if (key == "ablation.relation_channel") {
    cfg.train.use_relation_channel = parse_bool(key, value);
  } else if (key == "ablation.augmented_alignment") {
    cfg.train.use_augmented_alignment = parse_bool(key, value);
  } else if (key == "ablation.contrastive") {
    cfg.train.use_contrastive = parse_bool(key, value);
  } else if (key == "output.dir") {
    cfg.output_dir = value;
  } else if (key == "allow_any_pr") {
    cfg.allow_any_pr = parse_bool(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

namespace {

RunConfig parse_config_stream(std::istream& in, const std::string& origin) {
  RunConfig cfg;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
    }
    set_config_key(cfg, key, value);
  }
  return cfg;
}

}  // namespace

RunConfig parse_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  return parse_config_stream(in, file.string());
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  return parse_config_stream(in, origin);
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + item + "' is not key=value");
    }
    set_config_key(cfg, trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  os << "ablation.augmented_alignment = " << (train.use_augmented_alignment ? "true" : "false")
     << "\n";
  os << "ablation.contrastive = " << (train.use_contrastive ? "true" : "false") << "\n";
  os << "ablation.relation_channel = " << (train.use_relation_channel ? "true" : "false")
     << "\n";
  os << "allow_any_pr = " << (allow_any_pr ? "true" : "false") << "\n";
  os << "data.fold = " << fold << "\n";
  if (!data_path.empty()) os << "data.path = " << data_path << "\n";
  os << "data.source = " << (data_source == DataSource::kOpenEa ? "openea" : "synthetic")
     << "\n";
  os << "output.dir = " << output_dir << "\n";
  os << "precision = " << (precision == Precision::kFloat64 ? "f64" : "f32") << "\n";
  os << "seed = " << train.seed << "\n";
  os << "synthetic.avg_degree = " << format_double(synthetic.avg_degree) << "\n";
  os << "synthetic.entities = " << synthetic.n_entities << "\n";
  os << "synthetic.perturb = " << format_double(synthetic.perturb_ratio) << "\n";
  os << "synthetic.relations = " << synthetic.n_relations << "\n";
  os << "train.d_ent = " << train.d_ent << "\n";
  os << "train.d_proj = " << train.d_proj << "\n";
  os << "train.d_rel = " << train.d_rel << "\n";
  os << "train.dropout = " << format_double(train.dropout) << "\n";
  os << "train.epsilon = " << format_double(train.epsilon) << "\n";
  os << "train.eval_period = " << train.eval_period << "\n";
  os << "train.lambda = " << format_double(train.lambda) << "\n";
  os << "train.layers = " << train.layers << "\n";
  os << "train.lr = " << format_double(train.lr) << "\n";
  os << "train.margin = " << format_double(train.margin) << "\n";
  os << "train.max_epochs = " << train.max_epochs << "\n";
  os << "train.negatives = " << train.negatives_per_side << "\n";
  os << "train.patience = " << train.patience << "\n";
  os << "train.pr = " << format_double(train.pr) << "\n";
  os << "train.refresh_period = " << train.refresh_period << "\n";
  os << "train.weight_decay = " << format_double(train.weight_decay) << "\n";
  return os.str();
}

void RunConfig::validate() const {
  train.validate();
  if (!allow_any_pr) {
    const double allowed[] = {0.0, 0.05, 0.1, 0.15};
    bool ok = false;
    for (const double v : allowed) {
      if (std::abs(train.pr - v) < 1e-12) ok = true;
    }
    if (!ok) {
      throw ConfigError("train.pr = " + format_double(train.pr) +
                        " is outside the searched set {0, 0.05, 0.1, 0.15}; "
                        "pass allow_any_pr = true to override");
    }
  }
  if (fold < 1 || fold > 5) throw ConfigError("data.fold must be in [1, 5]");
  if (data_source == DataSource::kOpenEa && data_path.empty()) {
    throw ConfigError("data.source = openea requires data.path");
  }
}

}  // namespace kgalign
