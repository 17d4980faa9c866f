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
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/synthetic.hpp"
#include "kgalign/trainer.hpp"

namespace kgalign {

enum class Precision { kFloat32, kFloat64 };
enum class DataSource { kOpenEa, kSynthetic };

/// Full run configuration: training hyperparameters plus data selection and
/// output paths. Parsed from a line-oriented `key = value` file (UTF-8, `#`
/// comments); unknown keys are a hard error. Command-line overrides take the
/// same `key=value` form and win over the file.
struct RunConfig {
  TrainingConfig train;
  Precision precision = Precision::kFloat32;
  DataSource data_source = DataSource::kSynthetic;
  std::string data_path;
  int32_t fold = 1;
  SyntheticSpec synthetic;
  std::string output_dir = "runs/latest";
  bool allow_any_pr = false;

  /// Every key with its current value, sorted, in reloadable form.
  std::string serialize() const;

  /// Range checks beyond parsing; enforces the searched pr set
  /// {0, 0.05, 0.1, 0.15} unless allow_any_pr is set.
  void validate() const;
};

/// Parse a config file. Throws ConfigError on unknown keys, bad values, or
/// unreadable files.
RunConfig parse_config_file(const std::filesystem::path& file);

/// Parse config text (same grammar); `origin` labels error messages.
RunConfig parse_config_text(const std::string& text, const std::string& origin);

/// Apply `key=value` overrides in order on top of an existing config.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

/// Set one key (both the file parser and the override path go through this).
void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace kgalign
