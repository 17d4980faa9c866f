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
#include <vector>

#include "kgalign/kg.hpp"

namespace kgalign {

/// What the loader cleaned up or noticed. Self-loops and duplicate triples are
/// dropped (not fatal) because they corrupt degree bookkeeping and attention
/// normalization.
struct LoadReport {
  int64_t dropped_self_loops[2] = {0, 0};   // per graph
  int64_t dropped_duplicates[2] = {0, 0};   // per graph
  std::vector<std::string> warnings;
};

struct LoadedDataset {
  DatasetBundle bundle;
  LoadReport report;
};

/// Reads the OpenEA 15K (V1) directory layout:
///   rel_triples_1, rel_triples_2 : head_uri<TAB>relation_uri<TAB>tail_uri
///   ent_links                    : source_uri<TAB>target_uri
///   721_5fold/<fold>/{train_links,valid_links,test_links} : same pair format
/// All files are UTF-8, one record per line. Ids are dense and assigned in
/// first-appearance order; the relation id space is shared between graphs.
/// Entities that appear only in ent_links are retained as isolated nodes.
LoadedDataset load_openea(const std::filesystem::path& directory, int fold);

/// Writes a bundle back out in the same layout (triples and links in id
/// order), so a load -> save -> load round trip reproduces identical
/// id-mapped triples and seeds.
void save_openea(const DatasetBundle& bundle, const std::filesystem::path& directory,
                 int fold = 1);

}  // namespace kgalign
