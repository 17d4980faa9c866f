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

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgalign/errors.hpp"

namespace kgalign {

using EntityId = int32_t;
using RelationId = int32_t;

struct Triple {
  EntityId head;
  RelationId rel;
  EntityId tail;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// A multi-relational graph over dense contiguous ids. Relation ids live in a
/// space shared between the two graphs of a dataset. Self-loop triples are
/// rejected on construction, so degree[e] counts each incident triple once.
struct KnowledgeGraph {
  int32_t entity_count = 0;
  int32_t relation_count = 0;
  std::vector<Triple> triples;

  // (neighbor, relation) per direction; populated by build_adjacency().
  std::vector<std::vector<std::pair<EntityId, RelationId>>> out_adj;
  std::vector<std::vector<std::pair<EntityId, RelationId>>> in_adj;
  std::vector<int32_t> degree;

  /// Validates ids, rejects self-loops and duplicate triples, builds adjacency.
  static KnowledgeGraph from_triples(int32_t entity_count, int32_t relation_count,
                                     std::vector<Triple> triples);

  /// out_adj[h] gains (t, r) and in_adj[t] gains (h, r) for each triple
  /// (h, r, t); degree[e] = |out_adj[e]| + |in_adj[e]|.
  void build_adjacency();

  int64_t total_degree() const;
};

/// Pre-aligned entity pairs split for training/validation/testing. Pairs map
/// source-graph ids to target-graph ids; splits are pairwise disjoint.
struct AlignmentSeedSet {
  std::vector<std::pair<EntityId, EntityId>> train;
  std::vector<std::pair<EntityId, EntityId>> valid;
  std::vector<std::pair<EntityId, EntityId>> test;
};

/// URI <-> dense-id dictionaries. Entity id spaces of the two graphs are
/// independent; the relation space is unified across both.
struct IdMaps {
  std::vector<std::string> source_entity_uris;  // id -> URI
  std::vector<std::string> target_entity_uris;
  std::vector<std::string> relation_uris;
  std::unordered_map<std::string, EntityId> source_entity_ids;
  std::unordered_map<std::string, EntityId> target_entity_ids;
  std::unordered_map<std::string, RelationId> relation_ids;

  EntityId intern_source(const std::string& uri);
  EntityId intern_target(const std::string& uri);
  RelationId intern_relation(const std::string& uri);
};

struct DatasetBundle {
  KnowledgeGraph source;
  KnowledgeGraph target;
  AlignmentSeedSet seeds;
  // every aligned pair known for the dataset (the fold splits partition it)
  std::vector<std::pair<EntityId, EntityId>> all_links;
  IdMaps id_maps;
};

}  // namespace kgalign
