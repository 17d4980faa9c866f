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
#include "kgalign/kg.hpp"

#include <unordered_set>

namespace kgalign {

namespace {

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::size_t h = static_cast<std::size_t>(t.head);
    h = h * 1000003u + static_cast<std::size_t>(t.rel);
    h = h * 1000003u + static_cast<std::size_t>(t.tail);
    return h;
  }
};

}  // namespace

KnowledgeGraph KnowledgeGraph::from_triples(int32_t entity_count, int32_t relation_count,
                                            std::vector<Triple> triples) {
  KnowledgeGraph kg;
  kg.entity_count = entity_count;
  kg.relation_count = relation_count;
  std::unordered_set<Triple, TripleHash> seen;
  seen.reserve(triples.size());
  for (const Triple& t : triples) {
    if (t.head < 0 || t.head >= entity_count || t.tail < 0 || t.tail >= entity_count) {
      throw DataError("triple references entity id outside [0, " +
                      std::to_string(entity_count) + ")");
    }
    if (t.rel < 0 || t.rel >= relation_count) {
      throw DataError("triple references relation id outside [0, " +
                      std::to_string(relation_count) + ")");
    }
    if (t.head == t.tail) {
      throw DataError("self-loop triple on entity " + std::to_string(t.head));
    }
    if (!seen.insert(t).second) {
      throw DataError("duplicate triple (" + std::to_string(t.head) + ", " +
                      std::to_string(t.rel) + ", " + std::to_string(t.tail) + ")");
    }
  }
  kg.triples = std::move(triples);
  kg.build_adjacency();
  return kg;
}

void KnowledgeGraph::build_adjacency() {
  out_adj.assign(entity_count, {});
  in_adj.assign(entity_count, {});
  degree.assign(entity_count, 0);
  for (const Triple& t : triples) {
    out_adj[t.head].emplace_back(t.tail, t.rel);
    in_adj[t.tail].emplace_back(t.head, t.rel);
  }
  for (int32_t e = 0; e < entity_count; ++e) {
    degree[e] = static_cast<int32_t>(out_adj[e].size() + in_adj[e].size());
  }
}

int64_t KnowledgeGraph::total_degree() const {
  int64_t sum = 0;
  for (const int32_t d : degree) sum += d;
  return sum;
}

EntityId IdMaps::intern_source(const std::string& uri) {
  auto [it, inserted] = source_entity_ids.try_emplace(
      uri, static_cast<EntityId>(source_entity_uris.size()));
  if (inserted) source_entity_uris.push_back(uri);
  return it->second;
}

EntityId IdMaps::intern_target(const std::string& uri) {
  auto [it, inserted] = target_entity_ids.try_emplace(
      uri, static_cast<EntityId>(target_entity_uris.size()));
  if (inserted) target_entity_uris.push_back(uri);
  return it->second;
}

RelationId IdMaps::intern_relation(const std::string& uri) {
  auto [it, inserted] =
      relation_ids.try_emplace(uri, static_cast<RelationId>(relation_uris.size()));
  if (inserted) relation_uris.push_back(uri);
  return it->second;
}

}  // namespace kgalign
