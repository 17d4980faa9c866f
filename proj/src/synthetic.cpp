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
#include "kgalign/synthetic.hpp"

#include <cmath>
#include <unordered_set>

namespace kgalign {

namespace {

struct PairHash {
  std::size_t operator()(const Triple& t) const {
    std::size_t h = static_cast<std::size_t>(t.head);
    h = h * 1000003u + static_cast<std::size_t>(t.rel);
    h = h * 1000003u + static_cast<std::size_t>(t.tail);
    return h;
  }
};

}  // namespace

DatasetBundle generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  const int32_t n = spec.n_entities;
  const int32_t m = spec.n_relations;
  if (n < 2 || m < 1) throw ConfigError("generate_synthetic: need >= 2 entities, >= 1 relation");
  if (spec.perturb_ratio < 0.0 || spec.perturb_ratio >= 1.0) {
    throw ConfigError("generate_synthetic: perturb_ratio must be in [0, 1)");
  }
  const auto target_triples = static_cast<int64_t>(
      std::llround(spec.avg_degree * static_cast<double>(n) / 2.0));
  if (target_triples < n - 1) {
    throw ConfigError("generate_synthetic: avg_degree " + std::to_string(spec.avg_degree) +
                      " cannot connect " + std::to_string(n) + " entities");
  }
  // Upper bound on distinct (head, tail) ordered pairs without self-loops.
  if (target_triples > static_cast<int64_t>(n) * (n - 1)) {
    throw ConfigError("generate_synthetic: avg_degree too large for distinct triples");
  }

  // Random spanning tree first so every entity has degree >= 1, then random
  // extra triples up to the degree budget. Duplicate (h, r, t) triples are
  // rejected; parallel edges with different relations are allowed.
  std::vector<Triple> triples;
  triples.reserve(static_cast<std::size_t>(target_triples));
  std::unordered_set<Triple, PairHash> seen;
  std::vector<EntityId> order(n);
  for (int32_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  for (int32_t i = 1; i < n; ++i) {
    const EntityId a = order[i];
    const EntityId b = order[rng.uniform_int(0, i - 1)];
    Triple t;
    t.rel = static_cast<RelationId>(rng.uniform_int(0, m - 1));
    if (rng.bernoulli(0.5)) {
      t.head = a;
      t.tail = b;
    } else {
      t.head = b;
      t.tail = a;
    }
    if (seen.insert(t).second) triples.push_back(t);
  }
  int64_t attempts = 0;
  const int64_t max_attempts = 200 * target_triples + 1000;
  while (static_cast<int64_t>(triples.size()) < target_triples) {
    if (++attempts > max_attempts) {
      throw ConfigError("generate_synthetic: could not place enough distinct triples");
    }
    Triple t;
    t.head = static_cast<EntityId>(rng.uniform_int(0, n - 1));
    t.tail = static_cast<EntityId>(rng.uniform_int(0, n - 1));
    if (t.head == t.tail) continue;
    t.rel = static_cast<RelationId>(rng.uniform_int(0, m - 1));
    if (seen.insert(t).second) triples.push_back(t);
  }

  // Target graph: permuted copy, then remove triples down to
  // round((1 - perturb_ratio) * |T|).
  std::vector<EntityId> perm(n);
  for (int32_t i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<Triple> tgt_triples;
  tgt_triples.reserve(triples.size());
  for (const Triple& t : triples) {
    tgt_triples.push_back({perm[t.head], t.rel, perm[t.tail]});
  }
  const auto keep = static_cast<std::size_t>(
      std::llround((1.0 - spec.perturb_ratio) * static_cast<double>(tgt_triples.size())));
  if (keep < tgt_triples.size()) {
    const auto kept_idx = rng.sample_without_replacement(tgt_triples.size(), keep);
    std::vector<bool> mark(tgt_triples.size(), false);
    for (const std::size_t i : kept_idx) mark[i] = true;
    std::vector<Triple> pruned;
    pruned.reserve(keep);
    for (std::size_t i = 0; i < tgt_triples.size(); ++i) {
      if (mark[i]) pruned.push_back(tgt_triples[i]);
    }
    tgt_triples = std::move(pruned);
  }

  DatasetBundle bundle;
  for (int32_t i = 0; i < n; ++i) {
    bundle.id_maps.intern_source("a/e" + std::to_string(i));
    bundle.id_maps.intern_target("b/e" + std::to_string(i));
  }
  for (int32_t r = 0; r < m; ++r) bundle.id_maps.intern_relation("r/" + std::to_string(r));

  bundle.source = KnowledgeGraph::from_triples(n, m, std::move(triples));
  bundle.target = KnowledgeGraph::from_triples(n, m, std::move(tgt_triples));

  // Ground truth is the permutation; 20/10/70 split of a shuffled pair list.
  std::vector<std::pair<EntityId, EntityId>> links(n);
  for (int32_t i = 0; i < n; ++i) links[i] = {i, perm[i]};
  bundle.all_links = links;
  rng.shuffle(links);
  const auto n_train = static_cast<std::size_t>(std::llround(0.2 * n));
  const auto n_valid = static_cast<std::size_t>(std::llround(0.1 * n));
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (i < n_train) {
      bundle.seeds.train.push_back(links[i]);
    } else if (i < n_train + n_valid) {
      bundle.seeds.valid.push_back(links[i]);
    } else {
      bundle.seeds.test.push_back(links[i]);
    }
  }
  return bundle;
}

}  // namespace kgalign
