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
#include "kgalign/augment.hpp"

#include <algorithm>
#include <cmath>

namespace kgalign {

double sample_ratio(double pr, Rng& rng) {
  if (pr < 0.0 || pr >= 1.0) {
    throw ConfigError("sample_ratio: pr must be in [0, 1), got " + std::to_string(pr));
  }
  if (pr == 0.0) return 0.0;
  return rng.uniform(0.0, pr);
}

AugmentedView drop_edges(const KnowledgeGraph& kg, double ratio, Rng& rng) {
  AugmentedView view;
  view.base = &kg;
  view.drawn_ratio = ratio;

  std::vector<uint32_t> candidates;
  candidates.reserve(kg.triples.size());
  for (uint32_t i = 0; i < kg.triples.size(); ++i) {
    const Triple& t = kg.triples[i];
    if (kg.degree[t.head] >= 2 && kg.degree[t.tail] >= 2) candidates.push_back(i);
  }

  const auto want = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(kg.triples.size())));
  const std::size_t n_drop = std::min(want, candidates.size());

  std::vector<bool> dropped(kg.triples.size(), false);
  if (n_drop > 0) {
    for (const std::size_t pick : rng.sample_without_replacement(candidates.size(), n_drop)) {
      dropped[candidates[pick]] = true;
    }
  }

  view.kept_triples.reserve(kg.triples.size() - n_drop);
  std::vector<Triple> kept;
  kept.reserve(kg.triples.size() - n_drop);
  for (uint32_t i = 0; i < kg.triples.size(); ++i) {
    if (!dropped[i]) {
      view.kept_triples.push_back(i);
      kept.push_back(kg.triples[i]);
    }
  }
  view.graph.entity_count = kg.entity_count;
  view.graph.relation_count = kg.relation_count;
  view.graph.triples = std::move(kept);
  view.graph.build_adjacency();
  return view;
}

std::pair<AugmentedView, AugmentedView> refresh_views(const KnowledgeGraph& source,
                                                      const KnowledgeGraph& target, double pr,
                                                      Rng& rng) {
  const double rs = sample_ratio(pr, rng);
  AugmentedView vs = drop_edges(source, rs, rng);
  const double rt = sample_ratio(pr, rng);
  AugmentedView vt = drop_edges(target, rt, rng);
  return {std::move(vs), std::move(vt)};
}

}  // namespace kgalign
