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
#include <utility>
#include <vector>

#include "kgalign/kg.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

/// A triple-subset view of a base graph produced by edge dropping. Only
/// existing triples can appear (edge dropping never invents facts), and no
/// dropped triple touches an entity whose base degree is below 2.
struct AugmentedView {
  const KnowledgeGraph* base = nullptr;
  std::vector<uint32_t> kept_triples;  // indices into base->triples, ascending
  double drawn_ratio = 0.0;
  KnowledgeGraph graph;  // rebuilt over the kept triples
};

/// Draw the deletion ratio r ~ uniform(0, pr). pr must be in [0, 1).
double sample_ratio(double pr, Rng& rng);

/// Remove floor(ratio * |triples|) triples sampled uniformly without
/// replacement from the candidates whose head AND tail both have base degree
/// >= 2 (capped at the candidate count). Degrees are always the base graph's,
/// so sampling order cannot unprotect an entity mid-draw.
AugmentedView drop_edges(const KnowledgeGraph& kg, double ratio, Rng& rng);

/// Two independent views, each with its own drawn ratio (source first).
std::pair<AugmentedView, AugmentedView> refresh_views(const KnowledgeGraph& source,
                                                      const KnowledgeGraph& target, double pr,
                                                      Rng& rng);

}  // namespace kgalign
