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

#include "kgalign/kg.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

struct SyntheticSpec {
  int32_t n_entities = 200;
  int32_t n_relations = 20;
  double avg_degree = 5.0;
  double perturb_ratio = 0.0;  // fraction of target triples removed
};

/// Desk-scale benchmark: a connected random multi-relational source graph and
/// a target graph that is an id-permuted copy with `perturb_ratio` of its
/// triples removed. The ground-truth alignment is the permutation, split
/// 20/10/70 into train/valid/test.
DatasetBundle generate_synthetic(const SyntheticSpec& spec, Rng& rng);

}  // namespace kgalign
