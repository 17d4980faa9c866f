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
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kgalign/errors.hpp"

namespace kgalign {

/// Deterministic random source. Wraps std::mt19937_64 (whose output sequence
/// is pinned by the standard) and draws uniforms/integers with fixed,
/// implementation-independent recipes, so identical seeds give identical
/// streams on every platform and compiler.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive, by rejection (unbiased).
  int64_t uniform_int(int64_t lo, int64_t hi) {
    if (lo > hi) throw Error("uniform_int: empty range");
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(engine_());  // full 64-bit span
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return lo + static_cast<int64_t>(draw % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates shuffle with this stream.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Sample `k` distinct indices from [0, n) uniformly (partial Fisher-Yates).
  std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
    if (k > n) throw Error("sample_without_replacement: k > n");
    std::vector<size_t> pool(n);
    for (size_t i = 0; i < n; ++i) pool[i] = i;
    for (size_t i = 0; i < k; ++i) {
      const size_t j =
          i + static_cast<size_t>(uniform_int(0, static_cast<int64_t>(n - i) - 1));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

  std::string serialize_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void restore_state(const std::string& text) {
    std::istringstream is(text);
    is >> engine_;
    if (!is) throw DataError("Rng::restore_state: malformed engine state");
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Independent streams derived from one master seed. Toggling a feature that
/// consumes one stream never shifts the randomness seen by the others.
struct RngStreams {
  Rng init;        // parameter initialization
  Rng dropout;     // dropout masks
  Rng augment;     // edge-drop ratio and triple selection
  Rng negatives;   // negative sampling
  Rng synthetic;   // synthetic benchmark generation

  static RngStreams from_master(uint64_t master_seed) {
    RngStreams s;
    s.init = Rng(detail::splitmix64(master_seed ^ 0x696e6974ULL));
    s.dropout = Rng(detail::splitmix64(master_seed ^ 0x64726f70ULL));
    s.augment = Rng(detail::splitmix64(master_seed ^ 0x61756773ULL));
    s.negatives = Rng(detail::splitmix64(master_seed ^ 0x6e656773ULL));
    s.synthetic = Rng(detail::splitmix64(master_seed ^ 0x73796e74ULL));
    return s;
  }
};

}  // namespace kgalign
