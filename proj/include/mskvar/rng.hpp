// Copyright 2026 The mskvar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mskvar/model.hpp"
#include "mskvar/spin.hpp"

namespace mskvar {

/// Which random object a substream feeds.
enum class StreamRole : std::uint64_t {
  Coupling = 0,             // g   (H_N)
  CouplingPrime = 1,        // g1  (H'_N)
  CouplingDoublePrime = 2,  // g2  (H''_N)
  Bootstrap = 3,
  Auxiliary = 4,
};

struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate = 0;
  StreamRole role = StreamRole::Coupling;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Substream seed = splitmix(splitmix(splitmix(master) ^ replicate) ^ role).
/// Streams depend only on the key, never on which worker draws them.
inline constexpr std::uint64_t derive_stream_seed(const StreamKey& key) {
  std::uint64_t h = splitmix64(key.master_seed);
  h = splitmix64(h ^ key.replicate);
  h = splitmix64(h ^ static_cast<std::uint64_t>(key.role));
  return h;
}

inline std::mt19937_64 make_stream(const StreamKey& key) { return std::mt19937_64(derive_stream_seed(key)); }

/// g_ij ~ N(0, Delta^2_{s(i) s(j)}) independently for all ordered pairs, row-major draw order.
inline CouplingMatrix sample_disorder(const ModelSpec& spec, std::mt19937_64& rng) {
  const int n = spec.n();
  const int k = spec.k();
  Eigen::MatrixXd sd(k, k);
  for (int s = 0; s < k; ++s) {
    for (int u = 0; u < k; ++u) sd(s, u) = std::sqrt(spec.delta2()(s, u));
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  CouplingMatrix g(n);
  for (int i = 0; i < n; ++i) {
    const int si = spec.layout().species_of(i);
    for (int j = 0; j < n; ++j) g(i, j) = sd(si, spec.layout().species_of(j)) * normal(rng);
  }
  return g;
}

inline CouplingMatrix sample_disorder(const ModelSpec& spec, const StreamKey& key) {
  auto rng = make_stream(key);
  return sample_disorder(spec, rng);
}

}  // namespace mskvar
