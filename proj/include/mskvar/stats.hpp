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
#include <span>
#include <vector>

#include "mskvar/error.hpp"

namespace mskvar {

/// Monte Carlo result with provenance.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  int n = 0;
  std::uint64_t seed = 0;
};

/// Pairwise (cascade) summation; the split points depend only on the length.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw TooFewReplicates("mean of an empty sample");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

/// Unbiased sample variance, shifted by the first element (exactly 0 for a constant sample).
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw TooFewReplicates("variance needs at least 2 values");
  const double shift = xs.front();
  std::vector<double> d(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) d[i] = xs[i] - shift;
  const double m = mean(d);
  for (double& v : d) v = (v - m) * (v - m);
  return pairwise_sum(d) / static_cast<double>(xs.size() - 1);
}

/// Mean with the plain standard error sd / sqrt(n).
inline Estimate mean_estimate(std::span<const double> xs, std::uint64_t seed = 0) {
  Estimate e;
  e.n = static_cast<int>(xs.size());
  e.seed = seed;
  e.value = mean(xs);
  e.std_error = xs.size() >= 2 ? std::sqrt(sample_variance(xs) / static_cast<double>(xs.size())) : 0.0;
  return e;
}

/// Standard deviation of the sample variance over `resamples` bootstrap resamples.
inline double bootstrap_variance_se(std::span<const double> xs, std::mt19937_64& rng, int resamples) {
  if (xs.size() < 2) throw TooFewReplicates("bootstrap needs at least 2 values");
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  std::vector<double> draw(xs.size());
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  for (auto& st : stats) {
    for (auto& v : draw) v = xs[pick(rng)];
    st = sample_variance(draw);
  }
  return std::sqrt(sample_variance(stats));
}

}  // namespace mskvar
