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

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "mskvar/mskvar.hpp"

namespace mskvar::testing {

inline constexpr int kPropertyCases = 64;

inline Eigen::MatrixXd matrix(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) out(i, j++) = v;
    ++i;
  }
  return out;
}

inline Eigen::VectorXd vector(std::initializer_list<double> values) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) out(i++) = v;
  return out;
}

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

/// Seeded random inputs for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  /// Non-negative symmetric k x k matrix with a positive diagonal; not necessarily PSD.
  Eigen::MatrixXd symmetric_profile(int k) {
    Eigen::MatrixXd d(k, k);
    for (int s = 0; s < k; ++s) {
      d(s, s) = uniform(0.1, 2.0);
      for (int u = s + 1; u < k; ++u) d(s, u) = d(u, s) = uniform(0.0, 2.0);
    }
    return d;
  }

  /// A A^T with non-negative A of shape k x rank.
  Eigen::MatrixXd psd_profile(int k, int rank) {
    Eigen::MatrixXd a(k, rank);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < rank; ++j) a(i, j) = uniform(0.05, 1.5);
    }
    return a * a.transpose();
  }

  std::vector<int> sizes(int k, int n) {
    std::vector<int> out(static_cast<std::size_t>(k), 1);
    for (int extra = n - k; extra > 0; --extra) ++out[static_cast<std::size_t>(integer(0, k - 1))];
    return out;
  }

  ModelSpec psd_spec(int n) {
    const int k = integer(1, std::min(3, n));
    return ModelSpec(sizes(k, n), psd_profile(k, integer(1, k)));
  }

  SpinConfig spins(int n) { return SpinConfig::from_bits(rng_() & ((SpinBits{1} << n) - 1), n); }

  CouplingMatrix couplings(int n, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    CouplingMatrix g(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) g(i, j) = normal(rng_);
    }
    return g;
  }

  DisorderTriple triple(int n, double scale = 1.0) { return {couplings(n, scale), couplings(n, scale), couplings(n, scale)}; }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace mskvar::testing
