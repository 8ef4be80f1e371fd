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

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <optional>
#include <vector>

#include "mskvar/error.hpp"
#include "mskvar/interpolation.hpp"
#include "mskvar/model.hpp"
#include "mskvar/oracles.hpp"
#include "mskvar/parallel.hpp"
#include "mskvar/quadrature.hpp"
#include "mskvar/rng.hpp"
#include "mskvar/spin.hpp"
#include "mskvar/stats.hpp"

namespace mskvar {

inline constexpr std::uint64_t kDefaultSeed = 20190517;

struct McConfig {
  int replicates = 1000;
  std::uint64_t master_seed = kDefaultSeed;
  int quadrature_nodes = 16;
  std::optional<std::vector<double>> t_grid;
  int bootstrap_resamples = 1000;
  int workers = 0;  // 0: MSKVAR_THREADS or hardware concurrency

  void validate(bool variance_output) const {
    if (replicates < 1) throw TooFewReplicates("replicates must be positive");
    if (variance_output && replicates < 2) throw TooFewReplicates("variance estimates need >= 2 replicates");
    if (quadrature_nodes < 2) throw OutOfDomain("quadrature needs at least 2 nodes");
    if (bootstrap_resamples < 2) throw OutOfDomain("bootstrap needs at least 2 resamples");
    if (t_grid) {
      for (double t : *t_grid) {
        if (!(t >= 0.0 && t <= 1.0)) throw OutOfDomain("t_grid entries must lie in [0,1]");
      }
    }
  }

  QuadratureRule quadrature() const {
    return t_grid ? trapezoid_unit(*t_grid) : gauss_legendre_unit(quadrature_nodes);
  }
};

/// Free energies F_N(beta) of replicates 0..M-1, in replicate order.
inline std::vector<double> free_energy_samples(const ModelSpec& spec, double beta, const McConfig& mc,
                                               int n_max = kDefaultMaxSpins) {
  if (spec.n() > n_max) throw TooLarge("N exceeds enumeration limit");
  return parallel_map(
      static_cast<std::size_t>(mc.replicates),
      [&](std::size_t m) {
        const CouplingMatrix g = sample_disorder(spec, StreamKey{mc.master_seed, m, StreamRole::Coupling});
        return free_energy_exact(g, beta, n_max);
      },
      mc.workers);
}

/// Unbiased sample variance of F_N(beta) with a bootstrap standard error.
inline Estimate variance_direct(const ModelSpec& spec, double beta, const McConfig& mc,
                                int n_max = kDefaultMaxSpins) {
  mc.validate(true);
  const std::vector<double> f = free_energy_samples(spec, beta, mc, n_max);
  auto rng = make_stream({mc.master_seed, 0, StreamRole::Bootstrap});
  Estimate e;
  e.value = sample_variance(f);
  e.std_error = bootstrap_variance_se(f, rng, mc.bootstrap_resamples);
  e.n = mc.replicates;
  e.seed = mc.master_seed;
  return e;
}

/// Per-replicate <R>_t at lambda = 0 for every t, rows indexed [replicate][t].
inline std::vector<std::vector<double>> interpolated_overlap_samples(const ModelSpec& spec, double beta,
                                                                     const std::vector<double>& t_values,
                                                                     const McConfig& mc,
                                                                     int n_max = kDefaultMaxPairSpins) {
  if (spec.n() > n_max) throw TooLarge("N exceeds pair enumeration limit");
  return parallel_map(
      static_cast<std::size_t>(mc.replicates),
      [&](std::size_t m) {
        const PairKernel kernel(spec, sample_triple(spec, mc.master_seed, m), n_max);
        std::vector<double> row;
        row.reserve(t_values.size());
        for (double t : t_values) row.push_back(kernel.product_measure_overlap(t, beta));
        return row;
      },
      mc.workers);
}

/// beta^2 N int_0^1 E<R>_t dt. Every node uses the same triples, so the standard error comes
/// from the per-replicate quadrature sums.
inline Estimate variance_via_identity(const ModelSpec& spec, double beta, const McConfig& mc,
                                      int n_max = kDefaultMaxPairSpins) {
  mc.validate(true);
  const QuadratureRule rule = mc.quadrature();
  const auto rows = interpolated_overlap_samples(spec, beta, rule.nodes, mc, n_max);
  std::vector<double> integrals(rows.size());
  for (std::size_t m = 0; m < rows.size(); ++m) {
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) acc += rule.weights[q] * rows[m][q];
    integrals[m] = acc;
  }
  const double scale = beta * beta * spec.n();
  Estimate e = mean_estimate(integrals, mc.master_seed);
  e.value *= scale;
  e.std_error *= scale;
  return e;
}

struct LemmaRow {
  double t = 0.0;
  Estimate estimate;  // E<R>_t
  double bound = 0.0;
  double margin = 0.0;
  bool pass = false;
};

/// E<R>_t against the closed-form bound at each t; pass when margin >= -5 SE.
inline std::vector<LemmaRow> main_lemma_check(const ModelSpec& spec, double beta, const std::vector<double>& t_values,
                                              const McConfig& mc, double tolerance_se = 5.0) {
  spec.profile().require_psd();
  mc.validate(false);
  std::vector<double> bounds;
  for (double t : t_values) bounds.push_back(main_lemma_bound(spec, beta, t));
  const auto rows = interpolated_overlap_samples(spec, beta, t_values, mc);
  std::vector<LemmaRow> out;
  for (std::size_t q = 0; q < t_values.size(); ++q) {
    std::vector<double> column(rows.size());
    for (std::size_t m = 0; m < rows.size(); ++m) column[m] = rows[m][q];
    LemmaRow row;
    row.t = t_values[q];
    row.estimate = mean_estimate(column, mc.master_seed);
    row.bound = bounds[q];
    row.margin = row.bound - row.estimate.value;
    row.pass = row.margin >= -tolerance_se * row.estimate.std_error;
    out.push_back(row);
  }
  return out;
}

struct TalagrandRow {
  double x = 0.0;
  Estimate monte_carlo;  // E<exp(x N R)>_{0,0} over disorder triples
  double oracle = 0.0;   // exact Rademacher value
  double rhs = 0.0;
  bool mc_pass = false;
  bool bound_pass = false;
};

/// Three-way comparison of the exponential moment at t = 0, lambda = 0. `beta` sets the measure
/// <.>_{0,0}; it defaults to beta_c.
inline std::vector<TalagrandRow> talagrand_check(const ModelSpec& spec, const std::vector<double>& x_values,
                                                 const McConfig& mc, std::optional<double> beta = std::nullopt,
                                                 double tolerance_se = 5.0) {
  spec.profile().require_psd();
  mc.validate(false);
  std::vector<double> rhs;
  for (double x : x_values) rhs.push_back(talagrand_rhs(spec, x));
  const oracles::RademacherProfile rademacher(spec);
  const double b = beta.value_or(beta_critical(spec));
  const InterpolationPoint origin{0.0, 0.0, b};

  const auto rows = parallel_map(
      static_cast<std::size_t>(mc.replicates),
      [&](std::size_t m) {
        const PairKernel kernel(spec, sample_triple(spec, mc.master_seed, m));
        const PairSweep sw = kernel.sweep(origin);
        std::vector<double> row;
        for (double x : x_values) row.push_back(kernel.exp_moment(sw, x));
        return row;
      },
      mc.workers);

  constexpr double kRel = 1e-12;
  std::vector<TalagrandRow> out;
  for (std::size_t j = 0; j < x_values.size(); ++j) {
    std::vector<double> column(rows.size());
    for (std::size_t m = 0; m < rows.size(); ++m) column[m] = rows[m][j];
    TalagrandRow row;
    row.x = x_values[j];
    row.monte_carlo = mean_estimate(column, mc.master_seed);
    row.oracle = rademacher.exp_moment(row.x);
    row.rhs = rhs[j];
    row.mc_pass = std::abs(row.monte_carlo.value - row.oracle) <= tolerance_se * row.monte_carlo.std_error;
    row.bound_pass = row.oracle <= row.rhs * (1.0 + kRel);
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaling experiment

struct ScalingMode {
  enum class Kind { Critical, Approach };
  Kind kind = Kind::Critical;
  double alpha = 1.0;
  double d = 1.0;

  static ScalingMode critical() { return {}; }
  static ScalingMode approach(double alpha, double d) { return {Kind::Approach, alpha, d}; }

  /// beta_c in critical mode, sqrt(beta_c^2 + d N^-alpha) in approach mode.
  double beta(double beta_c, int n) const {
    if (kind == Kind::Critical) return beta_c;
    return std::sqrt(beta_c * beta_c + d * std::pow(static_cast<double>(n), -alpha));
  }

  /// (log N)^2 + 1 in critical mode, (log N)^2 + N^(1-alpha) in approach mode.
  double normalizer(int n) const {
    const double l = std::log(static_cast<double>(n));
    if (kind == Kind::Critical) return l * l + 1.0;
    return l * l + std::pow(static_cast<double>(n), 1.0 - alpha);
  }
};

struct ScalingRow {
  int n = 0;
  double beta = 0.0;
  double var = 0.0;
  double std_error = 0.0;
  double var_over_log2n = 0.0;
  double var_over_bound = 0.0;
};

inline std::vector<ScalingRow> scaling_experiment(const ModelFamily& family, const ScalingMode& mode,
                                                  const std::vector<int>& n_grid, const McConfig& mc,
                                                  int n_max = kDefaultMaxSpins) {
  mc.validate(true);
  if (mode.kind == ScalingMode::Kind::Approach && !(mode.d > 0 && mode.alpha > 0)) {
    throw OutOfDomain("approach mode needs alpha > 0 and d > 0");
  }
  std::vector<ScalingRow> out;
  for (int n : n_grid) {
    if (n > n_max) throw TooLarge("grid point exceeds enumeration limit");
    const ModelSpec spec = family.at(n, true);
    ScalingRow row;
    row.n = n;
    row.beta = mode.beta(beta_critical(spec), n);
    const Estimate e = variance_direct(spec, row.beta, mc, n_max);
    row.var = e.value;
    row.std_error = e.std_error;
    const double l = std::log(static_cast<double>(n));
    row.var_over_log2n = e.value / (l * l);
    row.var_over_bound = e.value / mode.normalizer(n);
    out.push_back(row);
  }
  return out;
}

/// Largest ratio var_over_bound(N_j) / var_over_bound(N_i) over grid pairs N_i < N_j.
inline double worst_ratio_growth(const std::vector<ScalingRow>& rows) {
  double worst = 0.0;
  double running_min = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (std::isfinite(running_min)) worst = std::max(worst, r.var_over_bound / running_min);
    running_min = std::min(running_min, r.var_over_bound);
  }
  return worst;
}

/// Bounded-ratio criterion: no grid point exceeds `factor` times any earlier one.
inline bool bounded_ratio(const std::vector<ScalingRow>& rows, double factor = 2.0) {
  return worst_ratio_growth(rows) <= factor;
}

}  // namespace mskvar
