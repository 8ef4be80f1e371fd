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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mskvar/error.hpp"
#include "mskvar/interpolation.hpp"
#include "mskvar/model.hpp"
#include "mskvar/rng.hpp"
#include "mskvar/spin.hpp"
#include "mskvar/stats.hpp"

namespace mskvar::oracles {

namespace detail {
inline double log_sum_exp(const std::vector<double>& xs) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : xs) top = std::max(top, x);
  double s = 0.0;
  for (double x : xs) s += std::exp(x - top);
  return top + std::log(s);
}

inline std::vector<SpinConfig> all_configs(int n) {
  std::vector<SpinConfig> out;
  out.reserve(std::size_t{1} << n);
  for (SpinBits b = 0; b < (SpinBits{1} << n); ++b) out.push_back(SpinConfig::from_bits(b, n));
  return out;
}
}  // namespace detail

/// log sum_sigma exp(beta H(sigma)) with a full O(N^2) Hamiltonian per state.
inline double free_energy_naive(const CouplingMatrix& g, double beta) {
  if (g.n() > 14) throw TooLarge("naive free energy needs N <= 14");
  std::vector<double> x;
  for (const auto& sigma : detail::all_configs(g.n())) x.push_back(beta * hamiltonian(g, sigma));
  return detail::log_sum_exp(x);
}

/// All 4^N pair log-weights beta(H1 + H2) + lambda beta^2 N R, evaluated term by term.
class NaivePairMeasure {
 public:
  NaivePairMeasure(const ModelSpec& spec, const DisorderTriple& triple, const InterpolationPoint& p, int n_max = 7)
      : spec_(spec), configs_(detail::all_configs(spec.n())) {
    if (spec.n() > n_max) throw TooLarge("naive pair measure limit exceeded");
    p.validate();
    const double a = std::sqrt(p.t);
    const double b = std::sqrt(1.0 - p.t);
    const std::size_t count = configs_.size();
    overlap_.resize(count * count);
    log_weight_.resize(count * count);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t r = 0; r < count; ++r) {
        const auto& sigma = configs_[s];
        const auto& rho = configs_[r];
        const double h1 = a * hamiltonian(triple.g, sigma) + b * hamiltonian(triple.g1, sigma);
        const double h2 = a * hamiltonian(triple.g, rho) + b * hamiltonian(triple.g2, rho);
        const double overlap = multi_overlap(spec, sigma, rho).multi;
        overlap_[s * count + r] = overlap;
        log_weight_[s * count + r] = p.beta * (h1 + h2) + p.lambda * p.beta * p.beta * spec.n() * overlap;
      }
    }
    log_partition_ = detail::log_sum_exp(log_weight_);
    probability_.resize(log_weight_.size());
    for (std::size_t i = 0; i < log_weight_.size(); ++i) probability_[i] = std::exp(log_weight_[i] - log_partition_);
  }

  double tilted_free_energy() const { return log_partition_ / spec_.n(); }

  double overlap() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < probability_.size(); ++i) acc += probability_[i] * overlap_[i];
    return acc;
  }

  /// sum over two independent pairs (sigma,rho), (sigma',rho') of W W' R(sigma, rho'); 16^N terms.
  double cross_overlap() const {
    if (spec_.n() > 5) throw TooLarge("double-pair enumeration needs N <= 5");
    const std::size_t count = configs_.size();
    double acc = 0.0;
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t r = 0; r < count; ++r) {
        const double w = probability_[s * count + r];
        for (std::size_t s2 = 0; s2 < count; ++s2) {
          for (std::size_t r2 = 0; r2 < count; ++r2) {
            acc += w * probability_[s2 * count + r2] * overlap_[s * count + r2];
          }
        }
      }
    }
    return acc;
  }

 private:
  const ModelSpec& spec_;
  std::vector<SpinConfig> configs_;
  std::vector<double> overlap_;
  std::vector<double> log_weight_;
  std::vector<double> probability_;
  double log_partition_ = 0.0;
};

inline double tilted_naive(const ModelSpec& spec, const DisorderTriple& triple, const InterpolationPoint& p) {
  return NaivePairMeasure(spec, triple, p).tilted_free_energy();
}

/// Law of v_s = N^-1 sum_{i in I_s} X_i for iid Rademacher X, collapsed to species sums:
/// only the k-tuple of per-species counts matters, so there are prod_s (|I_s| + 1) terms.
class RademacherProfile {
 public:
  explicit RademacherProfile(const ModelSpec& spec) : n_(spec.n()) {
    if (spec.n() > 20) throw TooLarge("Rademacher enumeration needs N <= 20");
    const int k = spec.k();
    const auto& sizes = spec.layout().sizes();
    std::vector<int> m(static_cast<std::size_t>(k), 0);
    Eigen::VectorXd count(k);
    for (;;) {
      double log_w = 0.0;
      for (int s = 0; s < k; ++s) {
        const int ns = sizes[static_cast<std::size_t>(s)];
        const int ms = m[static_cast<std::size_t>(s)];
        log_w += std::log(binomial(ns, ms)) - ns * std::log(2.0);
        count(s) = ns - 2.0 * ms;
      }
      log_weight_.push_back(log_w);
      scaled_overlap_.push_back(count.dot(spec.delta2() * count) / n_);
      int s = 0;
      while (s < k && ++m[static_cast<std::size_t>(s)] > sizes[static_cast<std::size_t>(s)]) {
        m[static_cast<std::size_t>(s)] = 0;
        ++s;
      }
      if (s == k) break;
    }
  }

  std::size_t n_terms() const noexcept { return log_weight_.size(); }

  /// E exp(x N v^T Delta^2 v), accumulated in log space.
  double exp_moment(double x) const {
    std::vector<double> terms(log_weight_.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = log_weight_[i] + x * scaled_overlap_[i];
    return std::exp(detail::log_sum_exp(terms));
  }

  /// E[v^T Delta^2 v].
  double overlap_moment() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < log_weight_.size(); ++i) acc += std::exp(log_weight_[i]) * scaled_overlap_[i];
    return acc / n_;
  }

  static double binomial(int n, int m) {
    double c = 1.0;
    for (int i = 1; i <= m; ++i) c = c * (n - m + i) / i;
    return c;
  }

 private:
  int n_;
  std::vector<double> log_weight_;
  std::vector<double> scaled_overlap_;  // N R per term
};

inline double talagrand_lhs_rademacher(const ModelSpec& spec, double x) {
  if (!(x >= 0)) throw OutOfDomain("x must be non-negative");
  return RademacherProfile(spec).exp_moment(x);
}

/// E<R>_{0,0} averaged over disorder = E[v^T Delta^2 v] = sum_s Delta^2_ss |I_s| / N^2.
inline double rademacher_overlap_moment(const ModelSpec& spec) {
  double acc = 0.0;
  for (int s = 0; s < spec.k(); ++s) acc += spec.delta2()(s, s) * spec.layout().size(s);
  return acc / (static_cast<double>(spec.n()) * spec.n());
}

/// det(I_r - 2x A^T Lambda A)^{-1/2} = E_g exp(x g^T Lambda g) for g ~ N(0, Delta^2).
inline double gaussian_quadratic_expectation(const VarianceProfile& profile, const Eigen::VectorXd& lambda_diag,
                                             double x) {
  const Eigen::MatrixXd& a = profile.factor();
  if (a.rows() != lambda_diag.size()) throw DimensionMismatch("lambda has wrong length");
  if (a.cols() == 0) return 1.0;
  const Eigen::MatrixXd core = a.transpose() * lambda_diag.asDiagonal() * a;
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(a.cols(), a.cols()) - 2.0 * x * core;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (b + b.transpose()), Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0)) throw OutOfDomain("I_r - 2x A^T Lambda A is not positive definite");
  return std::exp(-0.5 * eig.eigenvalues().array().log().sum());
}

/// Monte Carlo of E exp(x g^T Lambda g) with g = A z.
inline Estimate gaussian_quadratic_mc(const VarianceProfile& profile, const Eigen::VectorXd& lambda_diag, double x,
                                      int samples, std::uint64_t seed) {
  const Eigen::MatrixXd& a = profile.factor();
  auto rng = make_stream({seed, 0, StreamRole::Auxiliary});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(static_cast<std::size_t>(samples));
  Eigen::VectorXd z(a.cols());
  for (auto& v : values) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    const Eigen::VectorXd g = a * z;
    v = std::exp(x * g.dot(lambda_diag.asDiagonal() * g));
  }
  return mean_estimate(values, seed);
}

/// det(I/x - 2 A^T Lambda A) and the lower bound (1/x - beta_c^-2)^r.
inline std::pair<double, double> determinant_bound(const ModelSpec& spec, double x) {
  const Eigen::MatrixXd& a = spec.profile().factor();
  const int r = static_cast<int>(a.cols());
  const Eigen::MatrixXd core = 2.0 * a.transpose() * spec.lambda().asDiagonal() * a;
  const double det = (Eigen::MatrixXd::Identity(r, r) / x - core).determinant();
  return {det, std::pow(1.0 / x - criticality_radius(spec), r)};
}

/// rho(2 A^T Lambda A), which must equal rho(2 Lambda Delta^2).
inline double factor_radius(const ModelSpec& spec) {
  const Eigen::MatrixXd& a = spec.profile().factor();
  if (a.cols() == 0) return 0.0;
  const Eigen::MatrixXd core = 2.0 * a.transpose() * spec.lambda().asDiagonal() * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (core + core.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Covariance identities

struct CovarianceRow {
  std::string label;
  double expected = 0.0;
  Estimate empirical;
  bool pass = false;
};

namespace detail {
struct Moments {
  double sum_sq_dev = 0.0;
  double running_mean = 0.0;
  int n = 0;
  void add(double x) {
    ++n;
    const double d = x - running_mean;
    running_mean += d / n;
    sum_sq_dev += d * (x - running_mean);
  }
  Estimate estimate() const {
    Estimate e;
    e.n = n;
    e.value = running_mean;
    e.std_error = n > 1 ? std::sqrt(sum_sq_dev / (n - 1) / n) : 0.0;
    return e;
  }
};
}  // namespace detail

/// Empirical E[H(sigma)H(rho)] against N R(sigma,rho), plus the interpolation covariance identities
/// at each t. For the identities, consecutive entries of `pairs` play (sigma,rho) and (sigma',rho').
inline std::vector<CovarianceRow> covariance_check(const ModelSpec& spec,
                                                   const std::vector<std::pair<SpinConfig, SpinConfig>>& pairs,
                                                   int samples, std::uint64_t seed,
                                                   const std::vector<double>& t_values = {0.25, 0.5, 0.75},
                                                   double tolerance_se = 5.0) {
  const int n = spec.n();
  struct Quad {
    std::size_t first, second;
  };
  std::vector<Quad> quads;
  for (std::size_t i = 0; i + 1 < pairs.size() && quads.size() < 3; ++i) quads.push_back({i, i + 1});

  struct Pending {
    std::string label;
    double expected;
    detail::Moments m;
  };
  std::vector<Pending> rows;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    rows.push_back({"E[H(sigma)H(rho)] pair " + std::to_string(p),
                    n * multi_overlap(spec, pairs[p].first, pairs[p].second).multi, {}});
  }
  for (double t : t_values) {
    for (std::size_t q = 0; q < quads.size(); ++q) {
      const auto& [sigma, rho] = pairs[quads[q].first];
      const auto& [sigma2, rho2] = pairs[quads[q].second];
      const std::string tag = " t=" + std::to_string(t) + " quad " + std::to_string(q);
      rows.push_back({"E[dH(sigma) H1(sigma')]" + tag, 0.0, {}});
      rows.push_back({"E[dH(sigma) H2(rho')]" + tag, n * multi_overlap(spec, sigma, rho2).multi, {}});
      rows.push_back({"E[dH(rho) H2(rho')]" + tag, 0.0, {}});
      rows.push_back({"E[dH(rho) H1(sigma')]" + tag, n * multi_overlap(spec, sigma2, rho).multi, {}});
      rows.push_back({"E[dH(rho) H2(sigma')]" + tag, 0.0, {}});
    }
  }

  for (int m = 0; m < samples; ++m) {
    const auto rep = static_cast<std::uint64_t>(m);
    const CouplingMatrix g = sample_disorder(spec, StreamKey{seed, rep, StreamRole::Coupling});
    const CouplingMatrix g1 = sample_disorder(spec, StreamKey{seed, rep, StreamRole::CouplingPrime});
    const CouplingMatrix g2 = sample_disorder(spec, StreamKey{seed, rep, StreamRole::CouplingDoublePrime});
    std::size_t row = 0;
    for (const auto& [sigma, rho] : pairs) rows[row++].m.add(hamiltonian(g, sigma) * hamiltonian(g, rho));
    for (double t : t_values) {
      const double a = std::sqrt(t);
      const double b = std::sqrt(1.0 - t);
      for (const auto& quad : quads) {
        const auto& [sigma, rho] = pairs[quad.first];
        const auto& [sigma2, rho2] = pairs[quad.second];
        const double d_sigma = hamiltonian(g, sigma) / a - hamiltonian(g1, sigma) / b;
        const double d_rho = hamiltonian(g, rho) / a - hamiltonian(g2, rho) / b;
        const double h1_sigma2 = a * hamiltonian(g, sigma2) + b * hamiltonian(g1, sigma2);
        const double h2_rho2 = a * hamiltonian(g, rho2) + b * hamiltonian(g2, rho2);
        const double h2_sigma2 = a * hamiltonian(g, sigma2) + b * hamiltonian(g2, sigma2);
        rows[row++].m.add(d_sigma * h1_sigma2);
        rows[row++].m.add(d_sigma * h2_rho2);
        rows[row++].m.add(d_rho * h2_rho2);
        rows[row++].m.add(d_rho * h1_sigma2);
        rows[row++].m.add(d_rho * h2_sigma2);
      }
    }
  }

  std::vector<CovarianceRow> out;
  for (auto& r : rows) {
    CovarianceRow c;
    c.label = r.label;
    c.expected = r.expected;
    c.empirical = r.m.estimate();
    c.empirical.seed = seed;
    c.pass = std::abs(c.empirical.value - c.expected) <= tolerance_se * c.empirical.std_error + 1e-12;
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Derivatives of the tilted free energy

struct DerivativeRow {
  std::string label;
  Estimate residual;  // finite difference minus the Gibbs-average formula, per disorder triple
  bool pass = false;
};

/// Central differences of phi_N in lambda and t against beta^2 <R> and beta^2 (<R> - <R(sigma,rho')>).
/// The lambda identity holds per triple; the t identity only after averaging over triples.
inline std::vector<DerivativeRow> derivative_check(const ModelSpec& spec, const InterpolationPoint& p, int samples,
                                                   std::uint64_t seed, double h = 1e-4, double tolerance_se = 5.0) {
  p.validate();
  if (!(p.t - h >= 0.0 && p.t + h <= 1.0)) throw OutOfDomain("t must lie in [h, 1-h]");
  if (samples < 2) throw TooFewReplicates("derivative_check needs at least 2 samples");
  const double b2 = p.beta * p.beta;
  const double n = spec.n();
  detail::Moments d_lambda;
  detail::Moments d_t;
  for (int m = 0; m < samples; ++m) {
    const PairKernel kernel(spec, sample_triple(spec, seed, static_cast<std::uint64_t>(m)));
    auto phi = [&](double t, double lambda) { return kernel.sweep({t, lambda, p.beta}).log_partition / n; };
    const PairSweep centre = kernel.sweep(p);
    const double overlap = kernel.overlap(centre);
    const double cross = kernel.cross_overlap(centre);
    const double fd_lambda = (phi(p.t, p.lambda + h) - phi(p.t, p.lambda - h)) / (2.0 * h);
    const double fd_t = (phi(p.t + h, p.lambda) - phi(p.t - h, p.lambda)) / (2.0 * h);
    d_lambda.add(fd_lambda - b2 * overlap);
    d_t.add(fd_t - b2 * (overlap - cross));
  }
  std::vector<DerivativeRow> out;
  for (auto [label, moments] : {std::pair{"dphi/dlambda", &d_lambda}, std::pair{"dphi/dt", &d_t}}) {
    DerivativeRow row;
    row.label = label;
    row.residual = moments->estimate();
    row.residual.seed = seed;
    row.pass = std::abs(row.residual.value) <= std::max(1e-6, tolerance_se * row.residual.std_error);
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Test battery

/// PSD profiles with k in {1,2,3}, including rank-deficient ones.
inline std::vector<ModelFamily> psd_battery() {
  auto vec = [](std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
  };
  std::vector<ModelFamily> out;
  out.push_back({"sk", vec({1.0}), Eigen::MatrixXd::Ones(1, 1)});
  out.push_back({"two_diagonal", vec({0.5, 0.5}), Eigen::MatrixXd::Identity(2, 2)});
  out.push_back({"two_rank1", vec({0.5, 0.5}), Eigen::MatrixXd::Ones(2, 2)});
  Eigen::MatrixXd two_def(2, 2);
  two_def << 2.0, 0.5, 0.5, 1.0;
  out.push_back({"two_definite", vec({0.6, 0.4}), two_def});
  Eigen::MatrixXd a(3, 2);
  a << 1.0, 0.0, 1.0, 1.0, 0.0, 1.0;
  out.push_back({"three_rank2", vec({1.0 / 3, 1.0 / 3, 1.0 / 3}), a * a.transpose()});
  Eigen::MatrixXd three_def(3, 3);
  three_def << 1.0, 0.3, 0.2, 0.3, 1.0, 0.3, 0.2, 0.3, 1.0;
  out.push_back({"three_definite", vec({0.5, 0.25, 0.25}), three_def});
  const Eigen::Vector3d v(1.0, 0.5, 0.25);
  out.push_back({"three_rank1", vec({0.4, 0.3, 0.3}), v * v.transpose()});
  return out;
}

/// Indefinite bipartite profile [[0,1],[1,0]]; the PSD-only machinery must reject it.
inline ModelFamily bipartite_family() {
  Eigen::MatrixXd d(2, 2);
  d << 0.0, 1.0, 1.0, 0.0;
  Eigen::VectorXd half(2);
  half << 0.5, 0.5;
  return {"bipartite", half, d};
}

/// x_j = beta_c^2 * j / (points + 1), j = 1..points.
inline std::vector<double> open_x_grid(const ModelSpec& spec, int points) {
  const double bc2 = 1.0 / criticality_radius(spec);
  std::vector<double> xs;
  for (int j = 1; j <= points; ++j) xs.push_back(bc2 * j / (points + 1));
  return xs;
}

// ---------------------------------------------------------------------------
// log cosh bound and the exponential-moment chain

inline double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

struct ChainRow {
  std::string model;
  int n = 0;
  double x = 0.0;
  double rademacher = 0.0;  // E exp(x N R) under Rademacher overlaps
  double gaussian = 0.0;    // E_g exp(x g^T Lambda_N g)
  double rhs = 0.0;         // (1 - beta_c^-2 x)^{-r/2}
  bool pass = false;
};

struct LogCoshReport {
  int pointwise_violations = 0;
  int chain_violations = 0;
  std::vector<ChainRow> chain;
};

/// log cosh t <= t^2/2 on `grid`, and rademacher <= gaussian <= rhs on the battery at each n.
inline LogCoshReport logcosh_bound_check(const std::vector<double>& grid,
                                         const std::vector<ModelFamily>& battery = psd_battery(),
                                         const std::vector<int>& sizes = {8, 12}, int x_points = 20) {
  constexpr double kRel = 1e-12;
  LogCoshReport report;
  for (double t : grid) {
    if (log_cosh(t) > 0.5 * t * t * (1.0 + kRel)) ++report.pointwise_violations;
  }
  for (const auto& family : battery) {
    for (int n : sizes) {
      const ModelSpec spec = family.at(n);
      const RademacherProfile rademacher(spec);
      for (double x : open_x_grid(spec, x_points)) {
        ChainRow row;
        row.model = family.name;
        row.n = n;
        row.x = x;
        row.rademacher = rademacher.exp_moment(x);
        row.gaussian = gaussian_quadratic_expectation(spec.profile(), spec.layout().densities(), x);
        row.rhs = talagrand_rhs(spec, x);
        row.pass = row.rademacher <= row.gaussian * (1.0 + kRel) && row.gaussian <= row.rhs * (1.0 + kRel);
        if (!row.pass) ++report.chain_violations;
        report.chain.push_back(row);
      }
    }
  }
  return report;
}

}  // namespace mskvar::oracles
