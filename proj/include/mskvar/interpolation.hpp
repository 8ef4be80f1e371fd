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

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "mskvar/error.hpp"
#include "mskvar/model.hpp"
#include "mskvar/rng.hpp"
#include "mskvar/spin.hpp"
#include "mskvar/stats.hpp"

namespace mskvar {

/// Independent couplings for H_N, H'_N and H''_N.
struct DisorderTriple {
  CouplingMatrix g;
  CouplingMatrix g1;
  CouplingMatrix g2;

  int n() const noexcept { return g.n(); }
  void validate() const {
    if (g.n() != g1.n() || g.n() != g2.n()) throw DimensionMismatch("disorder triple sizes differ");
  }
  static DisorderTriple zeros(int n) { return {CouplingMatrix(n), CouplingMatrix(n), CouplingMatrix(n)}; }
};

/// Replicate m draws g, g1, g2 from the substreams (seed, m, role).
inline DisorderTriple sample_triple(const ModelSpec& spec, std::uint64_t seed, std::uint64_t replicate) {
  return {sample_disorder(spec, StreamKey{seed, replicate, StreamRole::Coupling}),
          sample_disorder(spec, StreamKey{seed, replicate, StreamRole::CouplingPrime}),
          sample_disorder(spec, StreamKey{seed, replicate, StreamRole::CouplingDoublePrime})};
}

/// (t, lambda, beta) selecting the measure <.>_{t,lambda}.
struct InterpolationPoint {
  double t = 0.0;
  double lambda = 0.0;
  double beta = 1.0;

  void validate() const {
    if (!(t >= 0.0 && t <= 1.0)) throw OutOfDomain("t must lie in [0,1]");
    if (!std::isfinite(lambda)) throw OutOfDomain("lambda must be finite");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw OutOfDomain("beta must be non-negative");
  }
};

inline constexpr int kDefaultMaxPairSpins = 13;

/// (H^1_{N,t}(sigma), H^2_{N,t}(rho)).
inline std::pair<double, double> pair_hamiltonians(const DisorderTriple& triple, double t, const SpinConfig& sigma,
                                                   const SpinConfig& rho) {
  triple.validate();
  if (!(t >= 0.0 && t <= 1.0)) throw OutOfDomain("t must lie in [0,1]");
  const double a = std::sqrt(t);
  const double b = std::sqrt(1.0 - t);
  const double shared_sigma = hamiltonian(triple.g, sigma);
  const double shared_rho = hamiltonian(triple.g, rho);
  return {a * shared_sigma + b * hamiltonian(triple.g1, sigma), a * shared_rho + b * hamiltonian(triple.g2, rho)};
}

/// Exact pair-Gibbs sums for one disorder triple.
struct PairSweep {
  double log_partition = 0.0;     // log sum_{sigma,rho} exp(beta(H1+H2) + lambda beta^2 N R)
  Eigen::VectorXd xor_probability;  // law of tau = sigma ^ rho
  Eigen::VectorXd first_marginal;   // law of sigma
  Eigen::VectorXd second_marginal;  // law of rho
};

/// Energy tables of one disorder triple plus the spin-cube tables shared by every (t, lambda, beta).
/// Building it costs three Gray-code sweeps; each query reuses them.
class PairKernel {
 public:
  PairKernel(const ModelSpec& spec, const DisorderTriple& triple, int n_max = kDefaultMaxPairSpins)
      : n_(spec.n()), cube_(check_size(spec, triple, n_max)) {
    energy_g_ = energy_table(triple.g, n_max);
    energy_g1_ = energy_table(triple.g1, n_max);
    energy_g2_ = energy_table(triple.g2, n_max);
    scaled_overlap_ = scaled_overlap_table(spec);
    spin_variance_ = spec.spin_variance();
  }

  int n() const noexcept { return n_; }

  /// N R(tau) indexed by tau = sigma ^ rho.
  const Eigen::VectorXd& scaled_overlap() const noexcept { return scaled_overlap_; }

  /// Energies of H^1_{N,t} (replica = 1) or H^2_{N,t} (replica = 2).
  Eigen::VectorXd interpolated_energies(double t, int replica) const {
    const Eigen::VectorXd& own = replica == 1 ? energy_g1_ : energy_g2_;
    return std::sqrt(t) * energy_g_ + std::sqrt(1.0 - t) * own;
  }

  /// Nested sweep over (sigma, rho) with weights exp(a_sigma + b_rho + q_{sigma^rho}).
  PairSweep sweep(const InterpolationPoint& p) const {
    p.validate();
    const Eigen::VectorXd a = p.beta * interpolated_energies(p.t, 1);
    const Eigen::VectorXd b = p.beta * interpolated_energies(p.t, 2);
    const Eigen::VectorXd q = (p.lambda * p.beta * p.beta) * scaled_overlap_;
    const double a_max = a.maxCoeff();
    const double b_max = b.maxCoeff();
    const double q_max = q.maxCoeff();
    // Every row sum is >= exp(-(range a + range b)) after shifting; keep it representable.
    if ((a_max - a.minCoeff()) + (b_max - b.minCoeff()) > 650.0) {
      throw OutOfDomain("Boltzmann weights span more than the double range; reduce beta");
    }
    const Eigen::VectorXd ea = (a.array() - a_max).exp().matrix();
    const Eigen::VectorXd eb = (b.array() - b_max).exp().matrix();
    const Eigen::VectorXd eq = (q.array() - q_max).exp().matrix();

    const auto count = static_cast<std::size_t>(ea.size());
    std::vector<double> row_mass(count, 0.0);
    std::vector<double> col(count, 0.0);
    std::vector<double> by_xor(count, 0.0);
    const double* pb = eb.data();
    const double* pq = eq.data();
    for (std::size_t s = 0; s < count; ++s) {
      const double weight_s = ea(static_cast<Eigen::Index>(s));
      double row = 0.0;
      for (std::size_t r = 0; r < count; ++r) {
        const std::size_t x = s ^ r;
        const double w = pb[r] * pq[x];
        row += w;
        const double full = weight_s * w;
        col[r] += full;
        by_xor[x] += full;
      }
      row_mass[s] = weight_s * row;
    }
    const double total = pairwise_sum(row_mass);

    PairSweep out;
    out.log_partition = std::log(total) + a_max + b_max + q_max;
    out.first_marginal = Eigen::Map<const Eigen::VectorXd>(row_mass.data(), ea.size()) / total;
    out.second_marginal = Eigen::Map<const Eigen::VectorXd>(col.data(), ea.size()) / total;
    out.xor_probability = Eigen::Map<const Eigen::VectorXd>(by_xor.data(), ea.size()) / total;
    return out;
  }

  /// <R(sigma,rho)> under the pair law summarized by `sw`.
  double overlap(const PairSweep& sw) const { return sw.xor_probability.dot(scaled_overlap_) / n_; }

  /// <R(sigma,rho')> for independent pairs: N^-2 sum_ij Delta^2_{s(i)s(j)} <s_i s_j>_1 <r_i r_j>_2.
  double cross_overlap(const PairSweep& sw) const {
    return product_overlap(sw.first_marginal, sw.second_marginal);
  }

  /// <exp(x N R(sigma,rho))> under the pair law.
  double exp_moment(const PairSweep& sw, double x) const {
    return sw.xor_probability.dot((x * scaled_overlap_).array().exp().matrix());
  }

  /// <R>_t at lambda = 0, where the pair law is the product of the two single-replica Gibbs measures.
  double product_measure_overlap(double t, double beta) const {
    if (!(t >= 0.0 && t <= 1.0)) throw OutOfDomain("t must lie in [0,1]");
    const GibbsWeights first = gibbs_weights(interpolated_energies(t, 1), beta);
    const GibbsWeights second = gibbs_weights(interpolated_energies(t, 2), beta);
    return product_overlap(first.probability, second.probability);
  }

 private:
  static int check_size(const ModelSpec& spec, const DisorderTriple& triple, int n_max) {
    triple.validate();
    if (triple.n() != spec.n()) throw DimensionMismatch("disorder triple does not match the model size");
    if (spec.n() > n_max) {
      throw TooLarge("N = " + std::to_string(spec.n()) + " exceeds pair enumeration limit " + std::to_string(n_max));
    }
    return spec.n();
  }

  double product_overlap(const Eigen::VectorXd& first, const Eigen::VectorXd& second) const {
    const Eigen::MatrixXd m1 = cube_.correlations(first);
    const Eigen::MatrixXd m2 = cube_.correlations(second);
    const double n2 = static_cast<double>(n_) * n_;
    return (spin_variance_.array() * m1.array() * m2.array()).sum() / n2;
  }

  int n_;
  SpinCube cube_;
  Eigen::VectorXd energy_g_;
  Eigen::VectorXd energy_g1_;
  Eigen::VectorXd energy_g2_;
  Eigen::VectorXd scaled_overlap_;
  Eigen::MatrixXd spin_variance_;
};

/// phi_N(t, lambda) for the given disorder: N^-1 log sum exp(beta(H1 + H2) + lambda beta^2 N R).
inline double tilted_free_energy(const ModelSpec& spec, const DisorderTriple& triple, const InterpolationPoint& p,
                                 int n_max = kDefaultMaxPairSpins) {
  const PairKernel kernel(spec, triple, n_max);
  return kernel.sweep(p).log_partition / spec.n();
}

/// <R(sigma,rho)>_{t,lambda} for the given disorder.
inline double pair_gibbs_overlap(const ModelSpec& spec, const DisorderTriple& triple, const InterpolationPoint& p,
                                 int n_max = kDefaultMaxPairSpins) {
  const PairKernel kernel(spec, triple, n_max);
  return kernel.overlap(kernel.sweep(p));
}

/// <R(sigma,rho')>_{t,lambda}, with (sigma,rho) and (sigma',rho') independent pairs.
inline double pair_gibbs_cross_overlap(const ModelSpec& spec, const DisorderTriple& triple,
                                       const InterpolationPoint& p, int n_max = kDefaultMaxPairSpins) {
  const PairKernel kernel(spec, triple, n_max);
  return kernel.cross_overlap(kernel.sweep(p));
}

}  // namespace mskvar
