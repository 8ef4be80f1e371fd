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

#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace mskvar {
namespace {

using testing::matrix;

DisorderTriple hand_triple() {
  return {CouplingMatrix(2, {0.3, -0.5, 0.2, 0.1}), CouplingMatrix(2, {1, 0, 0, -1}),
          CouplingMatrix(2, {0, 0.7, 0.4, 0})};
}

TEST(PairHamiltonians, Endpoints) {
  testing::Gen gen(1);
  const DisorderTriple tr = gen.triple(4);
  const SpinConfig s = gen.spins(4);
  const SpinConfig r = gen.spins(4);
  const auto [c1, c2] = pair_hamiltonians(tr, 1.0, s, r);
  EXPECT_DOUBLE_EQ(c1, hamiltonian(tr.g, s));
  EXPECT_DOUBLE_EQ(c2, hamiltonian(tr.g, r));
  const auto [d1, d2] = pair_hamiltonians(tr, 0.0, s, r);
  EXPECT_DOUBLE_EQ(d1, hamiltonian(tr.g1, s));
  EXPECT_DOUBLE_EQ(d2, hamiltonian(tr.g2, r));
  const auto [z1, z2] = pair_hamiltonians(DisorderTriple::zeros(4), 0.4, s, r);
  EXPECT_EQ(z1, 0.0);
  EXPECT_EQ(z2, 0.0);
  EXPECT_THROW(pair_hamiltonians(tr, 1.5, s, r), OutOfDomain);
  EXPECT_THROW(pair_hamiltonians(tr, 0.5, s, SpinConfig::all_up(3)), DimensionMismatch);
}

TEST(TiltedFreeEnergy, DecoupledPointFactorizes) {
  testing::Gen gen(2);
  const ModelSpec spec({3, 3}, matrix({{1, 0.5}, {0.5, 1}}));
  const DisorderTriple tr = gen.triple(6);
  const double beta = 0.9;
  const double expected = (free_energy_exact(tr.g1, beta) + free_energy_exact(tr.g2, beta)) / 6;
  EXPECT_NEAR(tilted_free_energy(spec, tr, {0.0, 0.0, beta}), expected, 1e-12);
}

TEST(TiltedFreeEnergy, InfiniteTemperature) {
  testing::Gen gen(3);
  const ModelSpec spec({5}, matrix({{1.0}}));
  EXPECT_NEAR(tilted_free_energy(spec, gen.triple(5), {0.3, 0.0, 0.0}), 2 * std::log(2.0), 1e-14);
}

TEST(TiltedFreeEnergy, TwoSpinHandValue) {
  const ModelSpec spec({2}, matrix({{1.0}}));
  const InterpolationPoint p{0.3, 0.8, 1.1};
  EXPECT_NEAR(tilted_free_energy(spec, hand_triple(), p), 2.3057013764150951, 1e-12);
  EXPECT_NEAR(pair_gibbs_overlap(spec, hand_triple(), p), 0.85832402095981713, 1e-12);
  EXPECT_NEAR(oracles::tilted_naive(spec, hand_triple(), p), 2.3057013764150951, 1e-12);
}

TEST(TiltedFreeEnergy, MatchesNaiveSum) {
  const auto battery = oracles::psd_battery();
  for (int c = 0; c < 30; ++c) {
    testing::Gen gen(400 + c);
    const auto& family = battery[static_cast<std::size_t>(c) % battery.size()];
    const int n = gen.integer(static_cast<int>(family.densities.size()), 6);
    const ModelSpec spec = family.at(n);
    const DisorderTriple tr = gen.triple(n);
    const InterpolationPoint p{gen.uniform(0, 1), gen.uniform(-1, 2), gen.uniform(0.1, 1.5)};
    const PairKernel kernel(spec, tr);
    const PairSweep sw = kernel.sweep(p);
    const oracles::NaivePairMeasure naive(spec, tr, p);
    EXPECT_LE(testing::relative_error(sw.log_partition / n, naive.tilted_free_energy()), 1e-9) << "case " << c;
    EXPECT_LE(testing::relative_error(kernel.overlap(sw), naive.overlap()), 1e-9) << "case " << c;
  }
}

TEST(TiltedFreeEnergy, PairLimit) {
  const ModelSpec spec({14}, matrix({{1.0}}));
  EXPECT_THROW(tilted_free_energy(spec, DisorderTriple::zeros(14), {0.5, 0.0, 1.0}), TooLarge);
}

TEST(TiltedFreeEnergy, ConvexInLambda) {
  for (int c = 0; c < 20; ++c) {
    testing::Gen gen(500 + c);
    const int n = gen.integer(2, 7);
    const ModelSpec spec = gen.psd_spec(n);
    const PairKernel kernel(spec, gen.triple(n));
    const double t = gen.uniform(0, 1);
    const double beta = gen.uniform(0.2, 1.5);
    const double h = 0.05;
    for (double lambda = -1.0; lambda <= 2.0; lambda += 0.25) {
      auto phi = [&](double l) { return kernel.sweep({t, l, beta}).log_partition / n; };
      EXPECT_GE(phi(lambda + h) - 2 * phi(lambda) + phi(lambda - h), -1e-8) << "case " << c;
    }
  }
}

TEST(TiltedFreeEnergy, LambdaDerivativeIsOverlap) {
  for (int c = 0; c < 20; ++c) {
    testing::Gen gen(600 + c);
    const int n = gen.integer(2, 8);
    const ModelSpec spec = gen.psd_spec(n);
    const PairKernel kernel(spec, gen.triple(n));
    const InterpolationPoint p{gen.uniform(0, 1), gen.uniform(-0.5, 1.0), gen.uniform(0.2, 1.2)};
    const double h = 1e-4;
    auto phi = [&](double l) { return kernel.sweep({p.t, l, p.beta}).log_partition / n; };
    const double fd = (phi(p.lambda + h) - phi(p.lambda - h)) / (2 * h);
    EXPECT_NEAR(fd, p.beta * p.beta * kernel.overlap(kernel.sweep(p)), 1e-6) << "case " << c;
  }
}

TEST(TiltedFreeEnergy, DerivativeIdentitiesOnAverage) {
  const ModelSpec spec({3, 2}, matrix({{2, 0.5}, {0.5, 1}}));
  const auto rows = oracles::derivative_check(spec, {0.5, 0.6, 0.7}, 400, 77);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.pass) << r.label << " residual " << r.residual.value << " se " << r.residual.std_error;
  }
  // At lambda = 0 the two overlaps coincide for every triple; only the average of dphi/dt vanishes.
  const auto flat = oracles::derivative_check(spec, {0.5, 0.0, 0.7}, 400, 78);
  EXPECT_TRUE(flat[1].pass) << flat[1].residual.value << " se " << flat[1].residual.std_error;
  const PairKernel kernel(spec, sample_triple(spec, 78, 0));
  const PairSweep sw = kernel.sweep({0.5, 0.0, 0.7});
  EXPECT_NEAR(kernel.overlap(sw), kernel.cross_overlap(sw), 1e-14);
}

TEST(TiltedFreeEnergy, MonotoneAlongShiftedPath) {
  const ModelSpec spec({3, 3}, matrix({{1, 0.5}, {0.5, 0.25}}));
  const double beta = 0.7;
  for (double t : {0.25, 0.5, 1.0}) {
    for (double lambda : {0.0, 0.3}) {
      std::vector<double> diff;
      for (int m = 0; m < 300; ++m) {
        const PairKernel kernel(spec, sample_triple(spec, 91, static_cast<std::uint64_t>(m)));
        diff.push_back((kernel.sweep({t, lambda, beta}).log_partition -
                        kernel.sweep({0.0, lambda + t, beta}).log_partition) / spec.n());
      }
      const Estimate e = mean_estimate(diff);
      EXPECT_LE(e.value, 5 * e.std_error) << "t=" << t << " lambda=" << lambda;
    }
  }
}

TEST(PairGibbsOverlap, ZeroDisorderIsUniform) {
  const ModelSpec sk({6}, matrix({{1.0}}));
  EXPECT_NEAR(pair_gibbs_overlap(sk, DisorderTriple::zeros(6), {0.4, 0.0, 1.3}), 1.0 / 6, 1e-14);
  const ModelSpec two({3, 2}, matrix({{2, 0.5}, {0.5, 1}}));
  EXPECT_NEAR(pair_gibbs_overlap(two, DisorderTriple::zeros(5), {0.7, 0.0, 0.5}), 0.32, 1e-14);
}

TEST(PairGibbsOverlap, LargeTiltReachesMaximum) {
  testing::Gen gen(5);
  const ModelSpec spec({4, 2}, matrix({{1, 0.5}, {0.5, 1}}));
  const double value = pair_gibbs_overlap(spec, gen.triple(6, 0.3), {0.5, 50.0, 1.0});
  EXPECT_NEAR(value, overlap_upper_bound(spec), 1e-3);
}

TEST(PairGibbsOverlap, NonNegativeForPsdProfiles) {
  for (int c = 0; c < 30; ++c) {
    testing::Gen gen(700 + c);
    const int n = gen.integer(1, 7);
    const ModelSpec spec = gen.psd_spec(n);
    const PairKernel kernel(spec, gen.triple(n));
    const PairSweep sw = kernel.sweep({gen.uniform(0, 1), gen.uniform(-2, 2), gen.uniform(0, 2)});
    EXPECT_GE(kernel.overlap(sw), -1e-14);
    EXPECT_GE(kernel.cross_overlap(sw), -1e-14);
  }
}

TEST(PairGibbsOverlap, ProductRouteMatchesSweep) {
  for (int c = 0; c < 20; ++c) {
    testing::Gen gen(800 + c);
    const int n = gen.integer(1, 8);
    const ModelSpec spec = gen.psd_spec(n);
    const PairKernel kernel(spec, gen.triple(n));
    const double t = gen.uniform(0, 1);
    const double beta = gen.uniform(0.1, 1.5);
    EXPECT_NEAR(kernel.product_measure_overlap(t, beta), kernel.overlap(kernel.sweep({t, 0.0, beta})), 1e-12);
  }
}

TEST(PairGibbsCrossOverlap, DecoupledPointEqualsOverlap) {
  testing::Gen gen(6);
  const ModelSpec spec({4, 3}, matrix({{1, 1}, {1, 2}}));
  const DisorderTriple tr = gen.triple(7);
  const InterpolationPoint p{0.0, 0.0, 1.2};
  EXPECT_NEAR(pair_gibbs_cross_overlap(spec, tr, p), pair_gibbs_overlap(spec, tr, p), 1e-12);
}

TEST(PairGibbsCrossOverlap, ZeroDisorderKeepsDiagonalTerms) {
  const ModelSpec two({3, 2}, matrix({{2, 0.5}, {0.5, 1}}));
  const InterpolationPoint p{0.5, 0.0, 1.0};
  EXPECT_NEAR(pair_gibbs_cross_overlap(two, DisorderTriple::zeros(5), p), 0.32, 1e-14);
  EXPECT_NEAR(oracles::NaivePairMeasure(two, DisorderTriple::zeros(5), p).cross_overlap(), 0.32, 1e-12);
}

TEST(PairGibbsCrossOverlap, MatchesDoublePairOracle) {
  const auto battery = oracles::psd_battery();
  for (int c = 0; c < 16; ++c) {
    testing::Gen gen(900 + c);
    const auto& family = battery[static_cast<std::size_t>(c) % battery.size()];
    const int n = gen.integer(static_cast<int>(family.densities.size()), 4);
    const ModelSpec spec = family.at(n);
    const DisorderTriple tr = gen.triple(n);
    const InterpolationPoint p{gen.uniform(0, 1), gen.uniform(-1, 2), gen.uniform(0.1, 1.5)};
    const PairKernel kernel(spec, tr);
    EXPECT_LE(testing::relative_error(kernel.cross_overlap(kernel.sweep(p)),
                                      oracles::NaivePairMeasure(spec, tr, p).cross_overlap()),
              1e-9)
        << "case " << c;
  }
}

TEST(PairGibbsCrossOverlap, SymmetricInReplicaRoles) {
  testing::Gen gen(8);
  const ModelSpec spec({2, 1}, matrix({{1, 0.5}, {0.5, 2}}));
  const DisorderTriple tr = gen.triple(3);
  const InterpolationPoint p{0.35, 0.9, 1.1};
  const oracles::NaivePairMeasure naive(spec, tr, p);
  // <R(sigma', rho)> by direct double-pair enumeration.
  double swapped = 0.0;
  double z = 0.0;
  std::vector<double> w(64);
  for (SpinBits s = 0; s < 8; ++s) {
    for (SpinBits r = 0; r < 8; ++r) {
      const auto [h1, h2] = pair_hamiltonians(tr, p.t, SpinConfig::from_bits(s, 3), SpinConfig::from_bits(r, 3));
      const double q = multi_overlap(spec, SpinConfig::from_bits(s, 3), SpinConfig::from_bits(r, 3)).multi;
      w[s * 8 + r] = std::exp(p.beta * (h1 + h2) + p.lambda * p.beta * p.beta * 3 * q);
      z += w[s * 8 + r];
    }
  }
  for (SpinBits s = 0; s < 8; ++s) {
    for (SpinBits r = 0; r < 8; ++r) {
      for (SpinBits s2 = 0; s2 < 8; ++s2) {
        for (SpinBits r2 = 0; r2 < 8; ++r2) {
          swapped += w[s * 8 + r] * w[s2 * 8 + r2] *
                     multi_overlap(spec, SpinConfig::from_bits(s2, 3), SpinConfig::from_bits(r, 3)).multi;
        }
      }
    }
  }
  swapped /= z * z;
  EXPECT_NEAR(swapped, naive.cross_overlap(), 1e-12);
  EXPECT_NEAR(swapped, pair_gibbs_cross_overlap(spec, tr, p), 1e-12);
}

}  // namespace
}  // namespace mskvar
