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

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mskvar/error.hpp"
#include "mskvar/model.hpp"

namespace mskvar {

/// Spin states are indexed by bit patterns: bit i set means sigma_i = -1.
using SpinBits = std::uint64_t;

inline constexpr int kDefaultMaxSpins = 24;

class SpinConfig {
 public:
  SpinConfig() = default;
  explicit SpinConfig(std::vector<int> spins) {
    spins_.reserve(spins.size());
    for (std::size_t i = 0; i < spins.size(); ++i) {
      if (spins[i] != 1 && spins[i] != -1) {
        throw ValidationError("spins[" + std::to_string(i) + "]", "spin must be +1 or -1");
      }
      spins_.push_back(static_cast<std::int8_t>(spins[i]));
    }
  }

  static SpinConfig from_bits(SpinBits bits, int n) {
    SpinConfig out;
    out.spins_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.spins_[static_cast<std::size_t>(i)] = ((bits >> i) & 1U) ? -1 : 1;
    return out;
  }

  static SpinConfig all_up(int n) { return from_bits(0, n); }

  SpinBits bits() const {
    if (spins_.size() > 64) throw TooLarge("bit encoding needs n <= 64");
    SpinBits b = 0;
    for (std::size_t i = 0; i < spins_.size(); ++i) {
      if (spins_[i] < 0) b |= SpinBits{1} << i;
    }
    return b;
  }

  int size() const noexcept { return static_cast<int>(spins_.size()); }
  int operator[](int i) const { return spins_[static_cast<std::size_t>(i)]; }
  void flip(int i) { spins_[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(-spins_[static_cast<std::size_t>(i)]); }

  SpinConfig operator-() const {
    SpinConfig out = *this;
    for (auto& s : out.spins_) s = static_cast<std::int8_t>(-s);
    return out;
  }

  friend bool operator==(const SpinConfig&, const SpinConfig&) = default;

 private:
  std::vector<std::int8_t> spins_;
};

/// One disorder sample g_ij, stored row-major. Diagonal included, not symmetrized.
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  explicit CouplingMatrix(int n) : n_(n), g_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0) {
    if (n <= 0) throw DimensionMismatch("coupling matrix needs n >= 1");
  }
  CouplingMatrix(int n, std::vector<double> values) : n_(n), g_(std::move(values)) {
    if (n <= 0 || g_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
      throw DimensionMismatch("coupling matrix needs n*n entries");
    }
  }
  static CouplingMatrix from_eigen(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("coupling matrix must be square");
    CouplingMatrix out(static_cast<int>(m.rows()));
    for (int i = 0; i < out.n_; ++i) {
      for (int j = 0; j < out.n_; ++j) out(i, j) = m(i, j);
    }
    return out;
  }

  int n() const noexcept { return n_; }
  double operator()(int i, int j) const { return g_[index(i, j)]; }
  double& operator()(int i, int j) { return g_[index(i, j)]; }
  std::span<const double> values() const noexcept { return g_; }
  std::span<double> values() noexcept { return g_; }

  bool all_finite() const {
    for (double v : g_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  /// a*lhs + b*rhs, used for the interpolated couplings sqrt(t) g + sqrt(1-t) g'.
  static CouplingMatrix combine(double a, const CouplingMatrix& lhs, double b, const CouplingMatrix& rhs) {
    if (lhs.n_ != rhs.n_) throw DimensionMismatch("coupling matrices differ in size");
    CouplingMatrix out(lhs.n_);
    for (std::size_t i = 0; i < out.g_.size(); ++i) out.g_[i] = a * lhs.g_[i] + b * rhs.g_[i];
    return out;
  }

  friend bool operator==(const CouplingMatrix&, const CouplingMatrix&) = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
  }

  int n_ = 0;
  std::vector<double> g_;
};

/// Within-species overlaps R_s and the multi-overlap v^T Delta^2 v.
struct OverlapVector {
  std::vector<double> r_by_species;
  double multi = 0.0;
};

/// H_N(sigma) = N^{-1/2} sum_{i,j} g_ij sigma_i sigma_j, full double sum.
inline double hamiltonian(const CouplingMatrix& g, const SpinConfig& sigma) {
  if (g.n() != sigma.size()) throw DimensionMismatch("spin configuration length differs from N");
  const int n = g.n();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += g(i, j) * sigma[j];
    total += sigma[i] * row;
  }
  return total / std::sqrt(static_cast<double>(n));
}

inline OverlapVector multi_overlap(const ModelSpec& spec, const SpinConfig& sigma, const SpinConfig& rho) {
  const int n = spec.n();
  if (sigma.size() != n || rho.size() != n) throw DimensionMismatch("spin configuration length differs from N");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(spec.k());
  for (int i = 0; i < n; ++i) counts(spec.layout().species_of(i)) += sigma[i] * rho[i];
  const Eigen::VectorXd v = counts / n;
  OverlapVector out;
  out.r_by_species.assign(v.data(), v.data() + v.size());
  out.multi = v.dot(spec.delta2() * v);
  return out;
}

/// N R(sigma,rho) for every xor pattern tau = sigma ^ rho, i.e. c^T Delta^2 c / N with
/// c_s = |I_s| - 2 popcount(tau & mask_s).
inline Eigen::VectorXd scaled_overlap_table(const ModelSpec& spec) {
  const int n = spec.n();
  if (n > 30) throw TooLarge("overlap table needs n <= 30");
  const int k = spec.k();
  std::vector<SpinBits> masks(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s) masks[static_cast<std::size_t>(s)] = spec.layout().mask(s);
  const SpinBits count = SpinBits{1} << n;
  Eigen::VectorXd out(static_cast<Eigen::Index>(count));
  Eigen::VectorXd c(k);
  for (SpinBits tau = 0; tau < count; ++tau) {
    for (int s = 0; s < k; ++s) {
      c(s) = spec.layout().size(s) - 2.0 * std::popcount(tau & masks[static_cast<std::size_t>(s)]);
    }
    out(static_cast<Eigen::Index>(tau)) = c.dot(spec.delta2() * c) / n;
  }
  return out;
}

/// Visits the first 2^free_spins states in Gray-code order, passing (bits, raw energy) where
/// raw energy is sum_{i,j} g_ij sigma_i sigma_j. Spins >= free_spins stay at +1.
/// Each step flips one spin and updates the cached fields h_i = sum_{j != i} (g_ij + g_ji) sigma_j
/// in O(N).
template <class Visit>
void gray_walk(const CouplingMatrix& g, int free_spins, Visit&& visit) {
  const int n = g.n();
  const auto un = static_cast<std::size_t>(n);
  std::vector<double> sym(un * un);
  double energy = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      sym[static_cast<std::size_t>(i) * un + static_cast<std::size_t>(j)] = (i == j) ? 0.0 : g(i, j) + g(j, i);
      energy += g(i, j);
    }
  }
  std::vector<double> field(un, 0.0);
  for (std::size_t i = 0; i < un; ++i) {
    for (std::size_t j = 0; j < un; ++j) field[i] += sym[i * un + j];
  }
  std::vector<double> sigma(un, 1.0);
  SpinBits state = 0;
  visit(state, energy);
  const SpinBits count = SpinBits{1} << free_spins;
  double* h = field.data();
  for (SpinBits step = 1; step < count; ++step) {
    const int i = std::countr_zero(step);
    const double flipped = -sigma[static_cast<std::size_t>(i)];
    sigma[static_cast<std::size_t>(i)] = flipped;
    energy += 2.0 * flipped * h[i];
    const double delta = 2.0 * flipped;
    const double* row = sym.data() + static_cast<std::size_t>(i) * un;
    for (std::size_t j = 0; j < un; ++j) h[j] += delta * row[j];
    state ^= SpinBits{1} << i;
    visit(state, energy);
  }
}

inline void require_enumerable(const CouplingMatrix& g, int n_max) {
  if (g.n() > n_max) {
    throw TooLarge("N = " + std::to_string(g.n()) + " exceeds enumeration limit " + std::to_string(n_max));
  }
  if (!g.all_finite()) throw NonFinite("coupling matrix has non-finite entries");
}

/// H(sigma) for all 2^N states indexed by SpinBits.
inline Eigen::VectorXd energy_table(const CouplingMatrix& g, int n_max = kDefaultMaxSpins) {
  require_enumerable(g, n_max);
  Eigen::VectorXd out(static_cast<Eigen::Index>(SpinBits{1} << g.n()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.n()));
  gray_walk(g, g.n(), [&](SpinBits state, double raw) { out(static_cast<Eigen::Index>(state)) = raw * scale; });
  return out;
}

/// Streaming log(sum exp x) with a running maximum; values arrive in blocks.
class LogSumExp {
 public:
  void add_block(std::span<const double> xs) {
    if (xs.empty()) return;
    double block_max = -std::numeric_limits<double>::infinity();
    for (double x : xs) block_max = std::max(block_max, x);
    double block_sum = 0.0;
    for (double x : xs) block_sum += std::exp(x - block_max);
    if (block_max > max_) {
      sum_ = sum_ * std::exp(max_ - block_max) + block_sum;
      max_ = block_max;
    } else {
      sum_ += block_sum * std::exp(block_max - max_);
    }
  }
  double value() const { return max_ + std::log(sum_); }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

/// F_N(beta) = log sum_sigma exp(beta H_N(sigma)).
/// H(sigma) = H(-sigma), so only the 2^(N-1) states with the last spin up are visited.
inline double free_energy_exact(const CouplingMatrix& g, double beta, int n_max = kDefaultMaxSpins) {
  require_enumerable(g, n_max);
  const double scale = beta / std::sqrt(static_cast<double>(g.n()));
  constexpr std::size_t kBlock = 2048;
  std::array<double, kBlock> buffer{};
  std::size_t fill = 0;
  LogSumExp lse;
  gray_walk(g, g.n() - 1, [&](SpinBits, double raw) {
    buffer[fill++] = raw * scale;
    if (fill == kBlock) {
      lse.add_block(buffer);
      fill = 0;
    }
  });
  lse.add_block(std::span<const double>(buffer.data(), fill));
  return lse.value() + std::log(2.0);
}

/// <f>_beta for a single replica; two passes (maximum, then shifted accumulation).
template <class Observable>
double gibbs_expectation(const CouplingMatrix& g, double beta, Observable&& f, int n_max = kDefaultMaxSpins) {
  require_enumerable(g, n_max);
  const int n = g.n();
  const double scale = beta / std::sqrt(static_cast<double>(n));
  double top = -std::numeric_limits<double>::infinity();
  gray_walk(g, n, [&](SpinBits, double raw) { top = std::max(top, raw * scale); });

  SpinConfig sigma = SpinConfig::all_up(n);
  SpinBits current = 0;
  double z = 0.0;
  double acc = 0.0;
  gray_walk(g, n, [&](SpinBits state, double raw) {
    const SpinBits changed = state ^ current;
    if (changed != 0) sigma.flip(std::countr_zero(changed));
    current = state;
    const double w = std::exp(raw * scale - top);
    z += w;
    acc += w * static_cast<double>(f(static_cast<const SpinConfig&>(sigma)));
  });
  return acc / z;
}

/// Normalized Gibbs probabilities exp(beta E - max) / Z over a state table.
struct GibbsWeights {
  Eigen::VectorXd probability;
  double log_partition = 0.0;
};

inline GibbsWeights gibbs_weights(const Eigen::VectorXd& energies, double beta) {
  const Eigen::VectorXd x = beta * energies;
  const double top = x.maxCoeff();
  GibbsWeights out;
  out.probability = (x.array() - top).exp().matrix();
  const double z = out.probability.sum();
  out.probability /= z;
  out.log_partition = top + std::log(z);
  return out;
}

/// Sign matrix of the hypercube: row = state bits, column i = sigma_i.
class SpinCube {
 public:
  explicit SpinCube(int n) : n_(n) {
    if (n > 20) throw TooLarge("sign table needs n <= 20");
    const auto count = static_cast<Eigen::Index>(SpinBits{1} << n);
    signs_.resize(count, n);
    for (Eigen::Index b = 0; b < count; ++b) {
      for (int i = 0; i < n; ++i) signs_(b, i) = ((static_cast<SpinBits>(b) >> i) & 1U) ? -1.0 : 1.0;
    }
  }

  int n() const noexcept { return n_; }
  const Eigen::MatrixXd& signs() const noexcept { return signs_; }

  /// <sigma_i sigma_j> under a probability vector over states.
  Eigen::MatrixXd correlations(const Eigen::VectorXd& probability) const {
    const Eigen::MatrixXd weighted = signs_.array().colwise() * probability.array();
    return signs_.transpose() * weighted;
  }

 private:
  int n_;
  Eigen::MatrixXd signs_;
};

// ---------------------------------------------------------------------------
// Binary dump: "MSKG", u32 version, u32 N, u32 reserved, then N*N little-endian f64 row-major.

inline constexpr std::uint32_t kCouplingDumpVersion = 1;

namespace detail {
inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(const unsigned char* b) {
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
}
}  // namespace detail

inline void write_couplings(std::ostream& out, const CouplingMatrix& g) {
  out.write("MSKG", 4);
  detail::put_u32(out, kCouplingDumpVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(g.n()));
  detail::put_u32(out, 0);
  for (double v : g.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
}

inline CouplingMatrix read_couplings(std::istream& in) {
  unsigned char header[16];
  if (!in.read(reinterpret_cast<char*>(header), 16)) throw IoError("truncated coupling dump header");
  if (std::memcmp(header, "MSKG", 4) != 0) throw IoError("bad coupling dump magic");
  if (detail::get_u32(header + 4) != kCouplingDumpVersion) throw IoError("unsupported coupling dump version");
  const std::uint32_t n = detail::get_u32(header + 8);
  if (n == 0 || n > 4096) throw IoError("implausible coupling dump size");
  std::vector<double> values(static_cast<std::size_t>(n) * n);
  for (double& v : values) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated coupling dump body");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{b[i]} << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return CouplingMatrix(static_cast<int>(n), std::move(values));
}

inline void save_couplings(const std::string& path, const CouplingMatrix& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_couplings(out, g);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline CouplingMatrix load_couplings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_couplings(in);
}

}  // namespace mskvar
