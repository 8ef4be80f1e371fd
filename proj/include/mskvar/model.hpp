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
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mskvar/error.hpp"

namespace mskvar {

/// Partition of spins {0..n-1} into k species. Species and spin indices are 0-based.
class SpeciesLayout {
 public:
  SpeciesLayout() = default;

  /// Species s occupies a contiguous block of sizes[s] spins, in species order.
  static SpeciesLayout contiguous(std::vector<int> sizes) {
    if (sizes.empty()) throw ValidationError("sizes", "at least one species required");
    std::vector<int> species_of;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      if (sizes[s] <= 0) {
        throw ValidationError("sizes[" + std::to_string(s) + "]", "species size must be positive");
      }
      species_of.insert(species_of.end(), static_cast<std::size_t>(sizes[s]), static_cast<int>(s));
    }
    return from_assignment(std::move(species_of), static_cast<int>(sizes.size()));
  }

  static SpeciesLayout from_assignment(std::vector<int> species_of, int k) {
    if (k <= 0) throw ValidationError("k", "species count must be positive");
    if (species_of.empty()) throw ValidationError("species_of", "empty spin set");
    SpeciesLayout out;
    out.k_ = k;
    out.species_of_ = std::move(species_of);
    out.sizes_.assign(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < out.species_of_.size(); ++i) {
      const int s = out.species_of_[i];
      if (s < 0 || s >= k) {
        throw ValidationError("species_of[" + std::to_string(i) + "]", "species index out of range");
      }
      ++out.sizes_[static_cast<std::size_t>(s)];
    }
    for (int s = 0; s < k; ++s) {
      if (out.sizes_[static_cast<std::size_t>(s)] == 0) {
        throw ValidationError("sizes[" + std::to_string(s) + "]", "species has no spins");
      }
    }
    return out;
  }

  /// sizes_s = round(density_s * n) with largest-remainder correction so the sizes sum to n.
  /// Every species keeps at least one spin.
  static SpeciesLayout proportional(std::span<const double> densities, int n) {
    const int k = static_cast<int>(densities.size());
    if (k == 0) throw ValidationError("lambda", "at least one species required");
    if (n < k) throw ValidationError("n", "need at least one spin per species");
    const double total = std::accumulate(densities.begin(), densities.end(), 0.0);
    std::vector<int> sizes(static_cast<std::size_t>(k));
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (int s = 0; s < k; ++s) {
      if (!(densities[static_cast<std::size_t>(s)] > 0)) {
        throw ValidationError("lambda[" + std::to_string(s) + "]", "density must be positive");
      }
      const double exact = densities[static_cast<std::size_t>(s)] / total * n;
      sizes[static_cast<std::size_t>(s)] = static_cast<int>(std::floor(exact));
      assigned += sizes[static_cast<std::size_t>(s)];
      remainders.emplace_back(exact - std::floor(exact), s);
    }
    // Largest remainder first; ties go to the lower species index.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int j = 0; assigned < n; ++j, ++assigned) {
      ++sizes[static_cast<std::size_t>(remainders[static_cast<std::size_t>(j % k)].second)];
    }
    for (int s = 0; s < k; ++s) {
      if (sizes[static_cast<std::size_t>(s)] > 0) continue;
      // Borrow from the largest species.
      auto big = std::max_element(sizes.begin(), sizes.end());
      --*big;
      sizes[static_cast<std::size_t>(s)] = 1;
    }
    return contiguous(std::move(sizes));
  }

  int n() const noexcept { return static_cast<int>(species_of_.size()); }
  int k() const noexcept { return k_; }
  const std::vector<int>& sizes() const noexcept { return sizes_; }
  int size(int s) const { return sizes_.at(static_cast<std::size_t>(s)); }
  int species_of(int i) const { return species_of_.at(static_cast<std::size_t>(i)); }
  const std::vector<int>& assignment() const noexcept { return species_of_; }

  /// Finite-N densities |I_s|/N, i.e. the diagonal of Lambda_N.
  Eigen::VectorXd densities() const {
    Eigen::VectorXd out(k_);
    for (int s = 0; s < k_; ++s) out(s) = static_cast<double>(sizes_[static_cast<std::size_t>(s)]) / n();
    return out;
  }

  /// Bit mask of the spins in species s (spin i is bit i). Requires n <= 64.
  std::uint64_t mask(int s) const {
    if (n() > 64) throw TooLarge("species masks need n <= 64");
    std::uint64_t m = 0;
    for (int i = 0; i < n(); ++i) {
      if (species_of_[static_cast<std::size_t>(i)] == s) m |= std::uint64_t{1} << i;
    }
    return m;
  }

  friend bool operator==(const SpeciesLayout&, const SpeciesLayout&) = default;

 private:
  int k_ = 0;
  std::vector<int> sizes_;
  std::vector<int> species_of_;
};

/// Variance profile Delta^2 together with its PSD certificate and Gram factor.
class VarianceProfile {
 public:
  struct Factor {
    int rank = 0;
    Eigen::MatrixXd a;  // k x rank, a * a^T == delta2
  };

  VarianceProfile() = default;
  VarianceProfile(Eigen::MatrixXd delta2, std::optional<Factor> factor)
      : delta2_(std::move(delta2)), factor_(std::move(factor)) {}

  const Eigen::MatrixXd& delta2() const noexcept { return delta2_; }
  int k() const noexcept { return static_cast<int>(delta2_.rows()); }
  bool psd() const noexcept { return factor_.has_value(); }

  int rank() const {
    require_psd();
    return factor_->rank;
  }
  const Eigen::MatrixXd& factor() const {
    require_psd();
    return factor_->a;
  }

  void require_psd() const {
    if (!factor_) throw NotPSD("variance profile is not positive semi-definite");
  }

 private:
  Eigen::MatrixXd delta2_;
  std::optional<Factor> factor_;
};

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kEigenTolerance = 1e-10;

/// Symmetric eigendecomposition; rejects asymmetric or negative input.
inline VarianceProfile psd_factorize(const Eigen::MatrixXd& delta2) {
  if (delta2.rows() != delta2.cols() || delta2.rows() == 0) {
    throw DimensionMismatch("delta2 must be a non-empty square matrix");
  }
  if (!delta2.allFinite()) throw NonFinite("delta2 has non-finite entries");
  if ((delta2 - delta2.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
    throw AsymmetricInput("delta2 is not symmetric");
  }
  if (delta2.minCoeff() < 0) throw NegativeEntry("delta2 has a negative entry");

  const Eigen::MatrixXd sym = 0.5 * (delta2 + delta2.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double scale = values.cwiseAbs().maxCoeff();
  if (values(0) < -kEigenTolerance * scale) return VarianceProfile(delta2, std::nullopt);

  const int k = static_cast<int>(delta2.rows());
  int rank = 0;
  for (int i = 0; i < k; ++i) {
    if (values(i) > kEigenTolerance * scale) ++rank;
  }
  VarianceProfile::Factor factor;
  factor.rank = rank;
  factor.a.resize(k, rank);
  for (int j = 0; j < rank; ++j) {
    const int col = k - rank + j;
    factor.a.col(j) = eig.eigenvectors().col(col) * std::sqrt(values(col));
  }
  return VarianceProfile(delta2, std::move(factor));
}

/// Static model description: layout, variance profile, and the density matrix Lambda.
class ModelSpec {
 public:
  ModelSpec(SpeciesLayout layout, VarianceProfile profile,
            std::optional<Eigen::VectorXd> lambda_limit = std::nullopt)
      : layout_(std::move(layout)), profile_(std::move(profile)), lambda_limit_(std::move(lambda_limit)) {
    if (profile_.k() != layout_.k()) {
      throw DimensionMismatch("profile has " + std::to_string(profile_.k()) + " species, layout has " +
                              std::to_string(layout_.k()));
    }
    if (lambda_limit_) {
      if (lambda_limit_->size() != layout_.k()) throw DimensionMismatch("lambda has wrong length");
      for (int s = 0; s < layout_.k(); ++s) {
        if (!((*lambda_limit_)(s) > 0)) {
          throw ValidationError("lambda[" + std::to_string(s) + "]", "density must be positive");
        }
      }
      if (std::abs(lambda_limit_->sum() - 1.0) > 1e-12) {
        throw ValidationError("lambda", "densities must sum to 1");
      }
    }
  }

  ModelSpec(std::vector<int> sizes, const Eigen::MatrixXd& delta2,
            std::optional<Eigen::VectorXd> lambda_limit = std::nullopt)
      : ModelSpec(SpeciesLayout::contiguous(std::move(sizes)), psd_factorize(delta2), std::move(lambda_limit)) {}

  const SpeciesLayout& layout() const noexcept { return layout_; }
  const VarianceProfile& profile() const noexcept { return profile_; }
  const Eigen::MatrixXd& delta2() const noexcept { return profile_.delta2(); }
  int n() const noexcept { return layout_.n(); }
  int k() const noexcept { return layout_.k(); }
  bool has_lambda_limit() const noexcept { return lambda_limit_.has_value(); }

  /// Diagonal of Lambda: the override when given, otherwise Lambda_N.
  Eigen::VectorXd lambda() const { return lambda_limit_ ? *lambda_limit_ : layout_.densities(); }

  /// Delta^2_{s(i) s(j)} as an n x n matrix.
  Eigen::MatrixXd spin_variance() const {
    const int n = layout_.n();
    Eigen::MatrixXd out(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out(i, j) = delta2()(layout_.species_of(i), layout_.species_of(j));
    }
    return out;
  }

 private:
  SpeciesLayout layout_;
  VarianceProfile profile_;
  std::optional<Eigen::VectorXd> lambda_limit_;
};

/// rho(2 Lambda Delta^2), via the symmetric conjugate Lambda^{1/2} Delta^2 Lambda^{1/2}.
inline double criticality_radius(const ModelSpec& spec) {
  const Eigen::VectorXd root = spec.lambda().cwiseSqrt();
  const Eigen::MatrixXd conj = root.asDiagonal() * spec.delta2() * root.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (conj + conj.transpose()), Eigen::EigenvaluesOnly);
  return 2.0 * eig.eigenvalues().cwiseAbs().maxCoeff();
}

/// beta_c = rho(2 Lambda Delta^2)^{-1/2}.
inline double beta_critical(const ModelSpec& spec) {
  const double radius = criticality_radius(spec);
  if (!(radius > 0)) throw DegenerateModel("rho(2 Lambda Delta^2) = 0");
  return std::sqrt(1.0 / radius);
}

/// Upper bound on E<R(sigma,rho)>_t valid for beta^2 beta_c^-2 t < 1 (PSD profiles only).
inline double main_lemma_bound(const ModelSpec& spec, double beta, double t) {
  spec.profile().require_psd();
  if (!(t >= 0.0 && t <= 1.0)) throw OutOfDomain("t must lie in [0,1]");
  if (!(beta > 0)) throw OutOfDomain("beta must be positive");
  const double inv_bc2 = criticality_radius(spec);
  if (!(inv_bc2 > 0)) throw DegenerateModel("rho(2 Lambda Delta^2) = 0");
  const double u = beta * beta * inv_bc2 * t;
  if (u >= 1.0) throw OutOfDomain("beta^2 beta_c^-2 t must be < 1");
  const double r = spec.profile().rank();
  return r / spec.n() * inv_bc2 / (1.0 - u) * std::log(2.0 / (1.0 - u));
}

/// (1 - beta_c^-2 x)^{-r/2}, the exponential-moment bound for 0 < x < beta_c^2.
inline double talagrand_rhs(const ModelSpec& spec, double x) {
  spec.profile().require_psd();
  const double inv_bc2 = criticality_radius(spec);
  if (!(inv_bc2 > 0)) throw DegenerateModel("rho(2 Lambda Delta^2) = 0");
  if (!(x > 0) || x * inv_bc2 >= 1.0) throw OutOfDomain("x must satisfy 0 < x < beta_c^2");
  return std::pow(1.0 - inv_bc2 * x, -0.5 * spec.profile().rank());
}

/// sum_{s,t} Delta^2_st alpha_s alpha_t with finite-N densities; max over (sigma,rho) of R.
inline double overlap_upper_bound(const ModelSpec& spec) {
  const Eigen::VectorXd alpha = spec.layout().densities();
  return alpha.dot(spec.delta2() * alpha);
}

/// A profile with asymptotic densities, instantiated at any N by largest-remainder rounding.
struct ModelFamily {
  std::string name;
  Eigen::VectorXd densities;
  Eigen::MatrixXd delta2;

  /// With pin_lambda the spec's Lambda is the family densities; otherwise Lambda_N.
  ModelSpec at(int n, bool pin_lambda = false) const {
    const std::vector<double> d(densities.data(), densities.data() + densities.size());
    auto layout = SpeciesLayout::proportional(d, n);
    std::optional<Eigen::VectorXd> lambda;
    if (pin_lambda) lambda = densities / densities.sum();
    return ModelSpec(std::move(layout), psd_factorize(delta2), std::move(lambda));
  }

  static ModelFamily from_spec(const ModelSpec& spec, std::string name = "model") {
    return ModelFamily{std::move(name), spec.lambda(), spec.delta2()};
  }
};

// ---------------------------------------------------------------------------
// Model file: {"sizes":[...], "delta2":[[...],...], "lambda":[...]}

inline ModelSpec model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("$", "model file must be a JSON object");
  if (!doc.contains("sizes")) throw ValidationError("sizes", "missing field");
  if (!doc.contains("delta2")) throw ValidationError("delta2", "missing field");

  const auto& jsizes = doc.at("sizes");
  if (!jsizes.is_array() || jsizes.empty()) throw ValidationError("sizes", "expected a non-empty array");
  std::vector<int> sizes;
  for (std::size_t s = 0; s < jsizes.size(); ++s) {
    const auto& v = jsizes[s];
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
      throw ValidationError("sizes[" + std::to_string(s) + "]", "must be a positive integer");
    }
    sizes.push_back(v.get<int>());
  }
  const int k = static_cast<int>(sizes.size());

  const auto& jd = doc.at("delta2");
  if (!jd.is_array() || static_cast<int>(jd.size()) != k) {
    throw ValidationError("delta2", "expected a " + std::to_string(k) + "x" + std::to_string(k) + " matrix");
  }
  Eigen::MatrixXd delta2(k, k);
  for (int s = 0; s < k; ++s) {
    const auto& row = jd[static_cast<std::size_t>(s)];
    const std::string rpath = "delta2[" + std::to_string(s) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != k) {
      throw ValidationError(rpath, "expected a row of length " + std::to_string(k));
    }
    for (int u = 0; u < k; ++u) {
      const auto& v = row[static_cast<std::size_t>(u)];
      const std::string path = rpath + "[" + std::to_string(u) + "]";
      if (!v.is_number()) throw ValidationError(path, "must be a number");
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw ValidationError(path, "must be finite");
      if (x < 0) throw ValidationError(path, "NegativeEntry: variances must be non-negative");
      delta2(s, u) = x;
    }
  }
  for (int s = 0; s < k; ++s) {
    for (int u = s + 1; u < k; ++u) {
      if (std::abs(delta2(s, u) - delta2(u, s)) > kSymmetryTolerance) {
        throw ValidationError("delta2[" + std::to_string(s) + "][" + std::to_string(u) + "]",
                              "AsymmetricInput: differs from delta2[" + std::to_string(u) + "][" +
                                  std::to_string(s) + "]");
      }
    }
  }

  std::optional<Eigen::VectorXd> lambda;
  if (doc.contains("lambda") && !doc.at("lambda").is_null()) {
    const auto& jl = doc.at("lambda");
    if (!jl.is_array() || static_cast<int>(jl.size()) != k) {
      throw ValidationError("lambda", "expected an array of length " + std::to_string(k));
    }
    Eigen::VectorXd l(k);
    for (int s = 0; s < k; ++s) {
      const auto& v = jl[static_cast<std::size_t>(s)];
      const std::string path = "lambda[" + std::to_string(s) + "]";
      if (!v.is_number() || !(v.get<double>() > 0)) throw ValidationError(path, "must be a positive number");
      l(s) = v.get<double>();
    }
    if (std::abs(l.sum() - 1.0) > 1e-12) throw ValidationError("lambda", "densities must sum to 1");
    lambda = l;
  }
  return ModelSpec(std::move(sizes), delta2, std::move(lambda));
}

inline nlohmann::json model_to_json(const ModelSpec& spec) {
  nlohmann::json doc;
  doc["sizes"] = spec.layout().sizes();
  nlohmann::json d = nlohmann::json::array();
  for (int s = 0; s < spec.k(); ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (int u = 0; u < spec.k(); ++u) row.push_back(spec.delta2()(s, u));
    d.push_back(row);
  }
  doc["delta2"] = d;
  if (spec.has_lambda_limit()) {
    const Eigen::VectorXd l = spec.lambda();
    doc["lambda"] = std::vector<double>(l.data(), l.data() + l.size());
  }
  return doc;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline ModelSpec load_model_file(const std::string& path) {
  const std::string text = read_text_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("$", std::string("malformed JSON: ") + e.what());
  }
  return model_from_json(doc);
}

}  // namespace mskvar
