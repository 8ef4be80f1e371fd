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

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mskvar/mskvar.hpp"

namespace mskvar::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kValidationFailure = 1,
  kCheckFailed = 2,
  kIoFailure = 3,
};

/// Everything needed to reproduce one invocation. Serialized into the run manifest.
struct RunConfig {
  std::string subcommand;
  std::string model_path;
  std::uint64_t seed = kDefaultSeed;
  int replicates = 1000;
  int quadrature_nodes = 16;
  int bootstrap = 1000;
  std::optional<double> beta;
  std::string method = "both";
  std::string which = "main";
  std::vector<double> t_values;
  std::vector<double> x_values;
  std::string mode = "critical";
  double alpha = 1.0;
  double d = 1.0;
  std::vector<int> n_grid{8, 12, 16, 20};
  std::uint64_t replicate = 0;
  std::string couplings_in;
  std::string couplings_out;
  std::string out_path;
  std::string manifest_path;
  bool force = false;
  std::string log_level = "info";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["model"] = model_path;
    j["seed"] = seed;
    j["replicates"] = replicates;
    j["quadrature_nodes"] = quadrature_nodes;
    j["bootstrap"] = bootstrap;
    j["beta"] = beta ? nlohmann::json(*beta) : nlohmann::json(nullptr);
    j["method"] = method;
    j["which"] = which;
    j["t_values"] = t_values;
    j["x_values"] = x_values;
    j["mode"] = mode;
    j["alpha"] = alpha;
    j["d"] = d;
    j["n_grid"] = n_grid;
    j["replicate"] = replicate;
    j["couplings_in"] = couplings_in;
    j["couplings_out"] = couplings_out;
    j["out"] = out_path;
    j["manifest"] = manifest_path;
    j["force"] = force;
    j["log_level"] = log_level;
    return j;
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.subcommand = j.at("subcommand").get<std::string>();
    c.model_path = j.at("model").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.replicates = j.at("replicates").get<int>();
    c.quadrature_nodes = j.at("quadrature_nodes").get<int>();
    c.bootstrap = j.at("bootstrap").get<int>();
    if (!j.at("beta").is_null()) c.beta = j.at("beta").get<double>();
    c.method = j.at("method").get<std::string>();
    c.which = j.at("which").get<std::string>();
    c.t_values = j.at("t_values").get<std::vector<double>>();
    c.x_values = j.at("x_values").get<std::vector<double>>();
    c.mode = j.at("mode").get<std::string>();
    c.alpha = j.at("alpha").get<double>();
    c.d = j.at("d").get<double>();
    c.n_grid = j.at("n_grid").get<std::vector<int>>();
    c.replicate = j.at("replicate").get<std::uint64_t>();
    c.couplings_in = j.at("couplings_in").get<std::string>();
    c.couplings_out = j.at("couplings_out").get<std::string>();
    c.out_path = j.at("out").get<std::string>();
    c.manifest_path = j.at("manifest").get<std::string>();
    c.force = j.at("force").get<bool>();
    c.log_level = j.at("log_level").get<std::string>();
    return c;
  }

  /// Reload the configuration echoed in a run manifest.
  static RunConfig from_manifest(const nlohmann::json& manifest) { return from_json(manifest.at("config")); }

  McConfig mc() const {
    McConfig mc;
    mc.replicates = replicates;
    mc.master_seed = seed;
    mc.quadrature_nodes = quadrature_nodes;
    mc.bootstrap_resamples = bootstrap;
    return mc;
  }
};

/// CSV numbers: 17 significant digits.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Shortest round-trip representation, for human-readable key=value lines.
inline std::string fmt_short(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

/// Collects the output of a subcommand and writes it to --out (or the stream) at the end.
class Sink {
 public:
  Sink(const std::string& path, bool force, std::ostream& fallback) : path_(path), fallback_(fallback) {
    if (!path_.empty() && !force && std::filesystem::exists(path_)) {
      throw IoError("'" + path_ + "' exists; pass --force to overwrite");
    }
  }
  std::ostream& stream() { return buffer_; }
  void commit() {
    if (path_.empty()) {
      fallback_ << buffer_.str();
      return;
    }
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path_ + "'");
    out << buffer_.str();
    if (!out) throw IoError("write failed for '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ostream& fallback_;
  std::ostringstream buffer_;
};

inline void refuse_overwrite(const std::string& path, bool force) {
  if (!path.empty() && !force && std::filesystem::exists(path)) {
    throw IoError("'" + path + "' exists; pass --force to overwrite");
  }
}

inline const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace detail

class Runner {
 public:
  Runner(RunConfig cfg, std::ostream& out, std::ostream& err) : cfg_(std::move(cfg)), out_(out), err_(err) {}

  int execute() {
    const auto start = std::chrono::steady_clock::now();
    detail::refuse_overwrite(cfg_.manifest_path, cfg_.force);
    int code = kOk;
    const std::string& sub = cfg_.subcommand;
    if (sub == "critical") {
      code = critical();
    } else if (sub == "free-energy") {
      code = free_energy();
    } else if (sub == "variance") {
      code = variance();
    } else if (sub == "lemma-check") {
      code = lemma_check();
    } else if (sub == "scaling") {
      code = scaling();
    } else if (sub == "oracle-suite") {
      code = oracle_suite();
    } else {
      throw ValidationError("subcommand", "unknown subcommand '" + sub + "'");
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!cfg_.manifest_path.empty()) write_manifest(wall, code);
    return code;
  }

 private:
  bool randomized() const { return cfg_.subcommand != "critical"; }

  void info(const std::string& line) {
    if (cfg_.log_level != "quiet") err_ << line << '\n';
  }

  void announce_seed() { err_ << "master_seed=" << cfg_.seed << '\n'; }

  ModelSpec model() {
    if (cfg_.model_path.empty()) throw ValidationError("--model", "a model file is required");
    if (model_ == nullptr) {
      model_text_ = read_text_file(cfg_.model_path);
      model_ = std::make_unique<ModelSpec>(load_model_file(cfg_.model_path));
    }
    return *model_;
  }

  double beta_or_critical(const ModelSpec& spec) {
    if (cfg_.beta) {
      if (!(*cfg_.beta >= 0)) throw ValidationError("--beta", "must be non-negative");
      return *cfg_.beta;
    }
    return beta_critical(spec);
  }

  int critical() {
    const ModelSpec spec = model();
    detail::Sink sink(cfg_.out_path, cfg_.force, out_);
    auto& os = sink.stream();
    os << "beta_c=" << fmt_short(beta_critical(spec)) << '\n';
    os << "psd=" << detail::flag(spec.profile().psd()) << '\n';
    if (spec.profile().psd()) os << "rank=" << spec.profile().rank() << '\n';
    os << "C=" << fmt_short(overlap_upper_bound(spec)) << '\n';
    sink.commit();
    return kOk;
  }

  int free_energy() {
    const ModelSpec spec = model();
    const double beta = beta_or_critical(spec);
    CouplingMatrix g;
    if (!cfg_.couplings_in.empty()) {
      g = load_couplings(cfg_.couplings_in);
      if (g.n() != spec.n()) throw ValidationError("--couplings", "dump size does not match the model");
    } else {
      announce_seed();
      g = sample_disorder(spec, StreamKey{cfg_.seed, cfg_.replicate, StreamRole::Coupling});
    }
    if (!cfg_.couplings_out.empty()) {
      detail::refuse_overwrite(cfg_.couplings_out, cfg_.force);
      save_couplings(cfg_.couplings_out, g);
    }
    detail::Sink sink(cfg_.out_path, cfg_.force, out_);
    sink.stream() << "N=" << spec.n() << '\n'
                  << "beta=" << fmt_short(beta) << '\n'
                  << "F=" << fmt17(free_energy_exact(g, beta)) << '\n';
    sink.commit();
    return kOk;
  }

  int variance() {
    const ModelSpec spec = model();
    const double beta = beta_or_critical(spec);
    if (cfg_.method != "direct" && cfg_.method != "identity" && cfg_.method != "both") {
      throw ValidationError("--method", "expected direct, identity or both");
    }
    announce_seed();
    const McConfig mc = cfg_.mc();
    detail::Sink sink(cfg_.out_path, cfg_.force, out_);
    auto& os = sink.stream();
    os << "method,N,beta,var,stderr,replicates,seed\n";
    std::optional<Estimate> direct;
    std::optional<Estimate> identity;
    auto emit = [&](const char* name, const Estimate& e) {
      os << name << ',' << spec.n() << ',' << fmt17(beta) << ',' << fmt17(e.value) << ',' << fmt17(e.std_error) << ','
         << e.n << ',' << e.seed << '\n';
    };
    if (cfg_.method != "identity") {
      direct = variance_direct(spec, beta, mc);
      emit("direct", *direct);
    }
    if (cfg_.method != "direct") {
      identity = variance_via_identity(spec, beta, mc);
      emit("identity", *identity);
    }
    sink.commit();
    if (direct && identity) {
      const double diff = std::abs(direct->value - identity->value);
      const double se = std::hypot(direct->std_error, identity->std_error);
      const bool pass = diff <= 5.0 * se;
      info("consistency diff=" + fmt17(diff) + " combined_se=" + fmt17(se) + " pass=" + detail::flag(pass));
      if (!pass) return kCheckFailed;
    }
    return kOk;
  }

  int lemma_check() {
    const ModelSpec spec = model();
    if (cfg_.which != "main" && cfg_.which != "talagrand") {
      throw ValidationError("--which", "expected main or talagrand");
    }
    spec.profile().require_psd();
    announce_seed();
    const McConfig mc = cfg_.mc();
    detail::Sink sink(cfg_.out_path, cfg_.force, out_);
    auto& os = sink.stream();
    bool all_pass = true;
    if (cfg_.which == "main") {
      const double beta = beta_or_critical(spec);
      std::vector<double> ts = cfg_.t_values;
      if (ts.empty()) {
        const double bc = beta_critical(spec);
        ts = {0.0, 0.25, 0.5, 0.8 * bc * bc / (beta * beta)};
      }
      os << "t,estimate,stderr,bound,margin,pass\n";
      for (const auto& r : main_lemma_check(spec, beta, ts, mc)) {
        os << fmt17(r.t) << ',' << fmt17(r.estimate.value) << ',' << fmt17(r.estimate.std_error) << ','
           << fmt17(r.bound) << ',' << fmt17(r.margin) << ',' << detail::flag(r.pass) << '\n';
        all_pass = all_pass && r.pass;
      }
    } else {
      std::vector<double> xs = cfg_.x_values;
      if (xs.empty()) xs = oracles::open_x_grid(spec, 20);
      os << "x,mc,stderr,oracle,rhs,mc_pass,bound_pass\n";
      for (const auto& r : talagrand_check(spec, xs, mc, cfg_.beta)) {
        os << fmt17(r.x) << ',' << fmt17(r.monte_carlo.value) << ',' << fmt17(r.monte_carlo.std_error) << ','
           << fmt17(r.oracle) << ',' << fmt17(r.rhs) << ',' << detail::flag(r.mc_pass) << ','
           << detail::flag(r.bound_pass) << '\n';
        all_pass = all_pass && r.mc_pass && r.bound_pass;
      }
    }
    sink.commit();
    return all_pass ? kOk : kCheckFailed;
  }

  int scaling() {
    const ModelSpec spec = model();
    ScalingMode mode;
    if (cfg_.mode == "critical") {
      mode = ScalingMode::critical();
    } else if (cfg_.mode == "approach") {
      if (!(cfg_.alpha > 0)) throw ValidationError("--alpha", "must be positive");
      if (!(cfg_.d > 0)) throw ValidationError("--d", "must be positive");
      mode = ScalingMode::approach(cfg_.alpha, cfg_.d);
    } else {
      throw ValidationError("--mode", "expected critical or approach");
    }
    if (cfg_.n_grid.empty()) throw ValidationError("--n-grid", "needs at least one size");
    for (int n : cfg_.n_grid) {
      if (n < spec.k() || n > kDefaultMaxSpins) {
        throw ValidationError("--n-grid", "sizes must lie in [k, " + std::to_string(kDefaultMaxSpins) + "]");
      }
    }
    announce_seed();
    const auto rows = scaling_experiment(ModelFamily::from_spec(spec), mode, cfg_.n_grid, cfg_.mc());
    detail::Sink sink(cfg_.out_path, cfg_.force, out_);
    auto& os = sink.stream();
    os << "N,beta,var,stderr,var_over_log2N,var_over_bound\n";
    for (const auto& r : rows) {
      os << r.n << ',' << fmt17(r.beta) << ',' << fmt17(r.var) << ',' << fmt17(r.std_error) << ','
         << fmt17(r.var_over_log2n) << ',' << fmt17(r.var_over_bound) << '\n';
    }
    sink.commit();
    const double growth = worst_ratio_growth(rows);
    const bool pass = growth <= 2.0;
    info("bounded_ratio worst_growth=" + fmt17(growth) + " pass=" + detail::flag(pass));
    return pass ? kOk : kCheckFailed;
  }

  int oracle_suite();

  void write_manifest(double wall_seconds, int code) {
    nlohmann::json m;
    m["tool"] = "mskvar";
    m["version"] = kVersion;
    m["config"] = cfg_.to_json();
    m["seed"] = cfg_.seed;
    m["randomized"] = randomized();
    m["threads"] = default_worker_count();
    m["wall_time_s"] = wall_seconds;
    m["exit_code"] = code;
    std::uint64_t h = fnv1a64(model_text_);
    h = fnv1a64(cfg_.to_json().dump(), h);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    m["input_hash"] = std::string("fnv1a64:") + hex;
    std::ofstream out(cfg_.manifest_path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + cfg_.manifest_path + "'");
    out << m.dump(2) << '\n';
  }

  RunConfig cfg_;
  std::ostream& out_;
  std::ostream& err_;
  std::unique_ptr<ModelSpec> model_;
  std::string model_text_;
};

/// Oracle equivalence battery; one line per check.
inline int Runner::oracle_suite() {
  announce_seed();
  detail::Sink sink(cfg_.out_path, cfg_.force, out_);
  auto& os = sink.stream();
  int failures = 0;
  auto report = [&](const std::string& name, bool pass, const std::string& detail) {
    os << (pass ? "[PASS] " : "[FAIL] ") << name << ' ' << detail << '\n';
    if (!pass) ++failures;
  };
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };

  const auto battery = oracles::psd_battery();
  std::uint64_t counter = 0;

  for (int n : {4, 8, 12}) {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const ModelSpec spec = battery[static_cast<std::size_t>(rep) % battery.size()].at(n);
      const CouplingMatrix g = sample_disorder(spec, StreamKey{cfg_.seed, counter++, StreamRole::Auxiliary});
      const double beta = 0.3 + 0.05 * rep;
      worst = std::max(worst, rel(free_energy_exact(g, beta), oracles::free_energy_naive(g, beta)));
    }
    report("gray_vs_naive_free_energy N=" + std::to_string(n), worst <= 1e-9, "max_rel=" + fmt17(worst));
  }

  for (int n = 1; n <= 6; ++n) {
    double worst = 0.0;
    double worst_overlap = 0.0;
    for (std::size_t b = 0; b < battery.size(); ++b) {
      if (battery[b].densities.size() > n) continue;
      const ModelSpec spec = battery[b].at(n);
      const DisorderTriple triple = sample_triple(spec, cfg_.seed + 7, counter++);
      const InterpolationPoint p{0.37, 0.6, 0.8};
      const PairKernel kernel(spec, triple);
      const PairSweep sw = kernel.sweep(p);
      const oracles::NaivePairMeasure naive(spec, triple, p);
      worst = std::max(worst, rel(sw.log_partition / n, naive.tilted_free_energy()));
      worst_overlap = std::max(worst_overlap, rel(kernel.overlap(sw), naive.overlap()));
    }
    report("tilted_vs_naive N=" + std::to_string(n), worst <= 1e-9 && worst_overlap <= 1e-9,
           "max_rel=" + fmt17(std::max(worst, worst_overlap)));
  }

  {
    double worst = 0.0;
    for (int n = 2; n <= 4; ++n) {
      for (std::size_t b = 0; b < battery.size(); b += 2) {
        if (battery[b].densities.size() > n) continue;
        const ModelSpec spec = battery[b].at(n);
        const DisorderTriple triple = sample_triple(spec, cfg_.seed + 11, counter++);
        const InterpolationPoint p{0.5, 0.4, 0.9};
        const PairKernel kernel(spec, triple);
        worst = std::max(worst, rel(kernel.cross_overlap(kernel.sweep(p)),
                                    oracles::NaivePairMeasure(spec, triple, p).cross_overlap()));
      }
    }
    report("cross_overlap_vs_double_pair", worst <= 1e-9, "max_rel=" + fmt17(worst));
  }

  {
    double worst = 0.0;
    for (const auto& family : battery) {
      const ModelSpec spec = family.at(8);
      const PairKernel kernel(spec, sample_triple(spec, cfg_.seed + 13, counter++));
      for (double t : {0.0, 0.3, 0.9, 1.0}) {
        const double generic = kernel.overlap(kernel.sweep({t, 0.0, 0.7}));
        worst = std::max(worst, rel(kernel.product_measure_overlap(t, 0.7), generic));
      }
    }
    report("product_route_vs_pair_sweep", worst <= 1e-9, "max_rel=" + fmt17(worst));
  }

  {
    int violations = 0;
    int checked = 0;
    for (const auto& family : battery) {
      for (int n : {8, 12, 20}) {
        const ModelSpec spec = family.at(n);
        const oracles::RademacherProfile rademacher(spec);
        for (double x : oracles::open_x_grid(spec, 20)) {
          ++checked;
          if (rademacher.exp_moment(x) > talagrand_rhs(spec, x) * (1.0 + 1e-12)) ++violations;
        }
      }
    }
    report("rademacher_le_rhs", violations == 0,
           "violations=" + std::to_string(violations) + "/" + std::to_string(checked));
  }

  {
    std::vector<double> grid;
    for (int i = -200; i <= 200; ++i) grid.push_back(0.05 * i);
    const auto r = oracles::logcosh_bound_check(grid);
    report("logcosh_chain", r.pointwise_violations == 0 && r.chain_violations == 0,
           "pointwise=" + std::to_string(r.pointwise_violations) + " chain=" + std::to_string(r.chain_violations));
  }

  {
    double worst_radius = 0.0;
    int det_violations = 0;
    for (const auto& family : battery) {
      const ModelSpec spec = family.at(12);
      worst_radius = std::max(worst_radius, rel(oracles::factor_radius(spec), criticality_radius(spec)));
      for (double x : oracles::open_x_grid(spec, 20)) {
        const auto [det, lower] = oracles::determinant_bound(spec, x);
        if (det < lower * (1.0 - 1e-12)) ++det_violations;
      }
    }
    report("spectral_identity", worst_radius <= 1e-10, "max_rel=" + fmt17(worst_radius));
    report("determinant_lower_bound", det_violations == 0, "violations=" + std::to_string(det_violations));
  }

  sink.commit();
  return failures == 0 ? kOk : kCheckFailed;
}

namespace detail {

inline void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--out", cfg.out_path, "write output here instead of stdout");
  sub->add_option("--manifest", cfg.manifest_path, "write a JSON run manifest");
  sub->add_flag("--force", cfg.force, "overwrite existing output files");
  sub->add_option("--log-level", cfg.log_level, "quiet or info")->check(CLI::IsMember({"quiet", "info"}));
}

inline void add_model(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--model", cfg.model_path, "model JSON file")->required();
}

inline void add_mc(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--seed", cfg.seed, "master seed");
  sub->add_option("--replicates", cfg.replicates, "disorder replicates")->check(CLI::PositiveNumber);
  sub->add_option("--nodes", cfg.quadrature_nodes, "Gauss-Legendre nodes")->check(CLI::Range(2, 256));
  sub->add_option("--bootstrap", cfg.bootstrap, "bootstrap resamples")->check(CLI::Range(2, 1000000));
}

}  // namespace detail

/// Parses argv into a RunConfig. Throws CLI::ParseError on usage errors.
inline RunConfig parse_arguments(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"mskvar: multi-species SK free-energy fluctuation laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto* critical = app.add_subcommand("critical", "print beta_c, rank and the overlap bound C");
  detail::add_model(critical, cfg);
  detail::add_common(critical, cfg);

  auto* fe = app.add_subcommand("free-energy", "exact F_N(beta) for one disorder sample");
  detail::add_model(fe, cfg);
  detail::add_common(fe, cfg);
  fe->add_option("--beta", cfg.beta, "inverse temperature (default beta_c)");
  fe->add_option("--seed", cfg.seed, "master seed");
  fe->add_option("--replicate", cfg.replicate, "replicate index of the sample");
  fe->add_option("--couplings", cfg.couplings_in, "read couplings from a binary dump");
  fe->add_option("--dump-couplings", cfg.couplings_out, "write the couplings as a binary dump");

  auto* var = app.add_subcommand("variance", "estimate Var F_N(beta)");
  detail::add_model(var, cfg);
  detail::add_common(var, cfg);
  detail::add_mc(var, cfg);
  var->add_option("--beta", cfg.beta, "inverse temperature (default beta_c)");
  var->add_option("--method", cfg.method, "direct, identity or both")
      ->check(CLI::IsMember({"direct", "identity", "both"}));

  auto* lemma = app.add_subcommand("lemma-check", "compare Monte Carlo against the lemma bounds");
  detail::add_model(lemma, cfg);
  detail::add_common(lemma, cfg);
  detail::add_mc(lemma, cfg);
  lemma->add_option("--which", cfg.which, "main or talagrand")->check(CLI::IsMember({"main", "talagrand"}));
  lemma->add_option("--beta", cfg.beta, "inverse temperature (default beta_c)");
  lemma->add_option("--t-values", cfg.t_values, "interpolation times for --which main")->delimiter(',');
  lemma->add_option("--x-values", cfg.x_values, "tilts for --which talagrand")->delimiter(',');

  auto* scaling = app.add_subcommand("scaling", "Var F_N across a grid of N");
  detail::add_model(scaling, cfg);
  detail::add_common(scaling, cfg);
  detail::add_mc(scaling, cfg);
  scaling->add_option("--mode", cfg.mode, "critical or approach")->check(CLI::IsMember({"critical", "approach"}));
  scaling->add_option("--alpha", cfg.alpha, "approach exponent");
  scaling->add_option("--d", cfg.d, "approach amplitude");
  scaling->add_option("--n-grid", cfg.n_grid, "comma-separated sizes")->delimiter(',');

  auto* suite = app.add_subcommand("oracle-suite", "run the kernel-vs-oracle equivalence battery");
  detail::add_common(suite, cfg);
  suite->add_option("--seed", cfg.seed, "master seed");

  app.parse(argc, argv);
  for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();
  return cfg;
}

/// Entry point. Exit codes: 0 ok, 1 validation, 2 failed check, 3 I/O.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  try {
    cfg = parse_arguments(argc, argv);
  } catch (const CLI::CallForHelp&) {
    CLI::App help{"mskvar"};
    err << "usage: mskvar {critical|free-energy|variance|lemma-check|scaling|oracle-suite} [options]\n";
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
  try {
    return Runner(std::move(cfg), out, err).execute();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
}

}  // namespace mskvar::cli
