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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mskvar/cli.hpp"
#include "support.hpp"

namespace mskvar {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mskvar");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string model(const std::string& name) { return std::string(MSKVAR_MODELS_DIR) + "/" + name + ".json"; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mskvar_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  fs::path dir_;
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST_F(CliTest, CriticalPrintsShortestRoundTrip) {
  const Result r = invoke({"critical", "--model", model("sk")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("beta_c=0.7071067811865476\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("rank=1\n"), std::string::npos);
  EXPECT_NE(r.out.find("C=1\n"), std::string::npos);
}

TEST_F(CliTest, IndefiniteProfileRejectedByLemmaChecks) {
  for (const char* which : {"talagrand", "main"}) {
    const Result r = invoke({"lemma-check", "--which", which, "--model", model("bipartite"), "--replicates", "10"});
    EXPECT_EQ(r.code, 1) << which;
    EXPECT_NE(r.err.find("NotPSD"), std::string::npos) << r.err;
  }
  EXPECT_EQ(invoke({"free-energy", "--model", model("bipartite"), "--beta", "0.5"}).code, 0);
  EXPECT_EQ(invoke({"variance", "--method", "direct", "--model", model("bipartite"), "--replicates", "20"}).code, 0);
}

TEST_F(CliTest, UsageErrorsNameTheFlag) {
  Result r = invoke({"variance", "--model", model("sk"), "--replicates", "-3"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--replicates"), std::string::npos) << r.err;
  r = invoke({"variance", "--model", model("sk"), "--bogus"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos) << r.err;
  r = invoke({"variance", "--model", model("sk"), "--method", "fancy"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--method"), std::string::npos) << r.err;
  r = invoke({"scaling", "--model", model("sk"), "--n-grid", "8,40"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--n-grid"), std::string::npos) << r.err;
  EXPECT_EQ(invoke({}).code, 1);
}

TEST_F(CliTest, ModelFileProblems) {
  EXPECT_EQ(invoke({"critical", "--model", path("missing.json")}).code, 3);
  const std::string bad = write("bad.json", R"({"sizes":[2,2],"delta2":[[1,0.3],[0.2,1]]})");
  const Result r = invoke({"critical", "--model", bad});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("delta2[0][1]"), std::string::npos) << r.err;
  EXPECT_EQ(invoke({"critical", "--model", write("broken.json", "{not json")}).code, 1);
}

TEST_F(CliTest, VarianceIsByteIdenticalAcrossRunsAndThreads) {
  const std::vector<std::string> args{"variance", "--method", "both", "--model", model("two_species_rank1"),
                                      "--replicates", "60", "--beta", "0.4", "--seed", "99"};
  ::setenv("MSKVAR_THREADS", "1", 1);
  const Result a = invoke(args);
  const Result b = invoke(args);
  ::setenv("MSKVAR_THREADS", "8", 1);
  const Result c = invoke(args);
  ::unsetenv("MSKVAR_THREADS");
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  EXPECT_EQ(a.out.rfind("method,N,beta,var,stderr,replicates,seed\n", 0), 0u);
  EXPECT_NE(a.err.find("master_seed=99"), std::string::npos);
}

TEST_F(CliTest, OutputIsNotOverwrittenWithoutForce) {
  const std::string out = path("fe.txt");
  const std::vector<std::string> base{"free-energy", "--model", model("sk"), "--out", out};
  EXPECT_EQ(invoke(base).code, 0);
  const std::string first = slurp(out);
  EXPECT_NE(first.find("F="), std::string::npos);
  EXPECT_EQ(invoke(base).code, 3);
  auto forced = base;
  forced.push_back("--force");
  EXPECT_EQ(invoke(forced).code, 0);
  EXPECT_EQ(slurp(out), first);
}

TEST_F(CliTest, CouplingDumpReproducesFreeEnergy) {
  const std::string dump = path("g.bin");
  const Result a = invoke({"free-energy", "--model", model("three_species"), "--seed", "5", "--replicate", "3",
                           "--beta", "0.9", "--dump-couplings", dump});
  ASSERT_EQ(a.code, 0) << a.err;
  const Result b = invoke({"free-energy", "--model", model("three_species"), "--beta", "0.9", "--couplings", dump});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(invoke({"free-energy", "--model", model("sk"), "--couplings", dump}).code, 1);
}

TEST_F(CliTest, ManifestRoundTrip) {
  const std::string manifest = path("run.json");
  const Result a = invoke({"lemma-check", "--which", "main", "--model", model("sk"), "--replicates", "40",
                           "--seed", "8", "--manifest", manifest, "--t-values", "0,0.5"});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto doc = nlohmann::json::parse(slurp(manifest));
  EXPECT_EQ(doc.at("seed").get<std::uint64_t>(), 8u);
  EXPECT_TRUE(doc.contains("wall_time_s"));
  EXPECT_EQ(doc.at("input_hash").get<std::string>().rfind("fnv1a64:", 0), 0u);
  const cli::RunConfig cfg = cli::RunConfig::from_manifest(doc);
  EXPECT_EQ(cfg.subcommand, "lemma-check");
  EXPECT_EQ(cfg.t_values, (std::vector<double>{0.0, 0.5}));
  EXPECT_EQ(cli::RunConfig::from_json(cfg.to_json()), cfg);

  cli::RunConfig replay = cfg;
  replay.manifest_path.clear();
  std::ostringstream out;
  std::ostringstream err;
  EXPECT_EQ(cli::Runner(replay, out, err).execute(), 0);
  EXPECT_EQ(out.str(), a.out);
}

TEST_F(CliTest, ScalingHeader) {
  const Result r = invoke({"scaling", "--model", model("sk"), "--n-grid", "4,6", "--replicates", "30"});
  EXPECT_TRUE(r.code == 0 || r.code == 2) << r.err;
  EXPECT_EQ(r.out.rfind("N,beta,var,stderr,var_over_log2N,var_over_bound\n", 0), 0u);
  EXPECT_NE(r.err.find("bounded_ratio"), std::string::npos);
}

TEST_F(CliTest, TalagrandOnPsdModel) {
  const Result r = invoke({"lemma-check", "--which", "talagrand", "--model", model("sk"), "--replicates", "200"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("x,mc,stderr,oracle,rhs,mc_pass,bound_pass\n", 0), 0u);
}

TEST_F(CliTest, OracleSuitePasses) {
  const Result r = invoke({"oracle-suite"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("[FAIL]"), std::string::npos) << r.out;
}

}  // namespace
}  // namespace mskvar
