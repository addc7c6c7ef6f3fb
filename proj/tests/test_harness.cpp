// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstdlib>
#include <sstream>

#include "beable/experiments.hpp"
#include "beable/stats.hpp"

using namespace beable;
using namespace beable::harness;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("beable-test-" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("distribution comparison: exact, binomial deviation, disjoint") {
  SUBCASE("exact match") {
    Eigen::VectorXd ref(2);
    ref << 0.5, 0.5;
    DistComparison cmp = compare_distributions({500, 500}, ProbabilityVector(ref));
    CHECK(cmp.tv == 0.0);
    CHECK(cmp.z.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("counts (50300, 49700) of 1e5 against a fair coin") {
    Eigen::VectorXd ref(2);
    ref << 0.5, 0.5;
    DistComparison cmp = compare_distributions({50300, 49700}, ProbabilityVector(ref));
    CHECK(cmp.tv == doctest::Approx(0.003).epsilon(1e-12));
    CHECK(std::abs(cmp.z(0)) == doctest::Approx(1.897).epsilon(1e-2));
  }
  SUBCASE("disjoint supports give tv 1 and zero p-value") {
    Eigen::VectorXd ref(2);
    ref << 1.0, 0.0;
    DistComparison cmp = compare_distributions({0, 1000}, ProbabilityVector(ref));
    CHECK(cmp.tv == doctest::Approx(1.0));
    CHECK(cmp.p_value == 0.0);  // mass on a pooled zero-weight cell
  }
}

TEST_CASE("chi-square tail values") {
  CHECK(chi_square_pvalue(3.841, 1) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(chi_square_pvalue(0.0, 3) == doctest::Approx(1.0));
}

TEST_CASE("ensemble stats validate count totals") {
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts(1, 2);
  counts << 40, 59;
  CHECK_THROWS_AS(EnsembleStats::from_counts({0.5}, counts, 100), invalid_input);
}

TEST_CASE("config files parse, resolve presets, and round trip") {
  json j = {
      {"kind", "bell"},
      {"system",
       {{"dimension", 2},
        {"hamiltonian", {{"preset", "rabi"}}},
        {"initial_state", {{"preset", "basis"}, {"index", 0}}}}},
      {"run",
       {{"t_end", 1.0}, {"record_times", {0.5, 1.0}}, {"n_runs", 200}, {"seed", 7}}},
  };
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  CHECK(cfg.kind == "bell");
  CHECK(cfg.system.resolve_hamiltonian().matrix()(0, 1) == complex(1, 0));
  CHECK(cfg.system.resolve_initial_state().amplitudes()(0) == complex(1, 0));
  CHECK(cfg.seed == 7);

  // The resolved form parses back to the same experiment.
  ExperimentConfig again = ExperimentConfig::from_json(cfg.resolved());
  CHECK(again.kind == cfg.kind);
  CHECK(again.n_runs == cfg.n_runs);
  CHECK((*again.system.hamiltonian - *cfg.system.hamiltonian).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(ExperimentConfig::from_json({{"kind", "nope"}}), invalid_input);
  json bad_pair = j;
  bad_pair["run"]["q_pair"] = {0};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_pair), invalid_input);

  // Wrong JSON types surface as configuration errors, not raw json exceptions.
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"kind", 5}}), invalid_input);
  json float_runs = j;
  float_runs["run"]["n_runs"] = 2e3;  // integer-valued floats are accepted
  CHECK(ExperimentConfig::from_json(float_runs).n_runs == 2000);
  float_runs["run"]["n_runs"] = 10.5;
  CHECK_THROWS_AS(ExperimentConfig::from_json(float_runs), invalid_input);
}

TEST_CASE("derived system pieces: unitary from hamiltonian and back") {
  json j = {{"kind", "two-state"},
            {"system",
             {{"dimension", 2},
              {"hamiltonian", {{"preset", "rabi"}}},
              {"tau", 0.4},
              {"initial_state", {{"preset", "basis"}, {"index", 0}}}}}};
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  UnitaryOperator u = cfg.system.resolve_unitary();
  CHECK(std::abs(u.matrix()(0, 0) - complex(std::cos(0.4), 0)) < 1e-12);

  json j2 = {{"kind", "bell"},
             {"system",
              {{"dimension", 3},
               {"unitary", {{"preset", "haar"}, {"seed", 5}}},
               {"tau", 0.3}}}};
  ExperimentConfig cfg2 = ExperimentConfig::from_json(j2);
  HermitianOperator h = cfg2.system.resolve_hamiltonian();
  CHECK((evolution_operator(h, 0.3).matrix() - cfg2.system.resolve_unitary().matrix())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("bell experiment writes table and summary, deterministically") {
  auto dir = temp_dir("bell");
  json j = {
      {"kind", "bell"},
      {"system",
       {{"dimension", 2},
        {"hamiltonian", {{"preset", "rabi"}}},
        {"initial_state", {{"preset", "basis"}, {"index", 0}}}}},
      {"run", {{"t_end", 0.8}, {"record_times", {0.4, 0.8}}, {"n_runs", 2000}, {"seed", 3}}},
      {"check", {{"tv_max", 0.05}}},
      {"out", dir.string()},
  };
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  ExperimentOutcome outcome = run_experiment(cfg);
  CHECK(outcome.check_pass);
  CHECK(std::filesystem::exists(outcome.table_path));
  CHECK(std::filesystem::exists(outcome.summary_path));

  std::string table_one = read_file(outcome.table_path);
  CHECK(table_one.rfind("time,config,count,empirical,born,z", 0) == 0);

  // Same config and seed: bit-identical outputs.
  ExperimentOutcome repeat = run_experiment(cfg);
  CHECK(read_file(repeat.table_path) == table_one);

  // The summary embeds the resolved config and seed for replay.
  json summary = json::parse(read_file(outcome.summary_path));
  CHECK(summary["seed"] == 3);
  CHECK(summary["config"]["kind"] == "bell");
  ExperimentConfig replay = ExperimentConfig::from_json(summary["config"]);
  CHECK(replay.n_runs == 2000);
}

TEST_CASE("violation-scan experiment produces tallies and respects check ranges") {
  auto dir = temp_dir("scan");
  json j = {{"kind", "violation-scan"},
            {"system", {{"dimension", 3}}},
            {"run", {{"n_samples", 400}, {"seed", 12}, {"q_pair", {1, 0}}}},
            {"candidate", "guess1:real:2"},
            {"out", dir.string()}};
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  ExperimentOutcome outcome = run_experiment(cfg);
  CHECK(outcome.summary["results"]["cond4_failures"] == 0);
  int count = outcome.summary["results"]["violation_count"];
  CHECK(count > 0);
  CHECK(outcome.check_pass);

  // The imaginary-part candidate fails the balance condition on most draws.
  json j2 = j;
  j2["candidate"] = "guess2:imag";
  ExperimentOutcome other = run_experiment(ExperimentConfig::from_json(j2));
  CHECK(other.summary["results"]["cond4_failures"].get<int>() > 300);
}

TEST_CASE("convergence experiment reports first-order error decay") {
  auto dir = temp_dir("conv");
  json j = {{"kind", "convergence"},
            {"system",
             {{"dimension", 2},
              {"hamiltonian", {{"preset", "rabi"}}},
              {"initial_state", {{"preset", "basis"}, {"index", 0}}}}},
            {"run", {{"taus", {0.2, 0.1, 0.05}}, {"t_start", 0.3}, {"q_pair", {1, 0}}}},
            {"out", dir.string()}};
  ExperimentOutcome outcome = run_experiment(ExperimentConfig::from_json(j));
  CHECK(outcome.check_pass);
  CHECK(outcome.summary["results"]["per_tau"].size() == 3);
  std::string table = read_file(outcome.table_path);
  CHECK(table.rfind("tau,process,", 0) == 0);
}

TEST_CASE("restricted experiment: per-step marginals track the Born weights") {
  auto dir = temp_dir("restricted");
  json j = {{"kind", "restricted"},
            {"system",
             {{"dimension", 2},
              {"hamiltonian", {{"preset", "rabi"}}},
              {"tau", 0.3},
              {"initial_state", {{"preset", "basis"}, {"index", 0}}}}},
            {"run", {{"steps", 3}, {"n_runs", 2000}, {"seed", 8}}},
            {"check", {{"tv_max", 0.05}}},
            {"out", dir.string()}};
  ExperimentOutcome outcome = run_experiment(ExperimentConfig::from_json(j));
  CHECK(outcome.check_pass);
  CHECK(outcome.summary["results"]["per_time"].size() == 3);
}

TEST_CASE("two-state experiment: deterministic equivariance plus sampling") {
  auto dir = temp_dir("twostate");
  json j = {{"kind", "two-state"},
            {"system",
             {{"dimension", 2},
              {"unitary", {{"preset", "haar"}, {"seed", 77}}},
              {"initial_state", {{"preset", "random"}, {"seed", 78}}}}},
            {"run", {{"steps", 6}, {"n_runs", 3000}, {"seed", 9}}},
            {"check", {{"tv_max", 0.05}}},
            {"out", dir.string()}};
  ExperimentOutcome outcome = run_experiment(ExperimentConfig::from_json(j));
  CHECK(outcome.check_pass);
  CHECK(outcome.summary["results"]["identity_residual"].get<double>() < 1e-12);
}

TEST_CASE("iid experiment: lag-1 p-value and marginal z within thresholds") {
  auto dir = temp_dir("iid");
  json j = {{"kind", "iid"},
            {"system",
             {{"dimension", 2},
              {"hamiltonian", {{"preset", "rabi"}}},
              {"tau", 0.7},
              {"initial_state", {{"preset", "basis"}, {"index", 0}}}}},
            {"run", {{"steps", 5000}, {"seed", 21}}},
            {"out", dir.string()}};
  ExperimentOutcome outcome = run_experiment(ExperimentConfig::from_json(j));
  CHECK(outcome.check_pass);
  CHECK(outcome.summary["results"]["lag1"]["p_value"].get<double>() > 0.001);
}

TEST_CASE("beable-lab binary: subcommands, seed override, exit codes") {
  auto dir = temp_dir("cli");
  auto cfg_path = dir / "cfg.json";
  {
    json j = {{"kind", "bell"},
              {"system",
               {{"dimension", 2},
                {"hamiltonian", {{"preset", "rabi"}}},
                {"initial_state", {{"preset", "basis"}, {"index", 0}}}}},
              {"run", {{"t_end", 0.6}, {"n_runs", 500}, {"seed", 6}}},
              {"check", {{"tv_max", 0.1}}},
              {"out", (dir / "out").string()}};
    std::ofstream out(cfg_path);
    out << j.dump();
  }
  auto shell = [](const std::string& cmd) {
    int status = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  const std::string bin = BEABLE_LAB_BIN;

  CHECK(shell(bin + " run " + cfg_path.string() + " --check") == 0);
  CHECK(std::filesystem::exists(dir / "out" / "bell.csv"));

  // Seed precedence: environment beats config, --seed beats environment.
  CHECK(shell("BEABLE_LAB_SEED=99 " + bin + " run " + cfg_path.string()) == 0);
  json s1 = json::parse(read_file((dir / "out" / "summary.json").string()));
  CHECK(s1["seed"] == 99);
  CHECK(shell("BEABLE_LAB_SEED=99 " + bin + " run " + cfg_path.string() + " --seed 7") == 0);
  json s2 = json::parse(read_file((dir / "out" / "summary.json").string()));
  CHECK(s2["seed"] == 7);

  CHECK(shell(bin + " run " + (dir / "missing.json").string()) == 2);

  CHECK(shell(bin + " scan --n 50 --seed 2 --out " + (dir / "scan").string()) == 0);
  CHECK(std::filesystem::exists(dir / "scan" / "violations.csv"));

  {
    std::ofstream qc(dir / "c.qc");
    qc << "qubits 2\ng H q 0\ncnot 0 1\n";
  }
  CHECK(shell(bin + " circuit " + (dir / "c.qc").string() + " --n-runs 400 --seed 3 --tv 0.1 " +
              "--out " + (dir / "circ").string() + " --check") == 0);
  // An impossible threshold with --check trips exit code 4.
  CHECK(shell(bin + " circuit " + (dir / "c.qc").string() + " --n-runs 400 --seed 3 --tv 0 " +
              "--out " + (dir / "circ4").string() + " --check") == 4);
}

TEST_CASE("experiment runner maps error classes onto exit codes") {
  std::ostringstream out, err;
  ExperimentConfig cfg;  // no kind
  cfg.kind = "bell";     // missing t_end and system
  CHECK(run_experiment_cli(cfg, false, out, err) == 2);

  json j = {{"kind", "two-state"},
            {"system",
             {{"dimension", 3},
              {"unitary", {{"preset", "haar"}, {"seed", 1}}},
              {"initial_state", {{"preset", "random"}, {"seed", 2}}}}},
            {"run", {{"steps", 2}, {"n_runs", 10}}}};
  // three configurations for a two-state experiment: configuration error
  CHECK(run_experiment_cli(ExperimentConfig::from_json(j), false, out, err) == 2);
}
