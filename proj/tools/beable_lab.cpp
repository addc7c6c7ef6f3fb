// SPDX-License-Identifier: Apache-2.0
//
// beable-lab: stochastic processes guided by quantum states on a finite
// configuration lattice. Subcommands run experiment configs, scan candidate
// discrete currents for admissibility violations, and sample trajectories
// through quantum circuits.
#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>

#include "beable/experiments.hpp"

namespace {

// Seed precedence: --seed beats BEABLE_LAB_SEED beats the config value.
void apply_seed_overrides(beable::harness::ExperimentConfig& cfg, bool seed_given,
                          std::uint64_t seed) {
  if (const char* env = std::getenv("BEABLE_LAB_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw beable::invalid_input("BEABLE_LAB_SEED is not a number");
    }
  }
  if (seed_given) cfg.seed = seed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beable-lab: jump processes guided by quantum states"};
  app.require_subcommand(1);

  // run <config>
  auto* run = app.add_subcommand("run", "run an experiment config (JSON)");
  std::string config_path;
  std::uint64_t seed = 0;
  bool check = false;
  std::string out_dir;
  run->add_option("config", config_path, "experiment config file")->required();
  auto* run_seed = run->add_option("--seed", seed, "override the config seed");
  run->add_flag("--check", check, "enforce acceptance thresholds (exit 4 on breach)");
  run->add_option("--out", out_dir, "override the output directory");

  // scan: violation-scan shorthand
  auto* scan = app.add_subcommand("scan", "scan candidate currents for violations");
  int scan_dim = 3;
  int scan_n = 1000;
  std::vector<int> scan_pair{1, 0};
  std::string scan_candidate = "guess1:real:2";
  scan->add_option("--dim", scan_dim, "Hilbert space dimension (singleton blocks)");
  scan->add_option("--n", scan_n, "number of sampled (U, psi) pairs");
  scan->add_option("--pair", scan_pair, "configuration pair: destination source")
      ->expected(2);
  scan->add_option("--candidate", scan_candidate, "candidate current base:part[:scale]");
  auto* scan_seed = scan->add_option("--seed", seed, "master seed");
  scan->add_flag("--check", check, "enforce the violation-fraction range");
  scan->add_option("--out", out_dir, "output directory");

  // circuit <file>: circuit-trajectory shorthand
  auto* circ = app.add_subcommand("circuit", "sample beable trajectories through a circuit");
  std::string circuit_path;
  long circ_runs = 100000;
  double circ_tv = 0.015;
  circ->add_option("circuit", circuit_path, "circuit file")->required();
  circ->add_option("--n-runs", circ_runs, "number of trajectories");
  circ->add_option("--tv", circ_tv, "total-variation threshold per gate");
  auto* circ_seed = circ->add_option("--seed", seed, "master seed");
  circ->add_flag("--check", check, "enforce the TV threshold (exit 4 on breach)");
  circ->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    beable::harness::ExperimentConfig cfg;
    if (run->parsed()) {
      cfg = beable::harness::ExperimentConfig::from_file(config_path);
      apply_seed_overrides(cfg, run_seed->count() > 0, seed);
    } else if (scan->parsed()) {
      cfg.kind = "violation-scan";
      cfg.system.dimension = scan_dim;
      cfg.n_samples = scan_n;
      cfg.q_pair = {scan_pair[0], scan_pair[1]};
      cfg.candidate = beable::CandidateId::parse(scan_candidate);
      apply_seed_overrides(cfg, scan_seed->count() > 0, seed);
    } else {
      cfg.kind = "circuit";
      cfg.circuit_file = circuit_path;
      cfg.n_runs = circ_runs;
      cfg.check.tv_max = circ_tv;
      apply_seed_overrides(cfg, circ_seed->count() > 0, seed);
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    return beable::harness::run_experiment_cli(cfg, check, std::cout, std::cerr);
  } catch (const beable::invalid_input& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const beable::numeric_failure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }
}
