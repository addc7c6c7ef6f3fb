// SPDX-License-Identifier: Apache-2.0
#include "beable/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "beable/circuits.hpp"
#include "beable/discrete.hpp"
#include "beable/hilbert.hpp"
#include "beable/rng.hpp"
#include "beable/stats.hpp"

namespace beable::harness {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct TableRow {
  double time;
  std::string config;
  long count;
  double empirical;
  double born;
  double z;
};

std::string write_table(const ExperimentConfig& cfg, const std::vector<TableRow>& rows) {
  std::filesystem::create_directories(cfg.out_dir);
  std::string path = (std::filesystem::path(cfg.out_dir) / (cfg.kind + ".csv")).string();
  std::ofstream out(path);
  if (!out) throw numeric_failure("cannot write table file " + path);
  out << "time,config,count,empirical,born,z\n";
  for (const auto& r : rows)
    out << format_double(r.time) << ',' << r.config << ',' << r.count << ','
        << format_double(r.empirical) << ',' << format_double(r.born) << ','
        << format_double(r.z) << '\n';
  return path;
}

std::string write_summary(const ExperimentConfig& cfg, const json& summary) {
  std::filesystem::create_directories(cfg.out_dir);
  std::string path = (std::filesystem::path(cfg.out_dir) / "summary.json").string();
  std::ofstream out(path);
  if (!out) throw numeric_failure("cannot write summary file " + path);
  out << summary.dump(2) << '\n';
  return path;
}

json base_summary(const ExperimentConfig& cfg) {
  json j;
  j["schema"] = "beable-lab/1";
  j["experiment"] = cfg.kind;
  j["seed"] = cfg.seed;
  j["config"] = cfg.resolved();
  return j;
}

// Ensemble of the continuous process observed at given times, compared
// against the exact Born weights; shared by the bell and restricted kinds.
ExperimentOutcome continuous_ensemble_experiment(const ExperimentConfig& cfg, double t_end,
                                                 const std::vector<double>& record_times) {
  HermitianOperator h = cfg.system.resolve_hamiltonian();
  Decomposition dec = cfg.system.decomposition();
  StateVector psi0 = cfg.system.resolve_initial_state();
  if (cfg.n_runs < 1) throw invalid_input("config: n_runs must be >= 1");

  EnsembleCounts counts = sample_ensemble(h, dec, psi0, cfg.start, t_end, record_times,
                                          cfg.n_runs, cfg.seed, cfg.sampler);
  EnsembleStats stats = EnsembleStats::from_counts(counts.times, counts.counts, counts.n_runs);

  Propagator prop(h, psi0);
  std::vector<TableRow> rows;
  json per_time = json::array();
  ExperimentOutcome outcome;
  for (std::size_t i = 0; i < record_times.size(); ++i) {
    ProbabilityVector born =
        born_distribution(StateVector(prop.state_at(record_times[i])), dec);
    DistComparison cmp = stats.compare_at(static_cast<int>(i), born);
    for (config_t q = 0; q < dec.num_configs(); ++q) {
      rows.push_back({record_times[i], dec.label(q), stats.counts(i, q),
                      double(stats.counts(i, q)) / stats.n_runs, born(q), cmp.z(q)});
    }
    per_time.push_back({{"time", record_times[i]},
                        {"tv", cmp.tv},
                        {"chi_square", cmp.chi_square},
                        {"p_value", cmp.p_value},
                        {"max_abs_z", cmp.z.cwiseAbs().maxCoeff()}});
    if (cmp.tv > cfg.check.tv_max)
      outcome.failures.push_back("tv " + format_double(cmp.tv) + " at t=" +
                                 format_double(record_times[i]) + " exceeds " +
                                 format_double(cfg.check.tv_max));
  }

  json summary = base_summary(cfg);
  summary["results"] = {{"n_runs", stats.n_runs},
                        {"per_time", per_time},
                        {"zero_weight_events", counts.zero_weight_events}};
  outcome.check_pass = outcome.failures.empty();
  summary["check_pass"] = outcome.check_pass;
  summary["check_failures"] = outcome.failures;
  outcome.table_path = write_table(cfg, rows);
  outcome.summary_path = write_summary(cfg, summary);
  outcome.summary = std::move(summary);
  return outcome;
}

ExperimentOutcome run_bell(const ExperimentConfig& cfg) {
  if (!(cfg.t_end > 0)) throw invalid_input("config: bell experiment needs t_end > 0");
  std::vector<double> times = cfg.record_times.empty()
                                  ? std::vector<double>{cfg.t_end}
                                  : cfg.record_times;
  return continuous_ensemble_experiment(cfg, cfg.t_end, times);
}

ExperimentOutcome run_restricted(const ExperimentConfig& cfg) {
  if (!cfg.system.tau || !(*cfg.system.tau > 0))
    throw invalid_input("config: restricted experiment needs tau > 0");
  if (cfg.steps < 1) throw invalid_input("config: restricted experiment needs steps >= 1");
  // The restricted chain is the continuous process observed at multiples of
  // tau, so the ensemble is sampled in one sweep per run.
  double tau = *cfg.system.tau;
  std::vector<double> times;
  for (int k = 1; k <= cfg.steps; ++k) times.push_back(k * tau);
  return continuous_ensemble_experiment(cfg, cfg.steps * tau, times);
}

ExperimentOutcome run_two_state(const ExperimentConfig& cfg) {
  UnitaryOperator u = cfg.system.resolve_unitary();
  Decomposition dec = cfg.system.decomposition();
  if (dec.num_configs() != 2)
    throw invalid_input("config: two-state experiment needs exactly two configurations");
  StateVector psi0 = cfg.system.resolve_initial_state();
  int steps = cfg.steps > 0 ? cfg.steps : 10;

  // Deterministic pushforward from the Born start plus a Monte Carlo ensemble.
  std::vector<Eigen::VectorXcd> states(steps + 1);
  states[0] = psi0.amplitudes();
  for (int k = 0; k < steps; ++k) states[k + 1] = (u.matrix() * states[k]).normalized();

  std::vector<TransitionMatrix> transitions;
  transitions.reserve(steps);
  double identity_residual = 0.0;
  Eigen::VectorXd rho = born_distribution(psi0, dec).weights();
  for (int k = 0; k < steps; ++k) {
    transitions.push_back(two_state_transition(StateVector(states[k]), u, dec));
    rho = transitions.back().probs() * rho;
    Eigen::VectorXd born_k = born_distribution(StateVector(states[k + 1]), dec).weights();
    identity_residual = std::max(identity_residual, (rho - born_k).cwiseAbs().maxCoeff());
  }

  const int nq = 2;
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(steps + 1, nq);
  if (cfg.start && (*cfg.start < 0 || *cfg.start >= nq))
    throw invalid_input("config: start configuration out of range");
  for (long run = 0; run < cfg.n_runs; ++run) {
    auto rng = make_engine(stream_seed(cfg.seed, run));
    config_t q;
    if (cfg.start) {
      q = *cfg.start;
    } else {
      Eigen::VectorXd w0 = born_distribution(psi0, dec).weights();
      q = uniform01(rng) < w0(0) ? 0 : 1;
    }
    counts(0, q)++;
    for (int k = 0; k < steps; ++k) {
      double p_move = transitions[k](1 - q, q);
      if (uniform01(rng) < p_move) q = 1 - q;
      counts(k + 1, q)++;
    }
  }

  std::vector<TableRow> rows;
  json per_step = json::array();
  ExperimentOutcome outcome;
  EnsembleStats stats;
  {
    std::vector<double> times(steps + 1);
    for (int k = 0; k <= steps; ++k) times[k] = k;
    stats = EnsembleStats::from_counts(times, counts, cfg.n_runs);
  }
  for (int k = 0; k <= steps; ++k) {
    ProbabilityVector born = born_distribution(StateVector(states[k]), dec);
    DistComparison cmp = stats.compare_at(k, born);
    for (config_t q = 0; q < nq; ++q)
      rows.push_back({double(k), dec.label(q), stats.counts(k, q),
                      double(stats.counts(k, q)) / stats.n_runs, born(q), cmp.z(q)});
    per_step.push_back({{"step", k}, {"tv", cmp.tv}, {"max_abs_z", cmp.z.cwiseAbs().maxCoeff()}});
    if (cmp.tv > cfg.check.tv_max)
      outcome.failures.push_back("tv at step " + std::to_string(k) + " exceeds threshold");
  }
  if (identity_residual > cfg.check.identity_tol)
    outcome.failures.push_back("equivariance identity residual " +
                               format_double(identity_residual) + " exceeds " +
                               format_double(cfg.check.identity_tol));

  json summary = base_summary(cfg);
  summary["results"] = {{"identity_residual", identity_residual},
                        {"per_step", per_step},
                        {"n_runs", cfg.n_runs}};
  outcome.check_pass = outcome.failures.empty();
  summary["check_pass"] = outcome.check_pass;
  summary["check_failures"] = outcome.failures;
  outcome.table_path = write_table(cfg, rows);
  outcome.summary_path = write_summary(cfg, summary);
  outcome.summary = std::move(summary);
  return outcome;
}

ExperimentOutcome run_iid(const ExperimentConfig& cfg) {
  UnitaryOperator u = cfg.system.resolve_unitary();
  Decomposition dec = cfg.system.decomposition();
  StateVector psi0 = cfg.system.resolve_initial_state();
  int steps = cfg.steps > 0 ? cfg.steps : 1000;
  const int nq = dec.num_configs();

  std::vector<Eigen::VectorXcd> states(steps + 1);
  states[0] = psi0.amplitudes();
  for (int k = 0; k < steps; ++k) states[k + 1] = (u.matrix() * states[k]).normalized();
  std::vector<ProbabilityVector> born;
  born.reserve(steps + 1);
  for (int k = 0; k <= steps; ++k) born.emplace_back(born_distribution(StateVector(states[k]), dec));

  // Record times: a handful of steps for the table.
  std::vector<int> record_steps;
  int stride = std::max(1, steps / 10);
  for (int k = 0; k <= steps; k += stride) record_steps.push_back(k);
  if (record_steps.back() != steps) record_steps.push_back(steps);

  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(
          static_cast<long>(record_steps.size()), nq);

  double score_sum = 0.0, var_sum = 0.0;
  double marg_observed = 0.0, marg_expected = 0.0, marg_var = 0.0;
  std::vector<config_t> chain(steps + 1);
  for (long run = 0; run < cfg.n_runs; ++run) {
    auto rng = make_engine(stream_seed(cfg.seed, run));
    for (int k = 0; k <= steps; ++k) chain[k] = iid_step(StateVector(states[k]), dec, rng);
    for (std::size_t i = 0; i < record_steps.size(); ++i) counts(i, chain[record_steps[i]])++;
    if (nq == 2) {
      std::vector<double> p_step(steps + 1);
      for (int k = 0; k <= steps; ++k) p_step[k] = born[k](0);
      for (int k = 0; k < steps; ++k) {
        double x = (chain[k] == 0 ? 1.0 : 0.0) - p_step[k];
        double y = (chain[k + 1] == 0 ? 1.0 : 0.0) - p_step[k + 1];
        score_sum += x * y;
        var_sum += p_step[k] * (1 - p_step[k]) * p_step[k + 1] * (1 - p_step[k + 1]);
      }
      MarginalCheck m = marginal_check(chain, p_step, 0);
      marg_observed += m.observed;
      marg_expected += m.expected;
      marg_var += m.sd * m.sd;
    }
  }

  std::vector<TableRow> rows;
  ExperimentOutcome outcome;
  {
    std::vector<double> times(record_steps.size());
    for (std::size_t i = 0; i < record_steps.size(); ++i) times[i] = record_steps[i];
    EnsembleStats stats = EnsembleStats::from_counts(times, counts, cfg.n_runs);
    for (std::size_t i = 0; i < record_steps.size(); ++i) {
      DistComparison cmp = stats.compare_at(static_cast<int>(i), born[record_steps[i]]);
      for (config_t q = 0; q < nq; ++q)
        rows.push_back({double(record_steps[i]), dec.label(q), stats.counts(i, q),
                        double(stats.counts(i, q)) / stats.n_runs, born[record_steps[i]](q),
                        cmp.z(q)});
    }
  }

  json results;
  results["n_runs"] = cfg.n_runs;
  results["steps"] = steps;
  if (nq == 2) {
    double z_lag = var_sum > 0 ? score_sum / std::sqrt(var_sum) : 0.0;
    double p_lag = chi_square_pvalue(z_lag * z_lag, 1);
    double z_marg = marg_var > 0 ? (marg_observed - marg_expected) / std::sqrt(marg_var) : 0.0;
    results["lag1"] = {{"z", z_lag}, {"chi_square", z_lag * z_lag}, {"p_value", p_lag}};
    results["marginal"] = {{"observed", marg_observed},
                           {"expected", marg_expected},
                           {"z", z_marg}};
    if (p_lag < cfg.check.p_min)
      outcome.failures.push_back("lag-1 independence p-value " + format_double(p_lag) +
                                 " below " + format_double(cfg.check.p_min));
    if (std::abs(z_marg) > cfg.check.z_max)
      outcome.failures.push_back("marginal z " + format_double(z_marg) + " exceeds " +
                                 format_double(cfg.check.z_max));
  }

  json summary = base_summary(cfg);
  summary["results"] = std::move(results);
  outcome.check_pass = outcome.failures.empty();
  summary["check_pass"] = outcome.check_pass;
  summary["check_failures"] = outcome.failures;
  outcome.table_path = write_table(cfg, rows);
  outcome.summary_path = write_summary(cfg, summary);
  outcome.summary = std::move(summary);
  return outcome;
}

ExperimentOutcome run_circuit(const ExperimentConfig& cfg) {
  if (cfg.circuit_file.empty())
    throw invalid_input("config: circuit experiment needs circuit_file");
  Circuit circuit = Circuit::load(cfg.circuit_file);
  StateVector psi0 = cfg.system.initial_state
                         ? StateVector(*cfg.system.initial_state)
                         : StateVector([&] {
                             Eigen::VectorXcd v = Eigen::VectorXcd::Zero(circuit.dim());
                             v(0) = 1.0;
                             return v;
                           }());
  CircuitProcess process(circuit, psi0);
  EnsembleCounts counts = process.ensemble(cfg.n_runs, cfg.seed);
  Decomposition dec = Decomposition::singletons(circuit.dim());
  EnsembleStats stats = EnsembleStats::from_counts(counts.times, counts.counts, counts.n_runs);

  std::vector<TableRow> rows;
  json per_gate = json::array();
  ExperimentOutcome outcome;
  for (int g = 0; g <= process.n_gates(); ++g) {
    ProbabilityVector born{process.born_after(g)};
    DistComparison cmp = stats.compare_at(g, born);
    for (config_t q = 0; q < circuit.dim(); ++q)
      rows.push_back({double(g), dec.label(q), stats.counts(g, q),
                      double(stats.counts(g, q)) / stats.n_runs, born(q), cmp.z(q)});
    per_gate.push_back({{"gate", g}, {"tv", cmp.tv}});
    if (cmp.tv > cfg.check.tv_max)
      outcome.failures.push_back("tv after gate " + std::to_string(g) + " exceeds threshold");
  }

  json summary = base_summary(cfg);
  summary["results"] = {{"n_runs", cfg.n_runs},
                        {"n_gates", process.n_gates()},
                        {"per_gate", per_gate},
                        {"zero_weight_events", counts.zero_weight_events}};
  outcome.check_pass = outcome.failures.empty();
  summary["check_pass"] = outcome.check_pass;
  summary["check_failures"] = outcome.failures;
  outcome.table_path = write_table(cfg, rows);
  outcome.summary_path = write_summary(cfg, summary);
  outcome.summary = std::move(summary);
  return outcome;
}

ExperimentOutcome run_violation_scan(const ExperimentConfig& cfg) {
  Decomposition dec = cfg.system.decomposition();
  ViolationScanResult res = violation_scan(cfg.system.dimension, dec, cfg.q_pair,
                                           cfg.candidate, cfg.n_samples, cfg.seed);

  std::filesystem::create_directories(cfg.out_dir);
  std::string table_path =
      (std::filesystem::path(cfg.out_dir) / "violations.csv").string();
  {
    std::ofstream out(table_path);
    out << "sample,column,excess\n";
    for (const auto& w : res.worst)
      out << w.sample_index << ',' << w.column << ',' << format_double(w.excess) << '\n';
  }

  ExperimentOutcome outcome;
  json summary = base_summary(cfg);
  summary["results"] = {{"n_samples", res.n_samples},
                        {"violation_count", res.source_column_violations},
                        {"violation_fraction", res.source_fraction()},
                        {"pair_violations", res.pair_violations},
                        {"any_violations", res.any_violations},
                        {"per_column_violations", res.per_column_violations},
                        {"cond1_failures", res.cond1_failures},
                        {"cond2_failures", res.cond2_failures},
                        {"cond4_failures", res.cond4_failures},
                        {"borderline_count", res.borderline_count}};
  double frac = res.source_fraction();
  if (frac < cfg.check.violation_range.first || frac > cfg.check.violation_range.second)
    outcome.failures.push_back("violation fraction " + format_double(frac) +
                               " outside [" + format_double(cfg.check.violation_range.first) +
                               ", " + format_double(cfg.check.violation_range.second) + "]");
  outcome.check_pass = outcome.failures.empty();
  summary["check_pass"] = outcome.check_pass;
  summary["check_failures"] = outcome.failures;
  outcome.table_path = table_path;
  outcome.summary_path = write_summary(cfg, summary);
  outcome.summary = std::move(summary);
  return outcome;
}

ExperimentOutcome run_convergence(const ExperimentConfig& cfg) {
  HermitianOperator h = cfg.system.resolve_hamiltonian();
  Decomposition dec = cfg.system.decomposition();
  if (dec.num_configs() != 2)
    throw invalid_input("config: convergence experiment needs exactly two configurations");
  StateVector psi0 = cfg.system.resolve_initial_state();
  if (cfg.taus.empty()) throw invalid_input("config: convergence experiment needs taus");
  const config_t to = cfg.q_pair.first, from = cfg.q_pair.second;
  if (to < 0 || to > 1 || from < 0 || from > 1 || to == from)
    throw invalid_input("config: q_pair must name the two distinct configurations");

  StateVector psi_t = evolve_continuous(h, psi0, cfg.t_start);
  double sigma = jump_rates(psi_t, h, dec)(to, from);

  std::filesystem::create_directories(cfg.out_dir);
  std::string table_path =
      (std::filesystem::path(cfg.out_dir) / "convergence.csv").string();
  std::ofstream out(table_path);
  out << "tau,process,p_jump,rate,sigma_bell,abs_error\n";

  std::vector<double> taus = cfg.taus;
  std::sort(taus.begin(), taus.end(), std::greater<>());
  std::vector<double> err_hat, err_tilde;
  json per_tau = json::array();
  for (double tau : taus) {
    UnitaryOperator u = evolution_operator(h, tau);
    double p_hat = two_state_transition(psi_t, u, dec)(to, from);
    SeriesResult series = restricted_transition_series(h, dec, psi_t, from, to, tau,
                                                       cfg.series_n_max, cfg.series_quad_tol);
    double e_hat = std::abs(p_hat / tau - sigma);
    double e_tilde = std::abs(series.probability / tau - sigma);
    err_hat.push_back(e_hat);
    err_tilde.push_back(e_tilde);
    out << format_double(tau) << ",minimal," << format_double(p_hat) << ','
        << format_double(p_hat / tau) << ',' << format_double(sigma) << ','
        << format_double(e_hat) << '\n';
    out << format_double(tau) << ",restricted," << format_double(series.probability) << ','
        << format_double(series.probability / tau) << ',' << format_double(sigma) << ','
        << format_double(e_tilde) << '\n';
    per_tau.push_back({{"tau", tau},
                       {"p_minimal", p_hat},
                       {"p_restricted", series.probability},
                       {"series_remainder_bound", series.remainder_bound},
                       {"err_minimal", e_hat},
                       {"err_restricted", e_tilde}});
  }

  ExperimentOutcome outcome;
  auto check_ratios = [&](const std::vector<double>& err, const std::string& name) {
    for (std::size_t i = 1; i < err.size(); ++i) {
      if (err[i] >= err[i - 1])
        outcome.failures.push_back(name + " error not decreasing between tau=" +
                                   format_double(taus[i - 1]) + " and " +
                                   format_double(taus[i]));
      double ratio = err[i] / err[i - 1];
      if (ratio < cfg.check.ratio_range.first || ratio > cfg.check.ratio_range.second)
        outcome.failures.push_back(name + " error ratio " + format_double(ratio) +
                                   " outside expected range");
    }
  };
  if (taus.size() >= 2) {
    check_ratios(err_hat, "minimal");
    check_ratios(err_tilde, "restricted");
  }

  json summary = base_summary(cfg);
  summary["results"] = {{"sigma_bell", sigma}, {"per_tau", per_tau}};
  outcome.check_pass = outcome.failures.empty();
  summary["check_pass"] = outcome.check_pass;
  summary["check_failures"] = outcome.failures;
  outcome.table_path = table_path;
  outcome.summary_path = write_summary(cfg, summary);
  outcome.summary = std::move(summary);
  return outcome;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  if (cfg.kind == "bell") return run_bell(cfg);
  if (cfg.kind == "restricted") return run_restricted(cfg);
  if (cfg.kind == "two-state") return run_two_state(cfg);
  if (cfg.kind == "iid") return run_iid(cfg);
  if (cfg.kind == "circuit") return run_circuit(cfg);
  if (cfg.kind == "violation-scan") return run_violation_scan(cfg);
  if (cfg.kind == "convergence") return run_convergence(cfg);
  throw invalid_input("config: unknown experiment kind '" + cfg.kind + "'");
}

int run_experiment_cli(const ExperimentConfig& cfg, bool check, std::ostream& out,
                       std::ostream& err) {
  try {
    ExperimentOutcome outcome = run_experiment(cfg);
    out << "summary: " << outcome.summary_path << "\n";
    out << "table:   " << outcome.table_path << "\n";
    if (!outcome.check_pass) {
      for (const auto& f : outcome.failures) err << "check failed: " << f << "\n";
      if (check) return 4;
    }
    return 0;
  } catch (const invalid_input& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_failure& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace beable::harness
