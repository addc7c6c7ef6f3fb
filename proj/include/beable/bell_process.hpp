// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_BELL_PROCESS_HPP
#define BEABLE_BELL_PROCESS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "beable/hilbert.hpp"
#include "beable/types.hpp"

namespace beable {

/// Jump rates sigma(q|q'): entry (q, q'), nonnegative, zero diagonal
/// (units 1/time).
class RateMatrix {
 public:
  explicit RateMatrix(Eigen::MatrixXd rates);

  const Eigen::MatrixXd& rates() const { return rates_; }
  double operator()(config_t to, config_t from) const { return rates_(to, from); }
  int num_configs() const { return static_cast<int>(rates_.rows()); }
  /// Total outgoing rate sigma(Q|q).
  double total_from(config_t from) const { return rates_.col(from).sum(); }

 private:
  Eigen::MatrixXd rates_;
};

/// Antisymmetric real probability current J(q, q').
class CurrentMatrix {
 public:
  explicit CurrentMatrix(Eigen::MatrixXd entries);

  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(config_t to, config_t from) const { return entries_(to, from); }
  int num_configs() const { return static_cast<int>(entries_.rows()); }

 private:
  Eigen::MatrixXd entries_;
};

struct TrajectoryRecord {
  double time;
  config_t config;
};

/// One stochastic run: the initial condition plus every jump event.
struct Trajectory {
  std::vector<TrajectoryRecord> records;
  double start_time = 0.0;
  double end_time = 0.0;
  long zero_weight_events = 0;
  long hazard_evaluations = 0;

  config_t config_at(double t) const;
  config_t final_config() const { return records.back().config; }
  long num_jumps() const { return static_cast<long>(records.size()) - 1; }
};

struct RateDiagnostics {
  int zero_weight_columns = 0;
};

/// Eq.-(1)-style rates sigma(q|q') = [2 Im <Psi|P(q)HP(q')|Psi>]^+ / <Psi|P(q')|Psi>
/// with hbar = 1; columns with Born weight below kEpsWeight are zero.
RateMatrix jump_rates(const StateVector& psi, const HermitianOperator& hamiltonian,
                      const Decomposition& dec, RateDiagnostics* diag = nullptr);

/// Continuous probability current J(q,q') = 2 Im <Psi|P(q)HP(q')|Psi>.
CurrentMatrix continuous_current(const StateVector& psi, const HermitianOperator& hamiltonian,
                                 const Decomposition& dec);

/// Rates along the exact evolution Psi_s of one (H, psi0) pair.
/// Not thread-safe; use one evaluator per thread.
class RateEvaluator {
 public:
  RateEvaluator(const HermitianOperator& hamiltonian, const Decomposition& dec,
                const StateVector& psi0);

  /// Outgoing-rate column sigma_s(.|from) written into out; returns the total.
  double rates_from(config_t from, double s, Eigen::VectorXd& out);
  /// Total outgoing rate sigma_s(Q|from).
  double total_rate_from(config_t from, double s);
  /// Full rate matrix at time s, entries capped at rate_cap (0 = no cap).
  void rate_matrix_at(double s, Eigen::MatrixXd& out, double rate_cap = 0.0);
  /// Born weights at time s.
  void born_at(double s, Eigen::VectorXd& out);

  const Propagator& propagator() const { return propagator_; }
  long zero_weight_events() const { return zero_weight_events_; }
  long evaluations() const { return evaluations_; }

 private:
  void load_state(double s);

  const Eigen::MatrixXcd hamiltonian_;
  const Decomposition& dec_;
  Propagator propagator_;
  Eigen::VectorXcd psi_;
  Eigen::VectorXcd hv_;
  Eigen::VectorXcd phase_scratch_;
  double psi_time_;
  bool psi_valid_ = false;
  long zero_weight_events_ = 0;
  long evaluations_ = 0;
};

struct SamplerControls {
  double hazard_rel_tol = 1e-9;
  /// Absolute time tolerance of the jump-time bisection; 0 selects 1e-10 * t_end.
  double time_tol = 0.0;
  int max_quad_depth = 30;
  long max_hazard_evaluations = 200000000;
};

/// Sample the pure jump process with time-dependent rates along the exact
/// Psi_s over [0, t_end]. q0 empty means: draw the start from Born(psi0).
/// Waiting times solve cumulative-hazard = Exp(1) by panel marching plus
/// bisection; destinations are inverse-CDF in ascending label order.
Trajectory sample_trajectory(const HermitianOperator& hamiltonian, const Decomposition& dec,
                             const StateVector& psi0, std::optional<config_t> q0, double t_end,
                             std::uint64_t seed, const SamplerControls& controls = {});

struct EnsembleCounts {
  std::vector<double> times;
  // counts(i, q): runs occupying configuration q at times[i]
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;
  long n_runs = 0;
  long zero_weight_events = 0;
};

/// Independent trajectories (run k uses stream_seed(master_seed, k)), counted
/// at the given record times. Parallel and serial execution give identical
/// counts. n_threads = 0 picks the hardware default.
EnsembleCounts sample_ensemble(const HermitianOperator& hamiltonian, const Decomposition& dec,
                               const StateVector& psi0, std::optional<config_t> q0, double t_end,
                               const std::vector<double>& record_times, long n_runs,
                               std::uint64_t master_seed, const SamplerControls& controls = {},
                               int n_threads = 0);

struct MasterEquationControls {
  /// Cap on individual rates; keeps the ODE integrable across Born nodes.
  double rate_cap = 1e6;
  long max_steps = 50000000;
};

/// Deterministic oracle: integrates
///   d rho(q)/dt = sum_q' [sigma_t(q|q') rho(q') - sigma_t(q'|q) rho(q)]
/// with rates along the exact Psi_t, reporting rho at each grid time.
std::vector<ProbabilityVector> master_equation_evolve(
    const HermitianOperator& hamiltonian, const Decomposition& dec, const StateVector& psi0,
    const ProbabilityVector& rho0, const std::vector<double>& t_grid, double ode_tol = 1e-9,
    const MasterEquationControls& controls = {});

}  // namespace beable

#endif
