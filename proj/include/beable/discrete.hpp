// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_DISCRETE_HPP
#define BEABLE_DISCRETE_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "beable/bell_process.hpp"
#include "beable/types.hpp"

namespace beable {

/// Column-stochastic one-step transition probabilities: entry (q, q') is
/// P(q' -> q).
class TransitionMatrix {
 public:
  explicit TransitionMatrix(Eigen::MatrixXd probs);

  const Eigen::MatrixXd& probs() const { return probs_; }
  double operator()(config_t to, config_t from) const { return probs_(to, from); }
  int num_configs() const { return static_cast<int>(probs_.rows()); }

 private:
  Eigen::MatrixXd probs_;
};

struct DiscreteTrajectory {
  std::vector<config_t> configs;
  double tau = 0.0;
};

/// One step of the restriction of the continuous jump process to times
/// t, t + tau: runs the exact sampler over [0, tau] from q_from along the
/// evolution of psi_t and returns the endpoint configuration.
config_t restricted_step(const HermitianOperator& hamiltonian, const Decomposition& dec,
                         const StateVector& psi_t, config_t q_from, double tau,
                         std::uint64_t seed, const SamplerControls& controls = {});

struct SeriesResult {
  double probability = 0.0;
  /// Tail bound over jump counts > n_max: (sup rate * tau)^(n_max+1)/(n_max+1)!.
  double remainder_bound = 0.0;
  /// Difference between the last two dyadic refinements of the quadrature.
  double quad_error = 0.0;
  double sup_total_rate = 0.0;
  int n_max = 0;
  int grid_level = 0;
  long evaluations = 0;
  bool quad_converged = false;
};

/// Transition probability of the restricted process as a truncated sum over
/// jump counts n <= n_max of nested time-ordered integrals, evaluated by
/// dyadically refined Simpson quadrature with shared cached rate evaluations.
/// A remainder bound above the requested accuracy is reported, not fatal.
SeriesResult restricted_transition_series(const HermitianOperator& hamiltonian,
                                          const Decomposition& dec, const StateVector& psi_t,
                                          config_t q_from, config_t q_to, double tau,
                                          int n_max = 3, double quad_tol = 1e-9);

/// Minimal two-state transition probabilities compatible with the discrete
/// current: P(leave q) = [<Psi|(P(q) - U*P(q)U)|Psi>]^+ / <Psi|P(q)|Psi>.
/// Columns with Born weight below kEpsWeight get jump probability 0 (flagged).
TransitionMatrix two_state_transition(const StateVector& psi, const UnitaryOperator& unitary,
                                      const Decomposition& dec, int* zero_weight_flags = nullptr);

/// One step of the memoryless process: samples from Born(psi_next),
/// ignoring the previous configuration.
config_t iid_step(const StateVector& psi_next, const Decomposition& dec, std::mt19937_64& rng);
config_t iid_step(const StateVector& psi_next, const Decomposition& dec, std::uint64_t seed);

}  // namespace beable

#endif
