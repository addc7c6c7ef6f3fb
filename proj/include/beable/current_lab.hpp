// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_CURRENT_LAB_HPP
#define BEABLE_CURRENT_LAB_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "beable/bell_process.hpp"
#include "beable/discrete.hpp"
#include "beable/types.hpp"

namespace beable {

/// Base expressions for candidate discrete currents:
///   guess1(q, q') = <Psi|U* P(q) U P(q')|Psi>
///   guess2(q, q') = <Psi|P(q) U P(q')|Psi>
enum class CandidateBase { guess1, guess2 };
enum class CandidatePart { real_part, imag_part };

/// A candidate current: scale * Re/Im of a base expression, antisymmetrized
/// in (q, q'). The canonical scale is 2 for (guess1, real) and 1 otherwise;
/// (guess1, real, 2) is the one combination whose column sums balance the
/// Born-weight change exactly.
struct CandidateId {
  CandidateBase base = CandidateBase::guess1;
  CandidatePart part = CandidatePart::real_part;
  double scale = 2.0;

  static CandidateId canonical(CandidateBase base, CandidatePart part);
  /// Parse "guess1:real:2", "guess2:imag" (scale optional).
  static CandidateId parse(const std::string& text);
  std::string name() const;
};

/// Candidate current J(q,q') = scale * [part(base(q,q')) - part(base(q',q))] / 2.
CurrentMatrix candidate_current(const StateVector& psi, const UnitaryOperator& unitary,
                                const Decomposition& dec, const CandidateId& cand);

/// Admissibility report for a discrete current against one (psi, U, dec):
/// reality, antisymmetry, column positive-part bound, and column-sum balance.
struct ConditionReport {
  double cond1_max_imag = 0.0;
  double cond2_max_asym = 0.0;
  Eigen::VectorXd cond3_excess;    // per source configuration: sum_q J^+ - weight
  Eigen::VectorXd cond4_residual;  // per configuration: sum_q' J - (w_U - w)
  double tolerance = 1e-10;
  std::array<bool, 4> passes{};

  bool all_pass() const { return passes[0] && passes[1] && passes[2] && passes[3]; }
  double cond3_max_excess() const { return cond3_excess.maxCoeff(); }
  double cond4_max_residual() const { return cond4_residual.cwiseAbs().maxCoeff(); }
};

ConditionReport check_conditions(const CurrentMatrix& current, const StateVector& psi,
                                 const UnitaryOperator& unitary, const Decomposition& dec,
                                 double tol = 1e-10);

/// Markov transition matrix P(q' -> q) = J(q,q')^+ / <Psi|P(q')|Psi> with
/// stay probabilities as column complements. Throws numeric_failure naming
/// the offending configuration and excess mass if the column bound fails.
TransitionMatrix transition_from_current(const CurrentMatrix& current, const StateVector& psi,
                                         const Decomposition& dec);

struct ViolationScanResult {
  int n_samples = 0;
  std::uint64_t seed = 0;
  CandidateId candidate;
  std::pair<config_t, config_t> q_pair{0, 1};
  double tolerance = 1e-10;
  /// Headline count: column-bound violations at the pair's source column.
  int source_column_violations = 0;
  /// Violations at either pair column / at any column.
  int pair_violations = 0;
  int any_violations = 0;
  std::vector<int> per_column_violations;
  int cond1_failures = 0;
  int cond2_failures = 0;
  int cond4_failures = 0;
  /// Samples whose worst column excess fell in (1e-12, tol]: counted as
  /// passes per the condition tolerance, tallied here.
  int borderline_count = 0;
  struct WorstSample {
    int sample_index;
    config_t column;
    double excess;
  };
  std::vector<WorstSample> worst;  // descending excess, up to 10

  double source_fraction() const {
    return n_samples ? static_cast<double>(source_column_violations) / n_samples : 0.0;
  }
};

/// Draw (U, psi) pairs (Haar unitary, uniform state) and tally admissibility
/// failures of the candidate current. q_pair is (destination, source); the
/// headline count watches the source column. fixed_unitary replaces the Haar
/// draw (testing hook).
ViolationScanResult violation_scan(int dim, const Decomposition& dec,
                                   std::pair<config_t, config_t> q_pair,
                                   const CandidateId& candidate, int n_samples,
                                   std::uint64_t seed, double tol = 1e-10,
                                   const std::optional<UnitaryOperator>& fixed_unitary = {});

}  // namespace beable

#endif
