// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_STATS_HPP
#define BEABLE_STATS_HPP

#include <vector>

#include "beable/types.hpp"

namespace beable {

double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Upper tail of the chi-square distribution with dof degrees of freedom.
double chi_square_pvalue(double statistic, int dof);

struct DistComparison {
  double tv = 0.0;
  double chi_square = 0.0;
  int dof = 0;
  double p_value = 1.0;
  Eigen::VectorXd z;  // per configuration: (count - Np) / sqrt(Np(1-p))
};

/// Empirical counts against a reference distribution. Zero-weight reference
/// cells are pooled into one cell before the chi-square statistic.
DistComparison compare_distributions(const std::vector<long>& counts,
                                     const ProbabilityVector& reference);

/// Per-time ensemble occupation counts with derived statistics.
struct EnsembleStats {
  std::vector<double> times;
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;  // times x configs
  long n_runs = 0;

  static EnsembleStats from_counts(std::vector<double> times,
                                   Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts,
                                   long n_runs);
  std::vector<long> counts_at(int time_index) const;
  DistComparison compare_at(int time_index, const ProbabilityVector& reference) const;
};

/// Lag-1 independence test for a binary-configuration chain with known,
/// possibly step-dependent marginals p_step[k] = P(chain[k] = 0). The score
/// statistic sum_k (x_k - p_k)(x_{k+1} - p_{k+1}) is standardized by its
/// exact null variance; the p-value is the chi-square(1) tail of z^2.
struct LagIndependence {
  double z = 0.0;
  double statistic = 0.0;  // z^2
  double p_value = 1.0;
  long n_pairs = 0;
};
LagIndependence lag1_independence(const std::vector<config_t>& chain,
                                  const std::vector<double>& p_step);

/// Total occupation of configuration q against known per-step marginals.
struct MarginalCheck {
  double observed = 0.0;
  double expected = 0.0;
  double sd = 0.0;
  double z = 0.0;
};
MarginalCheck marginal_check(const std::vector<config_t>& chain,
                             const std::vector<double>& p_step, config_t q);

}  // namespace beable

#endif
