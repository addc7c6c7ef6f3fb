// SPDX-License-Identifier: Apache-2.0
#include "beable/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

namespace beable {

double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw invalid_input("tv_distance: size mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

double chi_square_pvalue(double statistic, int dof) {
  if (dof < 1) throw invalid_input("chi_square_pvalue: dof must be >= 1");
  if (!(statistic >= 0)) return 1.0;
  if (std::isinf(statistic)) return 0.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

DistComparison compare_distributions(const std::vector<long>& counts,
                                     const ProbabilityVector& reference) {
  const int nq = reference.size();
  if (static_cast<int>(counts.size()) != nq)
    throw invalid_input("compare_distributions: configuration sets do not match");
  long n = 0;
  for (long c : counts) {
    if (c < 0) throw invalid_input("compare_distributions: negative count");
    n += c;
  }
  if (n == 0) throw invalid_input("compare_distributions: empty sample");

  DistComparison out;
  Eigen::VectorXd empirical(nq);
  for (int q = 0; q < nq; ++q) empirical(q) = static_cast<double>(counts[q]) / n;
  out.tv = tv_distance(empirical, reference.weights());

  out.z.resize(nq);
  for (int q = 0; q < nq; ++q) {
    double p = reference(q);
    double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
    double dev = counts[q] - n * p;
    if (sd > 0)
      out.z(q) = dev / sd;
    else
      out.z(q) = dev == 0 ? 0.0
                          : std::copysign(std::numeric_limits<double>::infinity(), dev);
  }

  // Pool zero-weight reference cells into one cell before the chi-square.
  double chi = 0.0;
  int cells = 0;
  long pooled_count = 0;
  bool have_pool = false;
  for (int q = 0; q < nq; ++q) {
    double expected = static_cast<double>(n) * reference(q);
    if (reference(q) <= 0.0) {
      pooled_count += counts[q];
      have_pool = true;
    } else {
      double dev = counts[q] - expected;
      chi += dev * dev / expected;
      ++cells;
    }
  }
  if (have_pool) {
    ++cells;
    if (pooled_count > 0) chi = std::numeric_limits<double>::infinity();
  }
  out.chi_square = chi;
  out.dof = std::max(cells - 1, 1);
  out.p_value = chi_square_pvalue(chi, out.dof);
  return out;
}

EnsembleStats EnsembleStats::from_counts(
    std::vector<double> times, Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts,
    long n_runs) {
  if (static_cast<long>(times.size()) != counts.rows())
    throw invalid_input("EnsembleStats: one row of counts per recorded time required");
  for (long i = 0; i < counts.rows(); ++i)
    if (counts.row(i).sum() != n_runs)
      throw invalid_input("EnsembleStats: counts at time index " + std::to_string(i) +
                          " do not sum to n_runs");
  EnsembleStats s;
  s.times = std::move(times);
  s.counts = std::move(counts);
  s.n_runs = n_runs;
  return s;
}

std::vector<long> EnsembleStats::counts_at(int time_index) const {
  std::vector<long> row(counts.cols());
  for (int q = 0; q < counts.cols(); ++q) row[q] = counts(time_index, q);
  return row;
}

DistComparison EnsembleStats::compare_at(int time_index,
                                         const ProbabilityVector& reference) const {
  return compare_distributions(counts_at(time_index), reference);
}

LagIndependence lag1_independence(const std::vector<config_t>& chain,
                                  const std::vector<double>& p_step) {
  if (chain.size() != p_step.size())
    throw invalid_input("lag1_independence: one marginal per step required");
  if (chain.size() < 3) throw invalid_input("lag1_independence: chain too short");
  for (config_t q : chain)
    if (q != 0 && q != 1)
      throw invalid_input("lag1_independence: binary configurations required");

  double t = 0.0, var = 0.0;
  for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
    double x = (chain[k] == 0 ? 1.0 : 0.0) - p_step[k];
    double y = (chain[k + 1] == 0 ? 1.0 : 0.0) - p_step[k + 1];
    t += x * y;
    var += p_step[k] * (1.0 - p_step[k]) * p_step[k + 1] * (1.0 - p_step[k + 1]);
  }
  LagIndependence out;
  out.n_pairs = static_cast<long>(chain.size()) - 1;
  if (var <= 0) {
    out.z = 0.0;
  } else {
    out.z = t / std::sqrt(var);
  }
  out.statistic = out.z * out.z;
  out.p_value = chi_square_pvalue(out.statistic, 1);
  return out;
}

MarginalCheck marginal_check(const std::vector<config_t>& chain,
                             const std::vector<double>& p_step, config_t q) {
  if (chain.size() != p_step.size())
    throw invalid_input("marginal_check: one marginal per step required");
  if (q != 0 && q != 1) throw invalid_input("marginal_check: binary configurations required");
  MarginalCheck out;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    double p = q == 0 ? p_step[k] : 1.0 - p_step[k];
    out.expected += p;
    out.sd += p_step[k] * (1.0 - p_step[k]);
    if (chain[k] == q) out.observed += 1.0;
  }
  out.sd = std::sqrt(out.sd);
  out.z = out.sd > 0 ? (out.observed - out.expected) / out.sd : 0.0;
  return out;
}

}  // namespace beable
