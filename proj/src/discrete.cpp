// SPDX-License-Identifier: Apache-2.0
#include "beable/discrete.hpp"

#include <cmath>
#include <unordered_map>

#include "beable/rng.hpp"

namespace beable {

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  if (probs_.rows() != probs_.cols() || probs_.rows() < 1)
    throw invalid_input("TransitionMatrix: must be square and nonempty");
  for (int from = 0; from < probs_.cols(); ++from) {
    double sum = 0.0;
    for (int to = 0; to < probs_.rows(); ++to) {
      double p = probs_(to, from);
      if (p < -kColumnSumTol || p > 1.0 + kColumnSumTol)
        throw invalid_input("TransitionMatrix: entry outside [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kColumnSumTol)
      throw invalid_input("TransitionMatrix: column " + std::to_string(from) +
                          " sums to " + std::to_string(sum));
  }
}

config_t restricted_step(const HermitianOperator& hamiltonian, const Decomposition& dec,
                         const StateVector& psi_t, config_t q_from, double tau,
                         std::uint64_t seed, const SamplerControls& controls) {
  Trajectory traj = sample_trajectory(hamiltonian, dec, psi_t, q_from, tau, seed, controls);
  return traj.final_config();
}

namespace {

// Shared rate-node cache for the dyadic quadrature grids. Node k stands for
// time tau * k / 2^kScaleBits, so refined grids reuse coarser evaluations.
constexpr int kScaleBits = 26;

struct NodeRates {
  Eigen::MatrixXd rates;   // (to, from)
  Eigen::VectorXd totals;  // column sums
};

class RateGrid {
 public:
  RateGrid(RateEvaluator& eval, double tau, int nq)
      : eval_(eval), tau_(tau), nq_(nq) {}

  const NodeRates& at(std::uint64_t key) {
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    NodeRates node;
    double t = tau_ * static_cast<double>(key) / static_cast<double>(1ULL << kScaleBits);
    eval_.rate_matrix_at(t, node.rates, 0.0);
    node.totals = node.rates.colwise().sum();
    sup_total_ = std::max(sup_total_, node.totals.maxCoeff());
    return cache_.emplace(key, std::move(node)).first->second;
  }

  double sup_total() const { return sup_total_; }
  long size() const { return static_cast<long>(cache_.size()); }

 private:
  RateEvaluator& eval_;
  double tau_;
  int nq_;
  double sup_total_ = 0.0;
  std::unordered_map<std::uint64_t, NodeRates> cache_;
};

// One evaluation of the truncated jump-count sum on grids anchored at base
// level `level`: rates live on level+n_max+1, tail hazards on level+n_max,
// and the m-jump term on level+n_max-m, all nested in the shared cache.
double evaluate_series(RateGrid& grid, config_t q_from, config_t q_to, double tau, int n_max,
                       int level, int nq) {
  const int lambda_level = level + n_max;
  const std::uint64_t lambda_stride = 1ULL << (kScaleBits - lambda_level);
  const std::size_t n_lambda = (1ULL << lambda_level) + 1;
  const double dt = tau / static_cast<double>(1ULL << lambda_level);

  // Tail hazards Lambda_r(t) = int_t^tau sigma_s(Q|r) ds, per interval
  // Simpson with midpoints from the rate level.
  Eigen::MatrixXd lam(nq, n_lambda);
  lam.col(n_lambda - 1).setZero();
  for (std::size_t j = n_lambda - 1; j > 0; --j) {
    std::uint64_t a = (j - 1) * lambda_stride;
    const auto& ra = grid.at(a);
    const auto& rm = grid.at(a + lambda_stride / 2);
    const auto& rb = grid.at(a + lambda_stride);
    for (int r = 0; r < nq; ++r)
      lam(r, j - 1) = lam(r, j) + dt / 6.0 * (ra.totals(r) + 4.0 * rm.totals(r) +
                                              rb.totals(r));
  }
  if (lam.col(0).maxCoeff() > 600.0)
    throw numeric_failure("restricted_transition_series: cumulative hazard too large");

  // m = 0: survival term on the hazard grid.
  Eigen::MatrixXd g_prev = Eigen::MatrixXd::Zero(nq, n_lambda);
  for (std::size_t j = 0; j < n_lambda; ++j) g_prev(q_to, j) = std::exp(-lam(q_to, j));

  double total = g_prev(q_from, 0);

  for (int m = 1; m <= n_max; ++m) {
    const int g_level = lambda_level - m;
    const std::size_t stride = 1ULL << m;        // index stride within the hazard grid
    const std::size_t n_nodes = (1ULL << g_level) + 1;
    const double step = tau / static_cast<double>(1ULL << g_level);
    Eigen::MatrixXd g_next = Eigen::MatrixXd::Zero(nq, n_lambda);

    // phi(r, idx) = e^{+Lambda_r} * sum_{r'} sigma(r'|r) G_{m-1}(r'), with idx
    // indexing the hazard grid.
    auto phi = [&](int r, std::size_t idx) {
      const auto& node = grid.at(idx * lambda_stride);
      double acc = 0.0;
      for (int rp = 0; rp < nq; ++rp) {
        if (rp == r) continue;
        double gprev = g_prev(rp, idx);
        if (gprev != 0.0) acc += node.rates(rp, r) * gprev;
      }
      return acc == 0.0 ? 0.0 : std::exp(lam(r, idx)) * acc;
    };

    for (int r = 0; r < nq; ++r) {
      double suffix = 0.0;
      g_next(r, (n_nodes - 1) * stride) = 0.0;
      for (std::size_t j = n_nodes - 1; j > 0; --j) {
        std::size_t a = (j - 1) * stride;
        suffix += step / 6.0 * (phi(r, a) + 4.0 * phi(r, a + stride / 2) +
                                phi(r, a + stride));
        g_next(r, a) = std::exp(-lam(r, a)) * suffix;
      }
    }
    g_prev.swap(g_next);
    total += g_prev(q_from, 0);
  }
  return total;
}

}  // namespace

SeriesResult restricted_transition_series(const HermitianOperator& hamiltonian,
                                          const Decomposition& dec, const StateVector& psi_t,
                                          config_t q_from, config_t q_to, double tau,
                                          int n_max, double quad_tol) {
  if (!(tau > 0)) throw invalid_input("restricted_transition_series: tau must be > 0");
  if (n_max < 0) throw invalid_input("restricted_transition_series: n_max must be >= 0");
  const int nq = dec.num_configs();
  if (q_from < 0 || q_from >= nq || q_to < 0 || q_to >= nq)
    throw invalid_input("restricted_transition_series: configuration out of range");

  RateEvaluator eval(hamiltonian, dec, psi_t);
  RateGrid grid(eval, tau, nq);

  SeriesResult res;
  res.n_max = n_max;

  const int base_min = 5;
  const int base_max = std::min(11, kScaleBits - n_max - 2);
  double prev = 0.0;
  bool have_prev = false;
  for (int level = base_min; level <= base_max; ++level) {
    double value = evaluate_series(grid, q_from, q_to, tau, n_max, level, nq);
    res.probability = value;
    res.grid_level = level;
    if (have_prev) {
      res.quad_error = std::abs(value - prev);
      if (res.quad_error <= std::max(quad_tol, quad_tol * std::abs(value))) {
        res.quad_converged = true;
        prev = value;
        break;
      }
    }
    prev = value;
    have_prev = true;
  }

  res.sup_total_rate = grid.sup_total();
  res.evaluations = grid.size();
  double x = res.sup_total_rate * tau;
  res.remainder_bound =
      x <= 0.0 ? 0.0 : std::exp((n_max + 1) * std::log(x) - std::lgamma(n_max + 2.0));
  return res;
}

TransitionMatrix two_state_transition(const StateVector& psi, const UnitaryOperator& unitary,
                                      const Decomposition& dec, int* zero_weight_flags) {
  if (dec.num_configs() != 2)
    throw invalid_input("two_state_transition: exactly two configurations required");
  if (psi.dim() != dec.dim() || unitary.dim() != dec.dim())
    throw invalid_input("two_state_transition: dimension mismatch");
  Eigen::VectorXd w = born_distribution(psi, dec).weights();
  Eigen::VectorXd w_next =
      born_distribution(StateVector(unitary.matrix() * psi.amplitudes()), dec).weights();
  int flags = 0;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(2, 2);
  for (config_t q = 0; q < 2; ++q) {
    double jump = 0.0;
    if (w(q) < kEpsWeight) {
      ++flags;
    } else {
      jump = std::max(w(q) - w_next(q), 0.0) / w(q);
      jump = std::min(jump, 1.0);
    }
    t(1 - q, q) = jump;
    t(q, q) = 1.0 - jump;
  }
  if (zero_weight_flags) *zero_weight_flags = flags;
  return TransitionMatrix(std::move(t));
}

config_t iid_step(const StateVector& psi_next, const Decomposition& dec, std::mt19937_64& rng) {
  Eigen::VectorXd w = born_distribution(psi_next, dec).weights();
  double u = uniform01(rng) * w.sum();
  double acc = 0.0;
  config_t q = dec.num_configs() - 1;
  for (config_t c = 0; c < dec.num_configs(); ++c) {
    acc += w(c);
    if (u < acc) {
      q = c;
      break;
    }
  }
  return q;
}

config_t iid_step(const StateVector& psi_next, const Decomposition& dec, std::uint64_t seed) {
  auto rng = make_engine(seed);
  return iid_step(psi_next, dec, rng);
}

}  // namespace beable
