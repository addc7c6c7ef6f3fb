// SPDX-License-Identifier: Apache-2.0
#include "beable/bell_process.hpp"

#include <algorithm>
#include <atomic>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <mutex>
#include <thread>

#include "beable/quadrature.hpp"
#include "beable/rng.hpp"

namespace beable {

RateMatrix::RateMatrix(Eigen::MatrixXd rates) : rates_(std::move(rates)) {
  if (rates_.rows() != rates_.cols() || rates_.rows() < 1)
    throw invalid_input("RateMatrix: must be square and nonempty");
  for (int q = 0; q < rates_.rows(); ++q) {
    if (rates_(q, q) != 0.0) throw invalid_input("RateMatrix: diagonal must be zero");
    for (int p = 0; p < rates_.cols(); ++p)
      if (rates_(q, p) < 0.0) throw invalid_input("RateMatrix: negative rate");
  }
}

CurrentMatrix::CurrentMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
    throw invalid_input("CurrentMatrix: must be square and nonempty");
  double asym = (entries_ + entries_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAntisymTol)
    throw invalid_input("CurrentMatrix: antisymmetry violated by " + std::to_string(asym));
}

config_t Trajectory::config_at(double t) const {
  config_t q = records.front().config;
  for (const auto& r : records) {
    if (r.time > t) break;
    q = r.config;
  }
  return q;
}

namespace {

// M(q, q') = <Psi|P(q) H P(q')|Psi> for all pairs; O(|Q| d^2).
Eigen::MatrixXcd coupling_matrix(const Eigen::VectorXcd& amp, const Eigen::MatrixXcd& h,
                                 const Decomposition& dec) {
  const int nq = dec.num_configs();
  Eigen::MatrixXcd m(nq, nq);
  Eigen::VectorXcd hv(amp.size());
  for (config_t from = 0; from < nq; ++from) {
    hv.setZero();
    for (int i : dec.block(from)) hv.noalias() += amp(i) * h.col(i);
    for (config_t to = 0; to < nq; ++to) {
      complex acc = 0.0;
      for (int i : dec.block(to)) acc += std::conj(amp(i)) * hv(i);
      m(to, from) = acc;
    }
  }
  return m;
}

}  // namespace

RateMatrix jump_rates(const StateVector& psi, const HermitianOperator& hamiltonian,
                      const Decomposition& dec, RateDiagnostics* diag) {
  if (psi.dim() != dec.dim() || hamiltonian.dim() != dec.dim())
    throw invalid_input("jump_rates: dimension mismatch");
  const int nq = dec.num_configs();
  Eigen::MatrixXcd m = coupling_matrix(psi.amplitudes(), hamiltonian.matrix(), dec);
  Eigen::VectorXd w = born_distribution(psi, dec).weights();
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(nq, nq);
  int zero_cols = 0;
  for (config_t from = 0; from < nq; ++from) {
    if (w(from) < kEpsWeight) {
      ++zero_cols;
      continue;
    }
    for (config_t to = 0; to < nq; ++to) {
      if (to == from) continue;
      double flow = 2.0 * m(to, from).imag();
      rates(to, from) = std::max(flow, 0.0) / w(from);
    }
  }
  if (diag) diag->zero_weight_columns = zero_cols;
  return RateMatrix(std::move(rates));
}

CurrentMatrix continuous_current(const StateVector& psi, const HermitianOperator& hamiltonian,
                                 const Decomposition& dec) {
  if (psi.dim() != dec.dim() || hamiltonian.dim() != dec.dim())
    throw invalid_input("continuous_current: dimension mismatch");
  Eigen::MatrixXcd m = coupling_matrix(psi.amplitudes(), hamiltonian.matrix(), dec);
  // J = 2 Im M; exact antisymmetrization removes conjugate-symmetry roundoff.
  Eigen::MatrixXd j = 2.0 * m.imag();
  j = 0.5 * (j - j.transpose().eval());
  return CurrentMatrix(std::move(j));
}

RateEvaluator::RateEvaluator(const HermitianOperator& hamiltonian, const Decomposition& dec,
                             const StateVector& psi0)
    : hamiltonian_(hamiltonian.matrix()),
      dec_(dec),
      propagator_(hamiltonian, psi0),
      psi_(dec.dim()),
      hv_(dec.dim()),
      psi_time_(0.0) {
  if (hamiltonian.dim() != dec.dim())
    throw invalid_input("RateEvaluator: dimension mismatch");
}

void RateEvaluator::load_state(double s) {
  if (psi_valid_ && s == psi_time_) return;
  propagator_.state_at(s, phase_scratch_, psi_);
  psi_time_ = s;
  psi_valid_ = true;
}

double RateEvaluator::rates_from(config_t from, double s, Eigen::VectorXd& out) {
  ++evaluations_;
  load_state(s);
  const int nq = dec_.num_configs();
  out.resize(nq);
  out.setZero();
  double w = 0.0;
  for (int i : dec_.block(from)) w += std::norm(psi_(i));
  if (w < kEpsWeight) {
    ++zero_weight_events_;
    return 0.0;
  }
  hv_.setZero();
  for (int i : dec_.block(from)) hv_.noalias() += psi_(i) * hamiltonian_.col(i);
  double total = 0.0;
  for (config_t to = 0; to < nq; ++to) {
    if (to == from) continue;
    complex acc = 0.0;
    for (int i : dec_.block(to)) acc += std::conj(psi_(i)) * hv_(i);
    double r = std::max(2.0 * acc.imag(), 0.0) / w;
    out(to) = r;
    total += r;
  }
  return total;
}

double RateEvaluator::total_rate_from(config_t from, double s) {
  ++evaluations_;
  load_state(s);
  double w = 0.0;
  for (int i : dec_.block(from)) w += std::norm(psi_(i));
  if (w < kEpsWeight) {
    ++zero_weight_events_;
    return 0.0;
  }
  hv_.setZero();
  for (int i : dec_.block(from)) hv_.noalias() += psi_(i) * hamiltonian_.col(i);
  const int nq = dec_.num_configs();
  double total = 0.0;
  for (config_t to = 0; to < nq; ++to) {
    if (to == from) continue;
    complex acc = 0.0;
    for (int i : dec_.block(to)) acc += std::conj(psi_(i)) * hv_(i);
    total += std::max(2.0 * acc.imag(), 0.0) / w;
  }
  return total;
}

void RateEvaluator::rate_matrix_at(double s, Eigen::MatrixXd& out, double rate_cap) {
  ++evaluations_;
  load_state(s);
  const int nq = dec_.num_configs();
  out.resize(nq, nq);
  out.setZero();
  for (config_t from = 0; from < nq; ++from) {
    double w = 0.0;
    for (int i : dec_.block(from)) w += std::norm(psi_(i));
    if (w < kEpsWeight) {
      ++zero_weight_events_;
      continue;
    }
    hv_.setZero();
    for (int i : dec_.block(from)) hv_.noalias() += psi_(i) * hamiltonian_.col(i);
    for (config_t to = 0; to < nq; ++to) {
      if (to == from) continue;
      complex acc = 0.0;
      for (int i : dec_.block(to)) acc += std::conj(psi_(i)) * hv_(i);
      double r = std::max(2.0 * acc.imag(), 0.0) / w;
      if (rate_cap > 0.0) r = std::min(r, rate_cap);
      out(to, from) = r;
    }
  }
}

void RateEvaluator::born_at(double s, Eigen::VectorXd& out) {
  load_state(s);
  const int nq = dec_.num_configs();
  out.resize(nq);
  out.setZero();
  for (config_t q = 0; q < nq; ++q)
    for (int i : dec_.block(q)) out(q) += std::norm(psi_(i));
}

namespace {

struct JumpSearch {
  bool jumped = false;
  double time = 0.0;
};

// Find the first time T in (t_from, t_end) with integral of hazard over
// (t_from, T) equal to target, or report that the total integral stays below
// target. Marches over growing panels, then bisects inside the final panel.
//
// Each branch decision first runs a crude pass: when even that certifies the
// interval holds more mass than needed (the hazard can spike by orders of
// magnitude approaching a Born node), the expensive fine pass is skipped.
// Intervals whose mass actually gets consumed are always integrated at the
// fine tolerance, and those lie before the crossing where the hazard is
// smooth.
template <class Hazard>
JumpSearch invert_hazard(Hazard&& hazard, double t_from, double t_end, double target,
                         const AdaptiveSimpson& fine, const AdaptiveSimpson& crude,
                         double time_tol) {
  auto holds_crossing = [&](double a, double b, double remaining, double& consumed) {
    QuadratureResult rough = crude.integrate(hazard, a, b, remaining);
    if (rough.value >= 1.2 * remaining + 10.0 * rough.error_estimate) return true;
    QuadratureResult block = fine.integrate(hazard, a, b, remaining);
    if (block.value >= remaining) return true;
    consumed = block.value;
    return false;
  };

  JumpSearch result;
  double s = t_from;
  double remaining = target;
  double panel = std::max((t_end - t_from) / 16.0, 4.0 * time_tol);
  while (s < t_end) {
    double h = std::min(panel, t_end - s);
    double consumed = 0.0;
    if (!holds_crossing(s, s + h, remaining, consumed)) {
      remaining -= consumed;
      s += h;
      panel *= 2.0;
      continue;
    }
    // Crossing inside [s, s+h]: threshold descent by halving.
    double lo = s, width = h;
    while (width > time_tol) {
      double mid = lo + 0.5 * width;
      consumed = 0.0;
      if (holds_crossing(lo, mid, remaining, consumed)) {
        width = mid - lo;
      } else {
        remaining -= consumed;
        lo = mid;
        width *= 0.5;
      }
    }
    result.jumped = true;
    result.time = lo + 0.5 * width;
    return result;
  }
  return result;
}

}  // namespace

Trajectory sample_trajectory(const HermitianOperator& hamiltonian, const Decomposition& dec,
                             const StateVector& psi0, std::optional<config_t> q0, double t_end,
                             std::uint64_t seed, const SamplerControls& controls) {
  if (!(t_end > 0)) throw invalid_input("sample_trajectory: t_end must be > 0");
  if (q0 && (*q0 < 0 || *q0 >= dec.num_configs()))
    throw invalid_input("sample_trajectory: q0 out of range");
  RateEvaluator eval(hamiltonian, dec, psi0);
  auto rng = make_engine(seed);

  config_t q = 0;
  if (q0) {
    q = *q0;
  } else {
    Eigen::VectorXd w = born_distribution(psi0, dec).weights();
    double u = uniform01(rng) * w.sum();
    double acc = 0.0;
    for (config_t c = 0; c < dec.num_configs(); ++c) {
      acc += w(c);
      q = c;
      if (u < acc) break;
    }
  }

  const double time_tol =
      controls.time_tol > 0 ? controls.time_tol : 1e-10 * t_end;
  AdaptiveSimpson fine(controls.hazard_rel_tol, 1e-14, controls.max_quad_depth);
  AdaptiveSimpson crude(1e-3, 1e-12, 12);

  Trajectory traj;
  traj.start_time = 0.0;
  traj.end_time = t_end;
  traj.records.push_back({0.0, q});

  Eigen::VectorXd column(dec.num_configs());
  double t = 0.0;
  while (t < t_end) {
    if (eval.evaluations() > controls.max_hazard_evaluations)
      throw numeric_failure("sample_trajectory: hazard quadrature did not converge "
                            "(evaluation budget exhausted)");
    const config_t from = q;
    auto hazard = [&](double s) { return eval.total_rate_from(from, s); };
    double target = exponential1(rng);
    JumpSearch search = invert_hazard(hazard, t, t_end, target, fine, crude, time_tol);
    if (!search.jumped) break;
    double total = eval.rates_from(from, search.time, column);
    if (total <= 0.0) {
      // Hazard support ended inside the bisection window (for example a
      // zero-weight stretch); advance without jumping.
      t = search.time + time_tol;
      continue;
    }
    double u = uniform01(rng) * total;
    double acc = 0.0;
    config_t dest = -1, last_positive = -1;
    for (config_t c = 0; c < dec.num_configs(); ++c) {
      if (c == from) continue;
      if (column(c) > 0.0) last_positive = c;
      acc += column(c);
      if (u < acc) {
        dest = c;
        break;
      }
    }
    if (dest < 0) dest = last_positive;  // u landed on the roundoff tail
    if (dest < 0) {
      t = search.time + time_tol;
      continue;
    }
    if (search.time >= t_end) break;
    traj.records.push_back({search.time, dest});
    q = dest;
    t = search.time;
  }
  traj.zero_weight_events = eval.zero_weight_events();
  traj.hazard_evaluations = eval.evaluations();
  return traj;
}

EnsembleCounts sample_ensemble(const HermitianOperator& hamiltonian, const Decomposition& dec,
                               const StateVector& psi0, std::optional<config_t> q0, double t_end,
                               const std::vector<double>& record_times, long n_runs,
                               std::uint64_t master_seed, const SamplerControls& controls,
                               int n_threads) {
  if (n_runs < 1) throw invalid_input("sample_ensemble: n_runs must be >= 1");
  if (record_times.empty()) throw invalid_input("sample_ensemble: no record times");
  for (double rt : record_times)
    if (rt < 0 || rt > t_end) throw invalid_input("sample_ensemble: record time out of range");

  const int nt = static_cast<int>(record_times.size());
  const int nq = dec.num_configs();
  int workers = n_threads > 0 ? n_threads
                              : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<int>(std::min<long>(workers, n_runs));

  using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<CountMatrix> partial(workers, CountMatrix::Zero(nt, nq));
  std::vector<long> zero_events(workers, 0);
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::string failure_message;
  std::mutex failure_mutex;

  auto work = [&](int w) {
    try {
      for (long run = w; run < n_runs; run += workers) {
        Trajectory traj = sample_trajectory(hamiltonian, dec, psi0, q0, t_end,
                                            stream_seed(master_seed, run), controls);
        for (int i = 0; i < nt; ++i) partial[w](i, traj.config_at(record_times[i]))++;
        zero_events[w] += traj.zero_weight_events;
        if (failed.load(std::memory_order_relaxed)) return;
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      failed = true;
      failure_message = e.what();
    }
  };
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
  for (auto& th : pool) th.join();
  if (failed) throw numeric_failure("sample_ensemble: " + failure_message);

  EnsembleCounts out;
  out.times = record_times;
  out.counts = CountMatrix::Zero(nt, nq);
  for (int w = 0; w < workers; ++w) {
    out.counts += partial[w];
    out.zero_weight_events += zero_events[w];
  }
  out.n_runs = n_runs;
  return out;
}

std::vector<ProbabilityVector> master_equation_evolve(
    const HermitianOperator& hamiltonian, const Decomposition& dec, const StateVector& psi0,
    const ProbabilityVector& rho0, const std::vector<double>& t_grid, double ode_tol,
    const MasterEquationControls& controls) {
  if (rho0.size() != dec.num_configs())
    throw invalid_input("master_equation_evolve: rho0 size mismatch");
  if (t_grid.empty()) throw invalid_input("master_equation_evolve: empty time grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0 || (i > 0 && t_grid[i] <= t_grid[i - 1]))
      throw invalid_input("master_equation_evolve: t_grid must be increasing from 0");
  }

  namespace ode = boost::numeric::odeint;
  using state_type = std::vector<double>;
  const int nq = dec.num_configs();

  RateEvaluator eval(hamiltonian, dec, psi0);
  Eigen::MatrixXd rates(nq, nq);
  auto system = [&](const state_type& rho, state_type& drho, double t) {
    eval.rate_matrix_at(t, rates, controls.rate_cap);
    for (config_t q = 0; q < nq; ++q) {
      double gain = 0.0, loss = 0.0;
      for (config_t p = 0; p < nq; ++p) {
        gain += rates(q, p) * rho[p];
        loss += rates(p, q);
      }
      drho[q] = gain - loss * rho[q];
    }
  };

  state_type rho(rho0.weights().data(), rho0.weights().data() + nq);
  std::vector<ProbabilityVector> out;
  out.reserve(t_grid.size());
  auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<state_type>>(
      0.1 * ode_tol, 0.1 * ode_tol);

  double t = 0.0;
  long steps = 0;
  const double report_tol = std::max(ode_tol, 1e-12);
  try {
    for (double target : t_grid) {
      if (target > t) {
        double dt = std::min(0.05, target - t);
        steps += static_cast<long>(ode::integrate_adaptive(stepper, system, rho, t, target, dt));
        if (steps > controls.max_steps)
          throw numeric_failure("master_equation_evolve: step budget exhausted "
                                "(step-size underflow)");
        t = target;
      }
      Eigen::VectorXd w = Eigen::Map<Eigen::VectorXd>(rho.data(), nq);
      out.emplace_back(w, report_tol);
    }
  } catch (const numeric_failure&) {
    throw;
  } catch (const invalid_input& e) {
    throw numeric_failure(std::string("master_equation_evolve: normalization drifted "
                                      "beyond tolerance: ") + e.what());
  } catch (const std::exception& e) {
    throw numeric_failure(std::string("master_equation_evolve: integration failed: ") +
                          e.what());
  }
  return out;
}

}  // namespace beable
