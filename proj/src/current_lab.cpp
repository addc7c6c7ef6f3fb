// SPDX-License-Identifier: Apache-2.0
#include "beable/current_lab.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "beable/hilbert.hpp"
#include "beable/rng.hpp"

namespace beable {

CandidateId CandidateId::canonical(CandidateBase base, CandidatePart part) {
  CandidateId id;
  id.base = base;
  id.part = part;
  id.scale = (base == CandidateBase::guess1 && part == CandidatePart::real_part) ? 2.0 : 1.0;
  return id;
}

CandidateId CandidateId::parse(const std::string& text) {
  std::istringstream in(text);
  std::string base_str, part_str, scale_str;
  std::getline(in, base_str, ':');
  std::getline(in, part_str, ':');
  std::getline(in, scale_str, ':');
  CandidateBase base;
  if (base_str == "guess1")
    base = CandidateBase::guess1;
  else if (base_str == "guess2")
    base = CandidateBase::guess2;
  else
    throw invalid_input("CandidateId: unknown base '" + base_str + "'");
  CandidatePart part;
  if (part_str == "real" || part_str == "re")
    part = CandidatePart::real_part;
  else if (part_str == "imag" || part_str == "im")
    part = CandidatePart::imag_part;
  else
    throw invalid_input("CandidateId: unknown part '" + part_str + "'");
  CandidateId id = canonical(base, part);
  if (!scale_str.empty()) {
    try {
      id.scale = std::stod(scale_str);
    } catch (const std::exception&) {
      throw invalid_input("CandidateId: bad scale '" + scale_str + "'");
    }
  }
  return id;
}

std::string CandidateId::name() const {
  std::ostringstream out;
  out << (base == CandidateBase::guess1 ? "guess1" : "guess2") << ':'
      << (part == CandidatePart::real_part ? "real" : "imag") << ':' << scale;
  return out.str();
}

namespace {

// Base expression matrix B(q, q') for one candidate family member.
Eigen::MatrixXcd base_matrix(const Eigen::VectorXcd& psi, const Eigen::MatrixXcd& u,
                             const Decomposition& dec, CandidateBase base) {
  const int nq = dec.num_configs();
  const Eigen::VectorXcd chi = u * psi;  // U Psi
  Eigen::MatrixXcd b(nq, nq);
  Eigen::VectorXcd y(psi.size());
  for (config_t from = 0; from < nq; ++from) {
    // y = U P(q') Psi
    y.setZero();
    for (int i : dec.block(from)) y.noalias() += psi(i) * u.col(i);
    const Eigen::VectorXcd& bra = (base == CandidateBase::guess1) ? chi : psi;
    for (config_t to = 0; to < nq; ++to) {
      complex acc = 0.0;
      for (int i : dec.block(to)) acc += std::conj(bra(i)) * y(i);
      b(to, from) = acc;
    }
  }
  return b;
}

}  // namespace

CurrentMatrix candidate_current(const StateVector& psi, const UnitaryOperator& unitary,
                                const Decomposition& dec, const CandidateId& cand) {
  if (psi.dim() != dec.dim() || unitary.dim() != dec.dim())
    throw invalid_input("candidate_current: dimension mismatch");
  Eigen::MatrixXcd b = base_matrix(psi.amplitudes(), unitary.matrix(), dec, cand.base);
  Eigen::MatrixXd p =
      (cand.part == CandidatePart::real_part) ? b.real().eval() : b.imag().eval();
  Eigen::MatrixXd j = 0.5 * cand.scale * (p - p.transpose().eval());
  return CurrentMatrix(std::move(j));
}

ConditionReport check_conditions(const CurrentMatrix& current, const StateVector& psi,
                                 const UnitaryOperator& unitary, const Decomposition& dec,
                                 double tol) {
  if (current.num_configs() != dec.num_configs())
    throw invalid_input("check_conditions: current size does not match decomposition");
  if (psi.dim() != dec.dim() || unitary.dim() != dec.dim())
    throw invalid_input("check_conditions: dimension mismatch");
  const int nq = dec.num_configs();
  const Eigen::MatrixXd& j = current.entries();

  ConditionReport rep;
  rep.tolerance = tol;
  rep.cond1_max_imag = 0.0;  // real by construction of CurrentMatrix
  rep.cond2_max_asym = (j + j.transpose()).cwiseAbs().maxCoeff();

  Eigen::VectorXd w = born_distribution(psi, dec).weights();
  Eigen::VectorXd w_next =
      born_distribution(StateVector(unitary.matrix() * psi.amplitudes()), dec).weights();

  rep.cond3_excess.resize(nq);
  for (config_t from = 0; from < nq; ++from) {
    double outflow = 0.0;
    for (config_t to = 0; to < nq; ++to) outflow += std::max(j(to, from), 0.0);
    rep.cond3_excess(from) = outflow - w(from);
  }
  rep.cond4_residual.resize(nq);
  for (config_t q = 0; q < nq; ++q)
    rep.cond4_residual(q) = j.row(q).sum() - (w_next(q) - w(q));

  rep.passes[0] = rep.cond1_max_imag <= tol;
  rep.passes[1] = rep.cond2_max_asym <= tol;
  rep.passes[2] = rep.cond3_max_excess() <= tol;
  rep.passes[3] = rep.cond4_max_residual() <= tol;
  return rep;
}

TransitionMatrix transition_from_current(const CurrentMatrix& current, const StateVector& psi,
                                         const Decomposition& dec) {
  if (current.num_configs() != dec.num_configs() || psi.dim() != dec.dim())
    throw invalid_input("transition_from_current: dimension mismatch");
  const int nq = dec.num_configs();
  const Eigen::MatrixXd& j = current.entries();
  Eigen::VectorXd w = born_distribution(psi, dec).weights();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(nq, nq);
  for (config_t from = 0; from < nq; ++from) {
    double outflow = 0.0;
    for (config_t to = 0; to < nq; ++to) outflow += std::max(j(to, from), 0.0);
    if (w(from) < kEpsWeight) {
      if (outflow > kEpsWeight) {
        std::ostringstream msg;
        msg << "transition_from_current: column bound violated at configuration " << from
            << " (excess mass " << outflow << " over zero weight)";
        throw numeric_failure(msg.str());
      }
      t(from, from) = 1.0;
      continue;
    }
    double stay = 1.0 - outflow / w(from);
    if (stay < -kColumnSumTol) {
      std::ostringstream msg;
      msg << "transition_from_current: column bound violated at configuration " << from
          << " (excess mass " << (outflow - w(from)) << ")";
      throw numeric_failure(msg.str());
    }
    for (config_t to = 0; to < nq; ++to)
      if (to != from) t(to, from) = std::max(j(to, from), 0.0) / w(from);
    t(from, from) = std::max(stay, 0.0);
  }
  return TransitionMatrix(std::move(t));
}

ViolationScanResult violation_scan(int dim, const Decomposition& dec,
                                   std::pair<config_t, config_t> q_pair,
                                   const CandidateId& candidate, int n_samples,
                                   std::uint64_t seed, double tol,
                                   const std::optional<UnitaryOperator>& fixed_unitary) {
  if (dim < 2) throw invalid_input("violation_scan: dimension must be >= 2");
  if (dec.dim() != dim) throw invalid_input("violation_scan: decomposition dimension mismatch");
  const int nq = dec.num_configs();
  if (q_pair.first < 0 || q_pair.first >= nq || q_pair.second < 0 || q_pair.second >= nq ||
      q_pair.first == q_pair.second)
    throw invalid_input("violation_scan: bad configuration pair");
  if (n_samples < 1) throw invalid_input("violation_scan: n_samples must be >= 1");

  ViolationScanResult res;
  res.n_samples = n_samples;
  res.seed = seed;
  res.candidate = candidate;
  res.q_pair = q_pair;
  res.tolerance = tol;
  res.per_column_violations.assign(nq, 0);

  auto rng = make_engine(seed);
  for (int k = 0; k < n_samples; ++k) {
    UnitaryOperator u = fixed_unitary ? *fixed_unitary : haar_random_unitary(dim, rng);
    StateVector psi = random_state(dim, rng);
    CurrentMatrix j = candidate_current(psi, u, dec, candidate);
    ConditionReport rep = check_conditions(j, psi, u, dec, tol);
    if (!rep.passes[0]) ++res.cond1_failures;
    if (!rep.passes[1]) ++res.cond2_failures;
    if (!rep.passes[3]) ++res.cond4_failures;
    bool any = false, pair = false;
    for (config_t q = 0; q < nq; ++q) {
      if (rep.cond3_excess(q) > tol) {
        ++res.per_column_violations[q];
        any = true;
        if (q == q_pair.first || q == q_pair.second) pair = true;
      }
    }
    double worst_excess = rep.cond3_max_excess();
    if (!any && worst_excess > 1e-12 && worst_excess <= tol) ++res.borderline_count;
    if (any) ++res.any_violations;
    if (pair) ++res.pair_violations;
    double source_excess = rep.cond3_excess(q_pair.second);
    if (source_excess > tol) {
      ++res.source_column_violations;
      res.worst.push_back({k, q_pair.second, source_excess});
    }
  }
  std::sort(res.worst.begin(), res.worst.end(),
            [](const auto& a, const auto& b) { return a.excess > b.excess; });
  if (res.worst.size() > 10) res.worst.resize(10);
  return res;
}

}  // namespace beable
