// SPDX-License-Identifier: Apache-2.0
#include "beable/hilbert.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>

#include "beable/rng.hpp"

namespace beable {

ProbabilityVector born_distribution(const StateVector& psi, const Decomposition& dec) {
  if (psi.dim() != dec.dim())
    throw invalid_input("born_distribution: state dimension " + std::to_string(psi.dim()) +
                        " does not match decomposition dimension " + std::to_string(dec.dim()));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dec.num_configs());
  const auto& amp = psi.amplitudes();
  for (config_t q = 0; q < dec.num_configs(); ++q)
    for (int i : dec.block(q)) w(q) += std::norm(amp(i));
  w /= w.sum();  // absorb norm roundoff; exact no-op for unit norm
  return ProbabilityVector(std::move(w));
}

Propagator::Propagator(const HermitianOperator& hamiltonian, const StateVector& psi0) {
  if (hamiltonian.dim() != psi0.dim())
    throw invalid_input("Propagator: dimension mismatch between H and state");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hamiltonian.matrix());
  if (es.info() != Eigen::Success)
    throw numeric_failure("Propagator: eigendecomposition of H failed");
  basis_ = es.eigenvectors();
  energies_ = es.eigenvalues();
  coeffs_ = basis_.adjoint() * psi0.amplitudes();
}

void Propagator::state_at(double t, Eigen::VectorXcd& out) const {
  Eigen::VectorXcd scratch;
  state_at(t, scratch, out);
}

void Propagator::state_at(double t, Eigen::VectorXcd& phase_scratch,
                          Eigen::VectorXcd& out) const {
  const int d = dim();
  phase_scratch.resize(d);
  out.resize(d);
  // out = W * (e^{-iEt} .* c)
  for (int j = 0; j < d; ++j)
    phase_scratch(j) = std::polar(1.0, -energies_(j) * t) * coeffs_(j);
  out.noalias() = basis_ * phase_scratch;
}

Eigen::VectorXcd Propagator::state_at(double t) const {
  Eigen::VectorXcd out;
  state_at(t, out);
  return out;
}

StateVector evolve_continuous(const HermitianOperator& hamiltonian,
                              const StateVector& psi0, double t) {
  Propagator prop(hamiltonian, psi0);
  return StateVector(prop.state_at(t));
}

StateVector evolve_discrete(const UnitaryOperator& unitary, const StateVector& psi) {
  if (unitary.dim() != psi.dim())
    throw invalid_input("evolve_discrete: dimension mismatch");
  return StateVector(unitary.matrix() * psi.amplitudes());
}

UnitaryOperator evolution_operator(const HermitianOperator& hamiltonian, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hamiltonian.matrix());
  if (es.info() != Eigen::Success)
    throw numeric_failure("evolution_operator: eigendecomposition of H failed");
  const int d = hamiltonian.dim();
  Eigen::VectorXcd phases(d);
  for (int j = 0; j < d; ++j) phases(j) = std::polar(1.0, -es.eigenvalues()(j) * t);
  return UnitaryOperator(es.eigenvectors() * phases.asDiagonal() *
                         es.eigenvectors().adjoint());
}

UnitaryEigensystem diagonalize_unitary(const UnitaryOperator& unitary) {
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(unitary.matrix());
  if (schur.info() != Eigen::Success)
    throw numeric_failure("diagonalize_unitary: Schur factorization failed");
  UnitaryEigensystem sys;
  sys.vectors = schur.matrixU();
  sys.values = schur.matrixT().diagonal();
  // Unitary input: T is diagonal up to roundoff; snap eigenvalues onto the circle.
  for (int j = 0; j < sys.values.size(); ++j) sys.values(j) /= std::abs(sys.values(j));
  return sys;
}

HermitianOperator principal_log_hamiltonian(const UnitaryOperator& unitary, double tau) {
  if (!(tau > 0)) throw invalid_input("principal_log_hamiltonian: tau must be > 0");
  UnitaryEigensystem sys = diagonalize_unitary(unitary);
  const int d = unitary.dim();
  Eigen::VectorXd h(d);
  for (int j = 0; j < d; ++j) {
    // lambda = e^{-i tau h}; arg in (-pi, pi], so theta = -arg lands in
    // [-pi, pi). Remap the boundary so h lies in (-pi/tau, pi/tau].
    double theta = -std::arg(sys.values(j));
    if (theta <= -M_PI) theta = M_PI;
    h(j) = theta / tau;
  }
  Eigen::MatrixXcd hm = sys.vectors * h.asDiagonal() * sys.vectors.adjoint();
  hm = 0.5 * (hm + hm.adjoint().eval());
  HermitianOperator result{hm};
  double residual =
      (evolution_operator(result, tau).matrix() - unitary.matrix()).cwiseAbs().maxCoeff();
  if (residual > 1e-12)
    throw numeric_failure("principal_log_hamiltonian: reconstruction residual " +
                          std::to_string(residual) + " exceeds 1e-12");
  return result;
}

UnitaryOperator haar_random_unitary(int dim, std::mt19937_64& engine) {
  if (dim < 1) throw invalid_input("haar_random_unitary: dimension must be >= 1");
  Eigen::MatrixXcd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      a(i, j) = complex(standard_normal(engine), standard_normal(engine));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  Eigen::MatrixXcd q = qr.householderQ();
  Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    complex rjj = r(j, j);
    q.col(j) *= rjj / std::abs(rjj);
  }
  return UnitaryOperator(std::move(q));
}

UnitaryOperator haar_random_unitary(int dim, std::uint64_t seed) {
  auto engine = make_engine(seed);
  return haar_random_unitary(dim, engine);
}

StateVector random_state(int dim, std::mt19937_64& engine) {
  if (dim < 1) throw invalid_input("random_state: dimension must be >= 1");
  Eigen::VectorXcd v(dim);
  for (int i = 0; i < dim; ++i)
    v(i) = complex(standard_normal(engine), standard_normal(engine));
  v.normalize();
  return StateVector(std::move(v));
}

StateVector random_state(int dim, std::uint64_t seed) {
  auto engine = make_engine(seed);
  return random_state(dim, engine);
}

HermitianOperator random_hermitian(int dim, std::mt19937_64& engine) {
  if (dim < 1) throw invalid_input("random_hermitian: dimension must be >= 1");
  Eigen::MatrixXcd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      a(i, j) = complex(standard_normal(engine), standard_normal(engine));
  return HermitianOperator(0.5 * (a + a.adjoint().eval()));
}

HermitianOperator random_hermitian(int dim, std::uint64_t seed) {
  auto engine = make_engine(seed);
  return random_hermitian(dim, engine);
}

}  // namespace beable
