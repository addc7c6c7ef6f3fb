// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_HILBERT_HPP
#define BEABLE_HILBERT_HPP

#include <cstdint>
#include <random>

#include "beable/types.hpp"

namespace beable {

/// Born weights <Psi|P(q)|Psi> of a state over a decomposition.
ProbabilityVector born_distribution(const StateVector& psi, const Decomposition& dec);

/// Exact propagation e^{-iHt} via a cached eigendecomposition of H.
///
/// Immutable after construction; state_at is safe to call from many threads
/// when each caller supplies its own output buffer.
class Propagator {
 public:
  Propagator(const HermitianOperator& hamiltonian, const StateVector& psi0);

  int dim() const { return static_cast<int>(energies_.size()); }
  /// Psi_t = W e^{-iEt} W^dagger Psi_0 written into out (resized as needed).
  void state_at(double t, Eigen::VectorXcd& out) const;
  /// Allocation-free variant for hot loops; scratch is caller-owned.
  void state_at(double t, Eigen::VectorXcd& phase_scratch, Eigen::VectorXcd& out) const;
  Eigen::VectorXcd state_at(double t) const;

  const Eigen::MatrixXcd& eigenvectors() const { return basis_; }
  const Eigen::VectorXd& eigenvalues() const { return energies_; }

 private:
  Eigen::MatrixXcd basis_;       // W, columns orthonormal
  Eigen::VectorXd energies_;     // E
  Eigen::VectorXcd coeffs_;      // W^dagger Psi_0
};

/// e^{-iHt} Psi_0, exact up to floating point (eigendecomposition of H).
StateVector evolve_continuous(const HermitianOperator& hamiltonian,
                              const StateVector& psi0, double t);

/// U Psi.
StateVector evolve_discrete(const UnitaryOperator& unitary, const StateVector& psi);

/// The unitary e^{-iHt}.
UnitaryOperator evolution_operator(const HermitianOperator& hamiltonian, double t);

/// Orthonormal eigenbasis of a unitary (Schur factorization; valid for
/// degenerate eigenvalues). values are unimodular.
struct UnitaryEigensystem {
  Eigen::MatrixXcd vectors;
  Eigen::VectorXcd values;
};
UnitaryEigensystem diagonalize_unitary(const UnitaryOperator& unitary);

/// The unique Hermitian H with e^{-i tau H} = U and spectrum in
/// (-pi/tau, pi/tau]; eigenphase -1 maps to +pi/tau. Throws numeric_failure
/// if the reconstruction residual exceeds 1e-12.
HermitianOperator principal_log_hamiltonian(const UnitaryOperator& unitary, double tau);

/// Haar-distributed unitary: QR of a complex Gaussian matrix with
/// phase-normalized R diagonal. Deterministic given the seed.
UnitaryOperator haar_random_unitary(int dim, std::uint64_t seed);
UnitaryOperator haar_random_unitary(int dim, std::mt19937_64& engine);

/// Uniform state on the unit sphere (normalized complex Gaussian vector).
StateVector random_state(int dim, std::uint64_t seed);
StateVector random_state(int dim, std::mt19937_64& engine);

/// GUE-normalized random Hermitian matrix (test-system generator).
HermitianOperator random_hermitian(int dim, std::uint64_t seed);
HermitianOperator random_hermitian(int dim, std::mt19937_64& engine);

}  // namespace beable

#endif
