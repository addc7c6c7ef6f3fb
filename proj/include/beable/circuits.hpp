// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_CIRCUITS_HPP
#define BEABLE_CIRCUITS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "beable/discrete.hpp"
#include "beable/types.hpp"

namespace beable {

/// Single-qubit unitary or CNOT. Qubit 0 is the least significant bit of the
/// configuration label.
struct Gate {
  enum class Kind { single, cnot };
  Kind kind = Kind::single;
  int target = 0;
  int control = -1;          // CNOT only
  Eigen::Matrix2cd matrix;   // single-qubit only
  std::string name;          // X, Y, Z, H, S, T, u, cnot

  static Gate single(const std::string& name, const Eigen::Matrix2cd& m, int target);
  /// Named 2x2 gates: X, Y, Z, H, S, T.
  static Gate named(const std::string& name, int target);
  static Gate cnot(int control, int target);
};

struct Circuit {
  int n_qubits = 0;
  std::vector<Gate> gates;

  Circuit(int n_qubits, std::vector<Gate> gates);
  int dim() const { return 1 << n_qubits; }

  /// Line format: `qubits N`; `g <name> q <k>`;
  /// `g u a_re a_im b_re b_im c_re c_im d_re d_im q <k>`; `cnot <control> <target>`;
  /// `#` starts a comment.
  static Circuit parse(std::istream& in);
  static Circuit load(const std::string& path);
  std::string to_text() const;
};

/// Partition of configuration labels into pairs and singlets, stored as an
/// involution: partner(q) == q marks a singlet.
class PairPartition {
 public:
  explicit PairPartition(std::vector<config_t> partner);

  int size() const { return static_cast<int>(partner_.size()); }
  config_t partner(config_t q) const { return partner_.at(q); }
  bool is_singlet(config_t q) const { return partner_.at(q) == q; }
  bool same_subset(config_t a, config_t b) const { return a == b || partner_.at(a) == b; }
  std::vector<std::vector<config_t>> subsets() const;

 private:
  std::vector<config_t> partner_;
};

/// Configuration pairs coupled by a gate: a single-qubit gate on qubit k pairs
/// labels differing in bit k; CNOT pairs {x, x^(1<<target)} where the control
/// bit of x is set and leaves the rest singlets.
PairPartition gate_partition(const Gate& gate, int n_qubits);

struct PairwiseCheck {
  bool ok = false;
  double max_off_partition = 0.0;
};

/// True iff |P(q) U P(q')| <= tol whenever q, q' lie in different subsets.
/// dec must be the computational-basis singleton decomposition.
PairwiseCheck verify_pairwise(const UnitaryOperator& unitary, const PairPartition& partition,
                              const Decomposition& dec, double tol = 1e-12);

/// Full 2^n x 2^n unitary of one gate.
UnitaryOperator full_unitary(const Gate& gate, int n_qubits);

/// Apply a gate to a statevector in place.
void apply_gate(Eigen::VectorXcd& psi, const Gate& gate, int n_qubits);

struct CircuitRunResult {
  DiscreteTrajectory trajectory;  // configuration before the circuit and after each gate
  StateVector final_state;
  long zero_weight_events = 0;
};

/// Sample one beable trajectory through a circuit: per gate, the occupied
/// pair undergoes the minimal two-state update, singlets stay put, then the
/// state advances by the gate. q0 empty samples the start from Born(psi0).
CircuitRunResult run_circuit_trajectory(const Circuit& circuit, const StateVector& psi0,
                                        std::optional<config_t> q0, std::uint64_t seed);

/// Precomputed per-gate jump tables for fast trajectory ensembles. The
/// statevector sweep, pairwise verification, and Born weights are shared by
/// all runs; run() reproduces run_circuit_trajectory draw for draw.
class CircuitProcess {
 public:
  CircuitProcess(const Circuit& circuit, const StateVector& psi0);

  int n_gates() const { return static_cast<int>(p_jump_.size()); }
  int dim() const { return dim_; }
  /// Born weights after the first g gates (g = 0 ... n_gates).
  const Eigen::VectorXd& born_after(int g) const { return born_.at(g); }
  const Eigen::VectorXcd& state_after(int g) const { return states_.at(g); }

  /// One trajectory; writes configs (n_gates + 1 entries) and returns the
  /// number of zero-weight events encountered.
  long run(std::optional<config_t> q0, std::mt19937_64& rng,
           std::vector<config_t>& configs) const;

  /// Independent trajectories counted after every gate prefix;
  /// counts(g, q) over runs, run k seeded with stream_seed(master_seed, k).
  EnsembleCounts ensemble(long n_runs, std::uint64_t master_seed, int n_threads = 0) const;

 private:
  int dim_ = 0;
  std::vector<Eigen::VectorXcd> states_;
  std::vector<Eigen::VectorXd> born_;
  std::vector<std::vector<config_t>> partner_;
  std::vector<Eigen::VectorXd> p_jump_;
};

/// Random circuit over the gate set {H, X, T, CNOT} (test/experiment helper).
Circuit random_circuit(int n_qubits, int n_gates, std::mt19937_64& rng);

}  // namespace beable

#endif
