// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_TYPES_HPP
#define BEABLE_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace beable {

using complex = std::complex<double>;
using config_t = int;

// Validation tolerances shared across the library.
inline constexpr double kNormTol = 1e-12;
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-12;
inline constexpr double kAntisymTol = 1e-12;
inline constexpr double kColumnSumTol = 1e-10;
// Born weights below this are treated as unoccupied (rates defined as zero).
inline constexpr double kEpsWeight = 1e-12;

/// Rejected input: a precondition on arguments does not hold.
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numeric failure: an algorithm could not reach its accuracy contract.
class numeric_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Normalized complex amplitude vector over a d-dimensional Hilbert space.
class StateVector {
 public:
  explicit StateVector(Eigen::VectorXcd amplitudes);

  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  int dim() const { return static_cast<int>(amplitudes_.size()); }

 private:
  Eigen::VectorXcd amplitudes_;
};

/// Partition of the basis index set {0,...,d-1} into disjoint nonempty
/// blocks, one block per configuration.
class Decomposition {
 public:
  Decomposition(int dim, std::vector<std::vector<int>> blocks,
                std::vector<std::string> labels = {});

  /// One singleton block per basis index.
  static Decomposition singletons(int dim);

  int dim() const { return dim_; }
  int num_configs() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& block(config_t q) const { return blocks_.at(q); }
  config_t config_of_index(int i) const { return index_to_config_.at(i); }
  const std::string& label(config_t q) const { return labels_.at(q); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  int dim_;
  std::vector<std::vector<int>> blocks_;
  std::vector<std::string> labels_;
  std::vector<config_t> index_to_config_;
};

/// d x d complex matrix equal to its conjugate transpose (units 1/time, hbar = 1).
class HermitianOperator {
 public:
  explicit HermitianOperator(Eigen::MatrixXcd matrix);

  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

 private:
  Eigen::MatrixXcd matrix_;
};

/// d x d complex matrix with U U^dagger = I.
class UnitaryOperator {
 public:
  explicit UnitaryOperator(Eigen::MatrixXcd matrix);

  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

 private:
  Eigen::MatrixXcd matrix_;
};

/// Real vector indexed by configurations: entries >= 0, sum 1 within tol.
/// Entries in [-tol, 0) are clamped to zero at construction.
class ProbabilityVector {
 public:
  explicit ProbabilityVector(Eigen::VectorXd weights, double tol = kNormTol);

  const Eigen::VectorXd& weights() const { return weights_; }
  int size() const { return static_cast<int>(weights_.size()); }
  double operator()(config_t q) const { return weights_(q); }

 private:
  Eigen::VectorXd weights_;
};

}  // namespace beable

#endif
