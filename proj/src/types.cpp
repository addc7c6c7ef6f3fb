// SPDX-License-Identifier: Apache-2.0
#include "beable/types.hpp"

#include <algorithm>

namespace beable {

StateVector::StateVector(Eigen::VectorXcd amplitudes)
    : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() < 1) throw invalid_input("StateVector: dimension must be >= 1");
  double norm = amplitudes_.norm();
  if (std::abs(norm - 1.0) > kNormTol)
    throw invalid_input("StateVector: norm " + std::to_string(norm) +
                        " deviates from 1 beyond tolerance");
}

Decomposition::Decomposition(int dim, std::vector<std::vector<int>> blocks,
                             std::vector<std::string> labels)
    : dim_(dim), blocks_(std::move(blocks)), labels_(std::move(labels)) {
  if (dim_ < 1) throw invalid_input("Decomposition: dimension must be >= 1");
  if (blocks_.empty()) throw invalid_input("Decomposition: needs at least one block");
  index_to_config_.assign(dim_, -1);
  int covered = 0;
  for (config_t q = 0; q < static_cast<config_t>(blocks_.size()); ++q) {
    if (blocks_[q].empty()) throw invalid_input("Decomposition: empty block");
    for (int i : blocks_[q]) {
      if (i < 0 || i >= dim_) throw invalid_input("Decomposition: index out of range");
      if (index_to_config_[i] != -1)
        throw invalid_input("Decomposition: blocks are not disjoint");
      index_to_config_[i] = q;
      ++covered;
    }
  }
  if (covered != dim_)
    throw invalid_input("Decomposition: blocks do not cover all basis indices");
  if (labels_.empty()) {
    labels_.reserve(blocks_.size());
    for (std::size_t q = 0; q < blocks_.size(); ++q) labels_.push_back(std::to_string(q));
  } else if (labels_.size() != blocks_.size()) {
    throw invalid_input("Decomposition: one label per block required");
  }
}

Decomposition Decomposition::singletons(int dim) {
  std::vector<std::vector<int>> blocks(dim);
  for (int i = 0; i < dim; ++i) blocks[i] = {i};
  return Decomposition(dim, std::move(blocks));
}

HermitianOperator::HermitianOperator(Eigen::MatrixXcd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1)
    throw invalid_input("HermitianOperator: matrix must be square and nonempty");
  double dev = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (dev > kHermitianTol)
    throw invalid_input("HermitianOperator: |H - H^dagger| = " + std::to_string(dev) +
                        " exceeds tolerance");
}

UnitaryOperator::UnitaryOperator(Eigen::MatrixXcd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1)
    throw invalid_input("UnitaryOperator: matrix must be square and nonempty");
  Eigen::MatrixXcd gram = matrix_ * matrix_.adjoint();
  gram -= Eigen::MatrixXcd::Identity(matrix_.rows(), matrix_.cols());
  double dev = gram.cwiseAbs().maxCoeff();
  if (dev > kUnitaryTol)
    throw invalid_input("UnitaryOperator: |U U^dagger - I| = " + std::to_string(dev) +
                        " exceeds tolerance");
}

ProbabilityVector::ProbabilityVector(Eigen::VectorXd weights, double tol)
    : weights_(std::move(weights)) {
  if (weights_.size() < 1) throw invalid_input("ProbabilityVector: empty");
  for (int i = 0; i < weights_.size(); ++i) {
    if (weights_(i) < -tol)
      throw invalid_input("ProbabilityVector: negative entry " + std::to_string(weights_(i)));
    weights_(i) = std::max(weights_(i), 0.0);
  }
  double sum = weights_.sum();
  if (std::abs(sum - 1.0) > tol)
    throw invalid_input("ProbabilityVector: sum " + std::to_string(sum) +
                        " deviates from 1 beyond tolerance " + std::to_string(tol));
}

}  // namespace beable
