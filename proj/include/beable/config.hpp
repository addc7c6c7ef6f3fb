// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_CONFIG_HPP
#define BEABLE_CONFIG_HPP

#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "beable/bell_process.hpp"
#include "beable/current_lab.hpp"
#include "beable/types.hpp"

namespace beable::harness {

using json = nlohmann::json;

/// Complex entries are [re, im] pairs; matrices are arrays of rows.
Eigen::MatrixXcd json_to_cmatrix(const json& j);
Eigen::VectorXcd json_to_cvector(const json& j);
json cmatrix_to_json(const Eigen::MatrixXcd& m);
json cvector_to_json(const Eigen::VectorXcd& v);

/// The quantum system an experiment runs on. A Hamiltonian can be given by
/// entries or the preset "rabi"; a unitary by entries or the preset "haar"
/// (seeded); each can also be derived from the other through tau
/// (exponential / principal logarithm).
struct SystemSpec {
  int dimension = 0;
  std::optional<Eigen::MatrixXcd> hamiltonian;
  std::optional<Eigen::MatrixXcd> unitary;
  std::optional<double> tau;
  std::vector<std::vector<int>> blocks;  // empty selects singletons
  std::optional<Eigen::VectorXcd> initial_state;

  Decomposition decomposition() const;
  HermitianOperator resolve_hamiltonian() const;
  UnitaryOperator resolve_unitary() const;
  StateVector resolve_initial_state() const;
};

struct CheckThresholds {
  double tv_max = 0.01;
  double z_max = 3.0;
  double p_min = 1e-3;
  double identity_tol = 1e-9;
  std::pair<double, double> violation_range{0.01, 0.15};
  std::pair<double, double> ratio_range{0.35, 0.65};
};

struct ExperimentConfig {
  std::string kind;  // bell | restricted | two-state | iid | circuit | violation-scan | convergence
  SystemSpec system;

  double t_end = 0.0;
  std::vector<double> record_times;
  int steps = 0;
  std::vector<double> taus;
  long n_runs = 1;
  std::uint64_t seed = 0;
  std::optional<config_t> start;  // empty = Born-distributed start
  int n_samples = 1000;
  std::pair<config_t, config_t> q_pair{1, 0};  // (destination, source)
  CandidateId candidate = CandidateId::canonical(CandidateBase::guess1,
                                                 CandidatePart::real_part);
  std::string circuit_file;
  double t_start = 0.0;

  SamplerControls sampler;
  double ode_tol = 1e-9;
  int series_n_max = 3;
  double series_quad_tol = 1e-9;

  CheckThresholds check;
  std::string out_dir = ".";

  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig from_file(const std::string& path);
  /// Full round-trippable record of this configuration (embedded in summaries).
  json resolved() const;

 private:
  static ExperimentConfig from_json_checked(const json& j);
};

}  // namespace beable::harness

#endif
