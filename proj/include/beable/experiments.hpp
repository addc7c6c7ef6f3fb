// SPDX-License-Identifier: Apache-2.0
#ifndef BEABLE_EXPERIMENTS_HPP
#define BEABLE_EXPERIMENTS_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "beable/config.hpp"

namespace beable::harness {

struct ExperimentOutcome {
  json summary;
  bool check_pass = true;
  std::vector<std::string> failures;
  std::string summary_path;
  std::string table_path;
};

/// Execute one experiment, writing its table (CSV) and summary (JSON) into
/// cfg.out_dir. Throws invalid_input for configuration problems and
/// numeric_failure for numerical ones.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

/// CLI wrapper: 0 success, 2 configuration error, 3 numeric failure,
/// 4 check-threshold breach (with check enabled).
int run_experiment_cli(const ExperimentConfig& cfg, bool check, std::ostream& out,
                       std::ostream& err);

}  // namespace beable::harness

#endif
