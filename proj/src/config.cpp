// SPDX-License-Identifier: Apache-2.0
#include "beable/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "beable/hilbert.hpp"

namespace beable::harness {

Eigen::MatrixXcd json_to_cmatrix(const json& j) {
  if (!j.is_array() || j.empty()) throw invalid_input("config: matrix entries must be rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXcd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols)
      throw invalid_input("config: ragged matrix entries");
    for (int c = 0; c < cols; ++c) {
      const json& e = j[r][c];
      if (!e.is_array() || e.size() != 2)
        throw invalid_input("config: complex entry must be [re, im]");
      m(r, c) = complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

Eigen::VectorXcd json_to_cvector(const json& j) {
  if (!j.is_array() || j.empty()) throw invalid_input("config: vector entries required");
  Eigen::VectorXcd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    if (!e.is_array() || e.size() != 2)
      throw invalid_input("config: complex entry must be [re, im]");
    v(i) = complex(e[0].get<double>(), e[1].get<double>());
  }
  return v;
}

json cmatrix_to_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

json cvector_to_json(const Eigen::VectorXcd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

Decomposition SystemSpec::decomposition() const {
  if (dimension < 1) throw invalid_input("config: system dimension must be >= 1");
  if (blocks.empty()) return Decomposition::singletons(dimension);
  return Decomposition(dimension, blocks);
}

HermitianOperator SystemSpec::resolve_hamiltonian() const {
  if (hamiltonian) return HermitianOperator(*hamiltonian);
  if (unitary && tau) return principal_log_hamiltonian(UnitaryOperator(*unitary), *tau);
  throw invalid_input("config: experiment needs a hamiltonian (or unitary plus tau)");
}

UnitaryOperator SystemSpec::resolve_unitary() const {
  if (unitary) return UnitaryOperator(*unitary);
  if (hamiltonian && tau)
    return evolution_operator(HermitianOperator(*hamiltonian), *tau);
  throw invalid_input("config: experiment needs a unitary (or hamiltonian plus tau)");
}

StateVector SystemSpec::resolve_initial_state() const {
  if (!initial_state) throw invalid_input("config: experiment needs an initial state");
  return StateVector(*initial_state);
}

namespace {

// Accept integer-valued floats (users write 1e5 for run counts).
long get_long(const json& j, const char* key, long fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long>();
  if (v.is_number_float()) {
    double x = v.get<double>();
    long rounded = std::llround(x);
    if (std::abs(x - static_cast<double>(rounded)) > 1e-9)
      throw invalid_input(std::string("config: ") + key + " must be an integer");
    return rounded;
  }
  throw invalid_input(std::string("config: ") + key + " must be a number");
}

Eigen::MatrixXcd parse_hamiltonian(const json& j, int& dimension) {
  if (j.contains("preset")) {
    std::string preset = j["preset"].get<std::string>();
    if (preset == "rabi") {
      if (dimension == 0) dimension = 2;
      if (dimension != 2) throw invalid_input("config: rabi preset needs dimension 2");
      Eigen::MatrixXcd h(2, 2);
      h << 0, 1, 1, 0;
      return h;
    }
    throw invalid_input("config: unknown hamiltonian preset '" + preset + "'");
  }
  Eigen::MatrixXcd m = json_to_cmatrix(j.at("entries"));
  if (dimension == 0) dimension = static_cast<int>(m.rows());
  return m;
}

Eigen::MatrixXcd parse_unitary(const json& j, int& dimension) {
  if (j.contains("preset")) {
    std::string preset = j["preset"].get<std::string>();
    if (preset == "haar") {
      if (dimension == 0) throw invalid_input("config: haar preset needs a dimension");
      std::uint64_t seed = j.value("seed", 0ULL);
      return haar_random_unitary(dimension, seed).matrix();
    }
    throw invalid_input("config: unknown unitary preset '" + preset + "'");
  }
  Eigen::MatrixXcd m = json_to_cmatrix(j.at("entries"));
  if (dimension == 0) dimension = static_cast<int>(m.rows());
  return m;
}

Eigen::VectorXcd parse_state(const json& j, int dimension) {
  if (j.contains("preset")) {
    std::string preset = j["preset"].get<std::string>();
    if (preset == "basis") {
      int index = j.value("index", 0);
      if (dimension < 1) throw invalid_input("config: basis state needs a dimension");
      if (index < 0 || index >= dimension)
        throw invalid_input("config: basis state index out of range");
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dimension);
      v(index) = 1.0;
      return v;
    }
    if (preset == "random") {
      if (dimension < 1) throw invalid_input("config: random state needs a dimension");
      return random_state(dimension, j.value("seed", 0ULL)).amplitudes();
    }
    throw invalid_input("config: unknown state preset '" + preset + "'");
  }
  return json_to_cvector(j.at("entries"));
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  try {
    return from_json_checked(j);
  } catch (const json::exception& e) {
    throw invalid_input(std::string("config: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::from_json_checked(const json& j) {
  ExperimentConfig cfg;
  cfg.kind = j.at("kind").get<std::string>();
  static const std::vector<std::string> kinds = {
      "bell", "restricted", "two-state", "iid", "circuit", "violation-scan", "convergence"};
  if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
    throw invalid_input("config: unknown experiment kind '" + cfg.kind + "'");

  if (j.contains("system")) {
    const json& s = j["system"];
    cfg.system.dimension = s.value("dimension", 0);
    if (s.contains("hamiltonian"))
      cfg.system.hamiltonian = parse_hamiltonian(s["hamiltonian"], cfg.system.dimension);
    if (s.contains("unitary"))
      cfg.system.unitary = parse_unitary(s["unitary"], cfg.system.dimension);
    if (s.contains("tau")) cfg.system.tau = s["tau"].get<double>();
    if (s.contains("blocks"))
      cfg.system.blocks = s["blocks"].get<std::vector<std::vector<int>>>();
    if (s.contains("initial_state"))
      cfg.system.initial_state = parse_state(s["initial_state"], cfg.system.dimension);
  }

  if (j.contains("run")) {
    const json& r = j["run"];
    cfg.t_end = r.value("t_end", 0.0);
    if (r.contains("record_times"))
      cfg.record_times = r["record_times"].get<std::vector<double>>();
    cfg.steps = static_cast<int>(get_long(r, "steps", 0));
    if (r.contains("taus")) cfg.taus = r["taus"].get<std::vector<double>>();
    if (r.contains("tau")) cfg.system.tau = r["tau"].get<double>();
    cfg.n_runs = get_long(r, "n_runs", 1);
    cfg.seed = static_cast<std::uint64_t>(get_long(r, "seed", 0));
    if (r.contains("start")) {
      const json& st = r["start"];
      if (st.is_string()) {
        if (st.get<std::string>() != "born")
          throw invalid_input("config: start must be a configuration index or \"born\"");
      } else {
        cfg.start = st.get<config_t>();
      }
    }
    cfg.n_samples = static_cast<int>(get_long(r, "n_samples", 1000));
    if (r.contains("q_pair")) {
      auto p = r["q_pair"].get<std::vector<config_t>>();
      if (p.size() != 2) throw invalid_input("config: q_pair needs two configurations");
      cfg.q_pair = {p[0], p[1]};
    }
    cfg.t_start = r.value("t_start", 0.0);
  }

  if (j.contains("candidate")) {
    const json& c = j["candidate"];
    if (c.is_string()) {
      cfg.candidate = CandidateId::parse(c.get<std::string>());
    } else {
      std::string base = c.value("base", "guess1");
      std::string part = c.value("part", "real");
      cfg.candidate = CandidateId::parse(base + ":" + part);
      if (c.contains("scale")) cfg.candidate.scale = c["scale"].get<double>();
    }
  }
  cfg.circuit_file = j.value("circuit_file", std::string());

  if (j.contains("controls")) {
    const json& c = j["controls"];
    cfg.sampler.hazard_rel_tol = c.value("hazard_rel_tol", cfg.sampler.hazard_rel_tol);
    cfg.sampler.time_tol = c.value("time_tol", cfg.sampler.time_tol);
    cfg.ode_tol = c.value("ode_tol", cfg.ode_tol);
    cfg.series_n_max = c.value("series_n_max", cfg.series_n_max);
    cfg.series_quad_tol = c.value("series_quad_tol", cfg.series_quad_tol);
  }

  if (j.contains("check")) {
    const json& c = j["check"];
    cfg.check.tv_max = c.value("tv_max", cfg.check.tv_max);
    cfg.check.z_max = c.value("z_max", cfg.check.z_max);
    cfg.check.p_min = c.value("p_min", cfg.check.p_min);
    cfg.check.identity_tol = c.value("identity_tol", cfg.check.identity_tol);
    if (c.contains("violation_range")) {
      auto v = c["violation_range"].get<std::vector<double>>();
      if (v.size() != 2) throw invalid_input("config: violation_range needs two numbers");
      cfg.check.violation_range = {v[0], v[1]};
    }
    if (c.contains("ratio_range")) {
      auto v = c["ratio_range"].get<std::vector<double>>();
      if (v.size() != 2) throw invalid_input("config: ratio_range needs two numbers");
      cfg.check.ratio_range = {v[0], v[1]};
    }
  }

  cfg.out_dir = j.value("out", std::string("."));
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw invalid_input(std::string("config: JSON parse error: ") + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::resolved() const {
  json j;
  j["kind"] = kind;
  json s;
  s["dimension"] = system.dimension;
  if (system.hamiltonian) s["hamiltonian"] = {{"entries", cmatrix_to_json(*system.hamiltonian)}};
  if (system.unitary) s["unitary"] = {{"entries", cmatrix_to_json(*system.unitary)}};
  if (system.tau) s["tau"] = *system.tau;
  if (!system.blocks.empty()) s["blocks"] = system.blocks;
  if (system.initial_state)
    s["initial_state"] = {{"entries", cvector_to_json(*system.initial_state)}};
  j["system"] = std::move(s);

  json r;
  if (t_end > 0) r["t_end"] = t_end;
  if (!record_times.empty()) r["record_times"] = record_times;
  if (steps > 0) r["steps"] = steps;
  if (!taus.empty()) r["taus"] = taus;
  r["n_runs"] = n_runs;
  r["seed"] = seed;
  if (start)
    r["start"] = *start;
  else
    r["start"] = "born";
  r["n_samples"] = n_samples;
  r["q_pair"] = {q_pair.first, q_pair.second};
  r["t_start"] = t_start;
  j["run"] = std::move(r);

  j["candidate"] = candidate.name();
  if (!circuit_file.empty()) j["circuit_file"] = circuit_file;

  j["controls"] = {{"hazard_rel_tol", sampler.hazard_rel_tol},
                   {"time_tol", sampler.time_tol},
                   {"ode_tol", ode_tol},
                   {"series_n_max", series_n_max},
                   {"series_quad_tol", series_quad_tol}};
  j["check"] = {{"tv_max", check.tv_max},
                {"z_max", check.z_max},
                {"p_min", check.p_min},
                {"identity_tol", check.identity_tol},
                {"violation_range", {check.violation_range.first, check.violation_range.second}},
                {"ratio_range", {check.ratio_range.first, check.ratio_range.second}}};
  j["out"] = out_dir;
  return j;
}

}  // namespace beable::harness
