// SPDX-License-Identifier: Apache-2.0
#include "beable/circuits.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "beable/hilbert.hpp"
#include "beable/rng.hpp"

namespace beable {

namespace {

Eigen::Matrix2cd named_matrix(const std::string& name) {
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd m;
  if (name == "X")
    m << 0, 1, 1, 0;
  else if (name == "Y")
    m << 0, complex(0, -1), complex(0, 1), 0;
  else if (name == "Z")
    m << 1, 0, 0, -1;
  else if (name == "H")
    m << s, s, s, -s;
  else if (name == "S")
    m << 1, 0, 0, complex(0, 1);
  else if (name == "T")
    m << 1, 0, 0, std::polar(1.0, M_PI / 4);
  else
    throw invalid_input("Gate: unknown name '" + name + "'");
  return m;
}

void validate_single(const Eigen::Matrix2cd& m) {
  Eigen::Matrix2cd gram = m * m.adjoint() - Eigen::Matrix2cd::Identity();
  if (gram.cwiseAbs().maxCoeff() > kUnitaryTol)
    throw invalid_input("Gate: 2x2 matrix is not unitary within tolerance");
}

}  // namespace

Gate Gate::single(const std::string& name, const Eigen::Matrix2cd& m, int target) {
  validate_single(m);
  Gate g;
  g.kind = Kind::single;
  g.target = target;
  g.matrix = m;
  g.name = name;
  return g;
}

Gate Gate::named(const std::string& name, int target) {
  return single(name, named_matrix(name), target);
}

Gate Gate::cnot(int control, int target) {
  if (control == target) throw invalid_input("Gate: CNOT qubits must be distinct");
  Gate g;
  g.kind = Kind::cnot;
  g.control = control;
  g.target = target;
  g.name = "cnot";
  g.matrix.setZero();
  return g;
}

Circuit::Circuit(int n_qubits_, std::vector<Gate> gates_)
    : n_qubits(n_qubits_), gates(std::move(gates_)) {
  if (n_qubits < 1 || n_qubits > 14)
    throw invalid_input("Circuit: qubit count out of supported range");
  for (const auto& g : gates) {
    if (g.target < 0 || g.target >= n_qubits)
      throw invalid_input("Circuit: gate target out of range");
    if (g.kind == Gate::Kind::cnot && (g.control < 0 || g.control >= n_qubits))
      throw invalid_input("Circuit: CNOT control out of range");
  }
}

Circuit Circuit::parse(std::istream& in) {
  int n_qubits = -1;
  std::vector<Gate> gates;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    auto fail = [&](const std::string& why) {
      throw invalid_input("Circuit: line " + std::to_string(line_no) + ": " + why);
    };
    if (word == "qubits") {
      if (!(ls >> n_qubits)) fail("expected qubit count");
    } else if (word == "g") {
      std::string name;
      if (!(ls >> name)) fail("expected gate name");
      Eigen::Matrix2cd m;
      if (name == "u") {
        double v[8];
        for (double& x : v)
          if (!(ls >> x)) fail("expected 8 matrix entries after 'u'");
        m << complex(v[0], v[1]), complex(v[2], v[3]), complex(v[4], v[5]), complex(v[6], v[7]);
      } else {
        m = named_matrix(name);
      }
      std::string qword;
      int target;
      if (!(ls >> qword >> target) || qword != "q") fail("expected 'q <target>'");
      gates.push_back(Gate::single(name, m, target));
    } else if (word == "cnot") {
      int control, target;
      if (!(ls >> control >> target)) fail("expected control and target");
      gates.push_back(Gate::cnot(control, target));
    } else {
      fail("unknown directive '" + word + "'");
    }
  }
  if (n_qubits < 0) throw invalid_input("Circuit: missing 'qubits N' header");
  return Circuit(n_qubits, std::move(gates));
}

Circuit Circuit::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("Circuit: cannot open '" + path + "'");
  return parse(in);
}

std::string Circuit::to_text() const {
  std::ostringstream out;
  out << "qubits " << n_qubits << "\n";
  out.precision(17);
  for (const auto& g : gates) {
    if (g.kind == Gate::Kind::cnot) {
      out << "cnot " << g.control << " " << g.target << "\n";
    } else if (g.name != "u" && !g.name.empty()) {
      out << "g " << g.name << " q " << g.target << "\n";
    } else {
      out << "g u";
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          out << " " << g.matrix(r, c).real() << " " << g.matrix(r, c).imag();
      out << " q " << g.target << "\n";
    }
  }
  return out.str();
}

PairPartition::PairPartition(std::vector<config_t> partner) : partner_(std::move(partner)) {
  for (config_t q = 0; q < static_cast<config_t>(partner_.size()); ++q) {
    config_t p = partner_[q];
    if (p < 0 || p >= static_cast<config_t>(partner_.size()) || partner_[p] != q)
      throw invalid_input("PairPartition: partner map is not an involution");
  }
}

std::vector<std::vector<config_t>> PairPartition::subsets() const {
  std::vector<std::vector<config_t>> out;
  for (config_t q = 0; q < size(); ++q) {
    if (partner_[q] == q)
      out.push_back({q});
    else if (partner_[q] > q)
      out.push_back({q, partner_[q]});
  }
  return out;
}

PairPartition gate_partition(const Gate& gate, int n_qubits) {
  const int d = 1 << n_qubits;
  if (gate.target >= n_qubits || (gate.kind == Gate::Kind::cnot && gate.control >= n_qubits))
    throw invalid_input("gate_partition: gate does not fit the qubit count");
  std::vector<config_t> partner(d);
  for (config_t x = 0; x < d; ++x) {
    if (gate.kind == Gate::Kind::single) {
      partner[x] = x ^ (1 << gate.target);
    } else {
      bool control_set = (x >> gate.control) & 1;
      partner[x] = control_set ? (x ^ (1 << gate.target)) : x;
    }
  }
  return PairPartition(std::move(partner));
}

PairwiseCheck verify_pairwise(const UnitaryOperator& unitary, const PairPartition& partition,
                              const Decomposition& dec, double tol) {
  if (dec.num_configs() != dec.dim())
    throw invalid_input("verify_pairwise: decomposition must be the singleton decomposition");
  if (unitary.dim() != partition.size() || unitary.dim() != dec.dim())
    throw invalid_input("verify_pairwise: dimension mismatch");
  double worst = 0.0;
  const auto& u = unitary.matrix();
  for (config_t q = 0; q < partition.size(); ++q)
    for (config_t p = 0; p < partition.size(); ++p)
      if (!partition.same_subset(q, p)) worst = std::max(worst, std::abs(u(q, p)));
  return {worst <= tol, worst};
}

UnitaryOperator full_unitary(const Gate& gate, int n_qubits) {
  const int d = 1 << n_qubits;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(d, d);
  if (gate.kind == Gate::Kind::single) {
    const int bit = 1 << gate.target;
    for (int x = 0; x < d; ++x) {
      int b = (x & bit) ? 1 : 0;
      u(x, x) = gate.matrix(b, b);
      u(x ^ bit, x) = gate.matrix(1 - b, b);
    }
  } else {
    const int cbit = 1 << gate.control, tbit = 1 << gate.target;
    for (int x = 0; x < d; ++x) u((x & cbit) ? (x ^ tbit) : x, x) = 1.0;
  }
  return UnitaryOperator(std::move(u));
}

void apply_gate(Eigen::VectorXcd& psi, const Gate& gate, int n_qubits) {
  const int d = 1 << n_qubits;
  if (psi.size() != d) throw invalid_input("apply_gate: state dimension mismatch");
  if (gate.kind == Gate::Kind::single) {
    const int bit = 1 << gate.target;
    for (int x = 0; x < d; ++x) {
      if (x & bit) continue;
      complex a = psi(x), b = psi(x | bit);
      psi(x) = gate.matrix(0, 0) * a + gate.matrix(0, 1) * b;
      psi(x | bit) = gate.matrix(1, 0) * a + gate.matrix(1, 1) * b;
    }
  } else {
    const int cbit = 1 << gate.control, tbit = 1 << gate.target;
    for (int x = 0; x < d; ++x)
      if ((x & cbit) && !(x & tbit)) std::swap(psi(x), psi(x | tbit));
  }
}

CircuitProcess::CircuitProcess(const Circuit& circuit, const StateVector& psi0) {
  dim_ = circuit.dim();
  if (psi0.dim() != dim_) throw invalid_input("CircuitProcess: state dimension mismatch");
  const Decomposition dec = Decomposition::singletons(dim_);
  Eigen::VectorXcd psi = psi0.amplitudes();
  states_.push_back(psi);
  born_.push_back(psi.cwiseAbs2());
  int gate_index = 0;
  for (const auto& gate : circuit.gates) {
    PairPartition partition = gate_partition(gate, circuit.n_qubits);
    UnitaryOperator u = full_unitary(gate, circuit.n_qubits);
    PairwiseCheck check = verify_pairwise(u, partition, dec);
    if (!check.ok)
      throw numeric_failure("circuit: pairwise structure violated at gate " +
                            std::to_string(gate_index) + " (off-partition magnitude " +
                            std::to_string(check.max_off_partition) + ")");
    Eigen::VectorXcd next = psi;
    apply_gate(next, gate, circuit.n_qubits);
    Eigen::VectorXd w = psi.cwiseAbs2();
    Eigen::VectorXd w_next = next.cwiseAbs2();
    std::vector<config_t> partner(dim_);
    Eigen::VectorXd p_jump = Eigen::VectorXd::Zero(dim_);
    for (config_t q = 0; q < dim_; ++q) {
      partner[q] = partition.partner(q);
      if (partner[q] != q && w(q) >= kEpsWeight)
        p_jump(q) = std::min(std::max(w(q) - w_next(q), 0.0) / w(q), 1.0);
      else if (partner[q] != q)
        p_jump(q) = -1.0;  // zero-weight marker: stay, but count the event
    }
    partner_.push_back(std::move(partner));
    p_jump_.push_back(std::move(p_jump));
    psi.swap(next);
    states_.push_back(psi);
    born_.push_back(psi.cwiseAbs2());
    ++gate_index;
  }
}

long CircuitProcess::run(std::optional<config_t> q0, std::mt19937_64& rng,
                         std::vector<config_t>& configs) const {
  configs.resize(n_gates() + 1);
  config_t q;
  if (q0) {
    if (*q0 < 0 || *q0 >= dim_) throw invalid_input("CircuitProcess: q0 out of range");
    q = *q0;
  } else {
    const Eigen::VectorXd& w = born_[0];
    double u = uniform01(rng) * w.sum();
    double acc = 0.0;
    q = dim_ - 1;
    for (config_t c = 0; c < dim_; ++c) {
      acc += w(c);
      if (u < acc) {
        q = c;
        break;
      }
    }
  }
  configs[0] = q;
  long zero_events = 0;
  for (int g = 0; g < n_gates(); ++g) {
    config_t partner = partner_[g][q];
    if (partner != q) {
      double p = p_jump_[g](q);
      double u = uniform01(rng);
      if (p < 0.0)
        ++zero_events;  // occupied configuration had negligible weight
      else if (u < p)
        q = partner;
    }
    configs[g + 1] = q;
  }
  return zero_events;
}

EnsembleCounts CircuitProcess::ensemble(long n_runs, std::uint64_t master_seed,
                                        int n_threads) const {
  if (n_runs < 1) throw invalid_input("CircuitProcess: n_runs must be >= 1");
  int workers = n_threads > 0 ? n_threads
                              : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<int>(std::min<long>(workers, n_runs));

  using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;
  const int nt = n_gates() + 1;
  std::vector<CountMatrix> partial(workers, CountMatrix::Zero(nt, dim_));
  std::vector<long> zero_events(workers, 0);
  std::vector<std::thread> pool;

  auto work = [&](int w) {
    std::vector<config_t> configs;
    for (long run = w; run < n_runs; run += workers) {
      auto rng = make_engine(stream_seed(master_seed, run));
      zero_events[w] += this->run(std::nullopt, rng, configs);
      for (int g = 0; g < nt; ++g) partial[w](g, configs[g])++;
    }
  };
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
  for (auto& th : pool) th.join();

  EnsembleCounts out;
  out.times.resize(nt);
  for (int g = 0; g < nt; ++g) out.times[g] = g;
  out.counts = CountMatrix::Zero(nt, dim_);
  for (int w = 0; w < workers; ++w) {
    out.counts += partial[w];
    out.zero_weight_events += zero_events[w];
  }
  out.n_runs = n_runs;
  return out;
}

CircuitRunResult run_circuit_trajectory(const Circuit& circuit, const StateVector& psi0,
                                        std::optional<config_t> q0, std::uint64_t seed) {
  CircuitProcess process(circuit, psi0);
  auto rng = make_engine(seed);
  std::vector<config_t> configs;
  long zero_events = process.run(q0, rng, configs);
  CircuitRunResult result{DiscreteTrajectory{std::move(configs), 1.0},
                          StateVector(process.state_after(process.n_gates())), zero_events};
  return result;
}

Circuit random_circuit(int n_qubits, int n_gates, std::mt19937_64& rng) {
  if (n_qubits < 2) throw invalid_input("random_circuit: need at least two qubits");
  std::vector<Gate> gates;
  gates.reserve(n_gates);
  const char* names[3] = {"H", "X", "T"};
  for (int i = 0; i < n_gates; ++i) {
    std::uint64_t pick = rng() % 4;
    if (pick < 3) {
      int target = static_cast<int>(rng() % n_qubits);
      gates.push_back(Gate::named(names[pick], target));
    } else {
      int control = static_cast<int>(rng() % n_qubits);
      int target = static_cast<int>(rng() % (n_qubits - 1));
      if (target >= control) ++target;
      gates.push_back(Gate::cnot(control, target));
    }
  }
  return Circuit(n_qubits, std::move(gates));
}

}  // namespace beable
