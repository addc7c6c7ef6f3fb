// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "beable/circuits.hpp"
#include "beable/current_lab.hpp"
#include "beable/hilbert.hpp"
#include "beable/rng.hpp"
#include "beable/stats.hpp"

using namespace beable;

namespace {

StateVector basis_state(int dim, int index) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
  v(index) = 1.0;
  return StateVector(std::move(v));
}

std::vector<std::vector<config_t>> sorted_subsets(const PairPartition& p) {
  return p.subsets();
}

}  // namespace

TEST_CASE("gate partitions: bit-flip pairs, CNOT pairs and singlets") {
  SUBCASE("X on qubit 0 of two") {
    PairPartition p = gate_partition(Gate::named("X", 0), 2);
    auto subsets = sorted_subsets(p);
    REQUIRE(subsets.size() == 2);
    CHECK(subsets[0] == std::vector<config_t>{0, 1});
    CHECK(subsets[1] == std::vector<config_t>{2, 3});
  }
  SUBCASE("CNOT control 0 target 1") {
    PairPartition p = gate_partition(Gate::cnot(0, 1), 2);
    CHECK(p.is_singlet(0));
    CHECK(p.is_singlet(2));
    CHECK(p.partner(1) == 3);
    CHECK(p.partner(3) == 1);
  }
  SUBCASE("Hadamard on qubit 1 pairs across bit 1") {
    PairPartition p = gate_partition(Gate::named("H", 1), 2);
    CHECK(p.partner(0) == 2);
    CHECK(p.partner(1) == 3);
  }
}

TEST_CASE("pairwise verification against full gate unitaries") {
  Decomposition dec = Decomposition::singletons(4);
  for (const Gate& g : {Gate::named("H", 0), Gate::named("T", 1), Gate::cnot(1, 0)}) {
    PairwiseCheck check = verify_pairwise(full_unitary(g, 2), gate_partition(g, 2), dec);
    CHECK(check.ok);
    CHECK(check.max_off_partition <= 1e-12);
  }
  SUBCASE("identity validates against any partition") {
    PairwiseCheck check =
        verify_pairwise(UnitaryOperator(Eigen::MatrixXcd::Identity(4, 4)),
                        gate_partition(Gate::named("X", 1), 2), dec);
    CHECK(check.ok);
  }
  SUBCASE("SWAP crosses single-qubit pairs with magnitude one") {
    Eigen::MatrixXcd swap = Eigen::MatrixXcd::Zero(4, 4);
    swap(0, 0) = swap(3, 3) = 1.0;
    swap(1, 2) = swap(2, 1) = 1.0;
    PairwiseCheck check = verify_pairwise(UnitaryOperator(swap),
                                          gate_partition(Gate::named("X", 0), 2), dec);
    CHECK(!check.ok);
    CHECK(check.max_off_partition == doctest::Approx(1.0));
  }
}

TEST_CASE("full unitaries agree with in-place gate application") {
  auto rng = make_engine(6);
  for (const Gate& g : {Gate::named("H", 0), Gate::named("Y", 2), Gate::cnot(2, 0),
                        Gate::cnot(0, 1)}) {
    StateVector psi = random_state(8, rng);
    Eigen::VectorXcd direct = psi.amplitudes();
    apply_gate(direct, g, 3);
    Eigen::VectorXcd via_matrix = full_unitary(g, 3).matrix() * psi.amplitudes();
    CHECK((direct - via_matrix).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("circuit text format round trip and error reporting") {
  std::istringstream in(
      "# demo circuit\n"
      "qubits 2\n"
      "g H q 0\n"
      "g u 0 0 1 0 1 0 0 0 q 1  # an X written as entries\n"
      "cnot 0 1\n");
  Circuit c = Circuit::parse(in);
  REQUIRE(c.gates.size() == 3);
  CHECK(c.n_qubits == 2);
  CHECK(c.gates[1].matrix(0, 1) == complex(1, 0));
  CHECK(c.gates[2].kind == Gate::Kind::cnot);

  std::istringstream back(c.to_text());
  Circuit c2 = Circuit::parse(back);
  CHECK(c2.gates.size() == c.gates.size());
  CHECK((full_unitary(c2.gates[1], 2).matrix() - full_unitary(c.gates[1], 2).matrix())
            .cwiseAbs()
            .maxCoeff() == 0.0);

  std::istringstream bad("qubits 2\ng Q q 0\n");
  CHECK_THROWS_AS(Circuit::parse(bad), invalid_input);
  std::istringstream nonunitary("qubits 1\ng u 1 0 0 0 0 0 0.5 0 q 0\n");
  CHECK_THROWS_AS(Circuit::parse(nonunitary), invalid_input);
  std::istringstream missing("g X q 0\n");
  CHECK_THROWS_AS(Circuit::parse(missing), invalid_input);
}

TEST_CASE("diagonal circuits never move the configuration") {
  Circuit c(2, {Gate::named("Z", 0), Gate::named("S", 1), Gate::named("T", 0),
                Gate::named("Z", 1)});
  auto rng = make_engine(44);
  StateVector psi = random_state(4, rng);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CircuitRunResult run = run_circuit_trajectory(c, psi, 2, seed);
    for (config_t q : run.trajectory.configs) CHECK(q == 2);
  }
}

TEST_CASE("a single X gate deterministically flips the occupied configuration") {
  Circuit c(2, {Gate::named("X", 0)});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CircuitRunResult run = run_circuit_trajectory(c, basis_state(4, 0), 0, seed);
    CHECK(run.trajectory.configs.back() == 1);
  }
}

TEST_CASE("trajectories are deterministic given the seed and match the fast path") {
  auto rng = make_engine(3);
  Circuit c = random_circuit(3, 10, rng);
  StateVector psi = random_state(8, rng);
  CircuitRunResult a = run_circuit_trajectory(c, psi, std::nullopt, 17);
  CircuitRunResult b = run_circuit_trajectory(c, psi, std::nullopt, 17);
  CHECK(a.trajectory.configs == b.trajectory.configs);

  CircuitProcess process(c, psi);
  auto engine = make_engine(17);
  std::vector<config_t> configs;
  process.run(std::nullopt, engine, configs);
  CHECK(configs == a.trajectory.configs);

  // Final state equals the plain statevector simulation.
  Eigen::VectorXcd ref = psi.amplitudes();
  for (const Gate& g : c.gates) apply_gate(ref, g, c.n_qubits);
  CHECK((a.final_state.amplitudes() - ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("per-gate currents match the two-state current and pass all conditions") {
  auto rng = make_engine(19);
  Circuit c = random_circuit(3, 8, rng);
  StateVector psi0 = random_state(8, rng);
  Decomposition dec = Decomposition::singletons(8);
  CandidateId cand = CandidateId::canonical(CandidateBase::guess1, CandidatePart::real_part);

  Eigen::VectorXcd psi = psi0.amplitudes();
  for (const Gate& g : c.gates) {
    StateVector state(psi);
    UnitaryOperator u = full_unitary(g, c.n_qubits);
    CurrentMatrix j = candidate_current(state, u, dec, cand);
    ConditionReport rep = check_conditions(j, state, u, dec);
    CHECK(rep.all_pass());

    PairPartition partition = gate_partition(g, c.n_qubits);
    Eigen::VectorXcd next = psi;
    apply_gate(next, g, c.n_qubits);
    for (config_t q = 0; q < 8; ++q) {
      config_t r = partition.partner(q);
      if (r <= q) continue;
      // Current restricted to the pair equals the forced two-state value.
      double forced = std::norm(next(r)) - std::norm(psi(r));
      CHECK(std::abs(j(r, q) - forced) < 1e-12);
      // Off-pair current vanishes.
      for (config_t s = 0; s < 8; ++s)
        if (s != q && s != r) CHECK(std::abs(j(s, q)) < 1e-12);
    }
    psi = next;
  }
}

TEST_CASE("ensembles reproduce Born weights after every prefix") {
  auto rng = make_engine(60);
  Circuit c = random_circuit(3, 8, rng);
  StateVector psi0 = random_state(8, rng);
  CircuitProcess process(c, psi0);
  const long n = 20000;
  EnsembleCounts counts = process.ensemble(n, 99);
  EnsembleStats stats = EnsembleStats::from_counts(counts.times, counts.counts, n);
  for (int g = 0; g <= process.n_gates(); ++g) {
    DistComparison cmp = stats.compare_at(g, ProbabilityVector(process.born_after(g)));
    CHECK(cmp.tv < 0.025);
  }
  EnsembleCounts serial = process.ensemble(500, 4, 1);
  EnsembleCounts parallel = process.ensemble(500, 4, 3);
  CHECK((serial.counts - parallel.counts).cwiseAbs().sum() == 0);
}
