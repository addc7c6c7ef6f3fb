// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "beable/current_lab.hpp"
#include "beable/hilbert.hpp"
#include "beable/rng.hpp"
#include "test_util.hpp"

using namespace beable;
using testutil::random_decomposition;

namespace {

const CandidateId kAllCandidates[4] = {
    CandidateId::canonical(CandidateBase::guess1, CandidatePart::real_part),
    CandidateId::canonical(CandidateBase::guess1, CandidatePart::imag_part),
    CandidateId::canonical(CandidateBase::guess2, CandidatePart::real_part),
    CandidateId::canonical(CandidateBase::guess2, CandidatePart::imag_part),
};

// Dense-projector oracle for the four-term antisymmetrized expression built
// from scale * part(base): independent of the masked-column implementation.
Eigen::MatrixXd brute_force_current(const StateVector& psi, const UnitaryOperator& u,
                                    const Decomposition& dec, const CandidateId& cand) {
  const int d = dec.dim(), nq = dec.num_configs();
  std::vector<Eigen::MatrixXcd> proj(nq, Eigen::MatrixXcd::Zero(d, d));
  for (config_t q = 0; q < nq; ++q)
    for (int i : dec.block(q)) proj[q](i, i) = 1.0;
  Eigen::MatrixXd j(nq, nq);
  for (config_t a = 0; a < nq; ++a)
    for (config_t b = 0; b < nq; ++b) {
      Eigen::MatrixXcd base_ab, base_ba;
      if (cand.base == CandidateBase::guess1) {
        base_ab = u.matrix().adjoint() * proj[a] * u.matrix() * proj[b];
        base_ba = u.matrix().adjoint() * proj[b] * u.matrix() * proj[a];
      } else {
        base_ab = proj[a] * u.matrix() * proj[b];
        base_ba = proj[b] * u.matrix() * proj[a];
      }
      complex va = psi.amplitudes().dot(base_ab * psi.amplitudes());
      complex vb = psi.amplitudes().dot(base_ba * psi.amplitudes());
      double pa = cand.part == CandidatePart::real_part ? va.real() : va.imag();
      double pb = cand.part == CandidatePart::real_part ? vb.real() : vb.imag();
      j(a, b) = 0.5 * cand.scale * (pa - pb);
    }
  return j;
}

}  // namespace

TEST_CASE("candidate id parsing and canonical scales") {
  CandidateId c = CandidateId::parse("guess1:real");
  CHECK(c.scale == 2.0);
  CHECK(CandidateId::parse("guess1:imag").scale == 1.0);
  CHECK(CandidateId::parse("guess2:real:3.5").scale == 3.5);
  CHECK(CandidateId::parse("guess2:imag").name() == "guess2:imag:1");
  CHECK_THROWS_AS(CandidateId::parse("guess3:real"), invalid_input);
  CHECK_THROWS_AS(CandidateId::parse("guess1:abs"), invalid_input);
}

TEST_CASE("candidate currents vanish for the identity and match the oracle") {
  auto rng = make_engine(3);
  Decomposition dec = Decomposition::singletons(3);
  UnitaryOperator eye{Eigen::MatrixXcd::Identity(3, 3)};
  for (const auto& cand : kAllCandidates) {
    CurrentMatrix j = candidate_current(random_state(3, rng), eye, dec, cand);
    CHECK(j.entries().cwiseAbs().maxCoeff() < 1e-13);
  }
  for (int k = 0; k < 20; ++k) {
    int d = 2 + static_cast<int>(rng() % 4);
    Decomposition rdec = random_decomposition(d, rng);
    StateVector psi = random_state(d, rng);
    UnitaryOperator u = haar_random_unitary(d, rng);
    for (const auto& cand : kAllCandidates) {
      CurrentMatrix j = candidate_current(psi, u, rdec, cand);
      CHECK((j.entries() - brute_force_current(psi, u, rdec, cand)).cwiseAbs().maxCoeff() <
            1e-12);
      CHECK((j.entries() + j.entries().transpose()).cwiseAbs().maxCoeff() < 1e-13);
      for (int q = 0; q < rdec.num_configs(); ++q) CHECK(j(q, q) == 0.0);
    }
  }
}

TEST_CASE("two-configuration case: the balanced candidate equals the forced current") {
  auto rng = make_engine(8);
  Decomposition dec = Decomposition::singletons(2);
  CandidateId cand = CandidateId::canonical(CandidateBase::guess1, CandidatePart::real_part);
  for (int k = 0; k < 100; ++k) {
    StateVector psi = random_state(2, rng);
    UnitaryOperator u = haar_random_unitary(2, rng);
    CurrentMatrix j = candidate_current(psi, u, dec, cand);
    Eigen::VectorXd w = born_distribution(psi, dec).weights();
    Eigen::VectorXd w_next =
        born_distribution(StateVector(u.matrix() * psi.amplitudes()), dec).weights();
    CHECK(std::abs(j(1, 0) - (w_next(1) - w(1))) < 1e-12);
  }
}

TEST_CASE("condition checks: balanced candidate passes reality, antisymmetry, balance") {
  auto rng = make_engine(21);
  CandidateId cand = CandidateId::canonical(CandidateBase::guess1, CandidatePart::real_part);
  for (int k = 0; k < 100; ++k) {
    int d = 2 + static_cast<int>(rng() % 4);
    Decomposition dec = random_decomposition(d, rng);
    StateVector psi = random_state(d, rng);
    UnitaryOperator u = haar_random_unitary(d, rng);
    ConditionReport rep = check_conditions(candidate_current(psi, u, dec, cand), psi, u, dec);
    CHECK(rep.passes[0]);
    CHECK(rep.passes[1]);
    CHECK(rep.passes[3]);  // column sums balance the Born-weight change
  }
}

TEST_CASE("two configurations: the balanced candidate passes all four conditions") {
  auto rng = make_engine(52);
  Decomposition dec = Decomposition::singletons(2);
  CandidateId cand = CandidateId::canonical(CandidateBase::guess1, CandidatePart::real_part);
  for (int k = 0; k < 300; ++k) {
    StateVector psi = random_state(2, rng);
    UnitaryOperator u = haar_random_unitary(2, rng);
    ConditionReport rep = check_conditions(candidate_current(psi, u, dec, cand), psi, u, dec);
    CHECK(rep.all_pass());
  }
}

TEST_CASE("all other candidates violate the balance condition generically") {
  Decomposition dec = Decomposition::singletons(3);
  for (const auto& cand : kAllCandidates) {
    if (cand.base == CandidateBase::guess1 && cand.part == CandidatePart::real_part) continue;
    auto rng = make_engine(77);
    bool found = false;
    for (int k = 0; k < 100 && !found; ++k) {
      StateVector psi = random_state(3, rng);
      UnitaryOperator u = haar_random_unitary(3, rng);
      ConditionReport rep =
          check_conditions(candidate_current(psi, u, dec, cand), psi, u, dec);
      if (rep.cond4_max_residual() > 1e-6) found = true;
    }
    CHECK_MESSAGE(found, "no balance violation found for ", cand.name());
  }
}

TEST_CASE("transition_from_current: identity, cross-check, realized current") {
  Decomposition dec = Decomposition::singletons(2);
  auto rng = make_engine(14);

  SUBCASE("zero current gives the identity chain") {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
    TransitionMatrix t =
        transition_from_current(CurrentMatrix(z), random_state(3, 2),
                                Decomposition::singletons(3));
    CHECK((t.probs() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("two-state current reproduces the minimal transition probabilities") {
    CandidateId cand = CandidateId::canonical(CandidateBase::guess1, CandidatePart::real_part);
    for (int k = 0; k < 100; ++k) {
      StateVector psi = random_state(2, rng);
      UnitaryOperator u = haar_random_unitary(2, rng);
      Eigen::VectorXd w = born_distribution(psi, dec).weights();
      if (w.minCoeff() < 1e-6) continue;
      TransitionMatrix from_j =
          transition_from_current(candidate_current(psi, u, dec, cand), psi, dec);
      TransitionMatrix direct = two_state_transition(psi, u, dec);
      CHECK((from_j.probs() - direct.probs()).cwiseAbs().maxCoeff() < 1e-12);
      // Realized current of the chain under Born weights equals J.
      CurrentMatrix j = candidate_current(psi, u, dec, cand);
      double realized = from_j(1, 0) * w(0) - from_j(0, 1) * w(1);
      CHECK(std::abs(realized - j(1, 0)) < 1e-12);
    }
  }

  SUBCASE("column-bound violations are rejected with the offending configuration") {
    Eigen::MatrixXd j(2, 2);
    j << 0, -0.9, 0.9, 0;  // outflow 0.9 from column 0
    Eigen::VectorXcd v(2);
    v << std::sqrt(0.2), std::sqrt(0.8);
    CHECK_THROWS_WITH_AS(
        transition_from_current(CurrentMatrix(j), StateVector(v),
                                Decomposition::singletons(2)),
        doctest::Contains("configuration 0"), numeric_failure);
  }
}

TEST_CASE("admissible currents transport Born weights exactly") {
  // Wherever all four conditions hold, the derived chain maps Born(psi) to
  // Born(U psi) as a matrix identity.
  auto rng = make_engine(40);
  CandidateId cand = CandidateId::canonical(CandidateBase::guess1, CandidatePart::real_part);
  int tested = 0;
  for (int k = 0; k < 400 && tested < 60; ++k) {
    int d = 2 + static_cast<int>(rng() % 3);
    Decomposition dec = Decomposition::singletons(d);
    StateVector psi = random_state(d, rng);
    UnitaryOperator u = haar_random_unitary(d, rng);
    CurrentMatrix j = candidate_current(psi, u, dec, cand);
    ConditionReport rep = check_conditions(j, psi, u, dec);
    if (!rep.all_pass()) continue;
    ++tested;
    TransitionMatrix t = transition_from_current(j, psi, dec);
    Eigen::VectorXd w = born_distribution(psi, dec).weights();
    Eigen::VectorXd w_next =
        born_distribution(StateVector(u.matrix() * psi.amplitudes()), dec).weights();
    CHECK(((t.probs() * w) - w_next).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(tested >= 60);
}

TEST_CASE("violation scan: determinism, identity unitary, and the d=3 fraction") {
  Decomposition dec = Decomposition::singletons(3);
  CandidateId cand = CandidateId::canonical(CandidateBase::guess1, CandidatePart::real_part);

  SUBCASE("same seed gives the identical tally") {
    ViolationScanResult a = violation_scan(3, dec, {1, 0}, cand, 200, 11);
    ViolationScanResult b = violation_scan(3, dec, {1, 0}, cand, 200, 11);
    CHECK(a.source_column_violations == b.source_column_violations);
    CHECK(a.any_violations == b.any_violations);
  }
  SUBCASE("identity unitary never violates") {
    ViolationScanResult r =
        violation_scan(3, dec, {1, 0}, cand, 200, 11, 1e-10,
                       UnitaryOperator(Eigen::MatrixXcd::Identity(3, 3)));
    CHECK(r.any_violations == 0);
  }
  SUBCASE("the column-bound violation fraction is a few percent") {
    ViolationScanResult r = violation_scan(3, dec, {1, 0}, cand, 1000, 2025);
    CHECK(r.source_fraction() >= 0.01);
    CHECK(r.source_fraction() <= 0.15);
    CHECK(r.cond1_failures == 0);
    CHECK(r.cond2_failures == 0);
    CHECK(r.cond4_failures == 0);
    CHECK(!r.worst.empty());
    CHECK(r.worst.front().excess > 1e-10);
  }
}
