// Copyright 2026 The hpscramble Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace {

using hps::Circuit;
using oracle::Mat;

double phase_free(const Mat& a, const Mat& b) {
  const hps::Complex ov = (b.adjoint() * a).trace();
  const hps::Complex ph = std::abs(ov) > 0 ? ov / std::abs(ov) : 1.0;
  return (a - ph * b).norm();
}

TEST(Epr, PrepareAndMeasureAreInverse) {
  const std::vector<hps::QubitPair> pairs = {{0, 3}, {1, 2}};
  const Circuit prep = hps::build_epr_prep(pairs, 4);
  EXPECT_EQ(prep.cnot_count(), pairs.size());
  hps::PureState psi(4);
  hps::run_circuit(psi, prep);
  EXPECT_NEAR(std::abs(psi[0b0000]), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(psi[0b1001]), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(psi[0b0110]), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(psi[0b1111]), 0.5, 1e-15);
  hps::run_circuit(psi, hps::build_epr_measure(pairs, 4));
  EXPECT_NEAR(std::abs(psi[0]), 1.0, 1e-14);
  EXPECT_THROW(hps::build_epr_prep(std::vector<hps::QubitPair>{{0, 1}, {1, 2}}, 3), std::invalid_argument);
}

TEST(Epr, ProjectionProbability) {
  hps::PureState psi(2);
  hps::run_circuit(psi, Circuit(2).h(0));
  const std::vector<hps::QubitPair> pair = {{0, 1}};
  const auto r = hps::epr_projector_overlap(psi, pair);
  EXPECT_NEAR(r.prob, 0.25, 1e-15);
  EXPECT_TRUE(r.possible);
  hps::PureState singlet = hps::PureState::basis(2, 0b01);
  const auto s = hps::epr_projector_overlap(singlet, pair);
  EXPECT_FALSE(s.possible);
  EXPECT_EQ(s.prob, 0.0);
}

class Rotation : public ::testing::TestWithParam<std::tuple<std::string, std::vector<int>, std::string>> {};

TEST_P(Rotation, MatchesExponential) {
  const auto& [axis, sites, pauli] = GetParam();
  for (double theta : {0.37, -1.2, 3.0}) {
    const Circuit c = hps::build_pauli_rotation(axis, theta, sites, 4);
    EXPECT_LT((hps::circuit_matrix(c) - oracle::pauli_rotation(pauli, theta)).norm(), 1e-12) << axis;
  }
}

INSTANTIATE_TEST_SUITE_P(
    Axes, Rotation,
    ::testing::Values(std::make_tuple("Z", std::vector<int>{2}, "IIZI"),
                      std::make_tuple("X", std::vector<int>{1}, "IXII"),
                      std::make_tuple("ZZ", std::vector<int>{0, 3}, "ZIIZ"),
                      std::make_tuple("XZ", std::vector<int>{2, 1}, "IZXI"),
                      std::make_tuple("XZ", std::vector<int>{0, 1}, "XZII"),
                      std::make_tuple("ZXZ", std::vector<int>{1, 2, 3}, "IZXZ"),
                      std::make_tuple("ZXZ", std::vector<int>{3, 0, 1}, "XZIZ")));

TEST(Rotation, RejectsBadSites) {
  EXPECT_THROW(hps::build_pauli_rotation("ZZ", 0.1, {0, 0}, 3), std::invalid_argument);
  EXPECT_THROW(hps::build_pauli_rotation("XY", 0.1, {0, 1}, 3), std::invalid_argument);
  EXPECT_THROW(hps::build_pauli_rotation("X", 0.1, {3}, 3), std::out_of_range);
}

TEST(Ising, StepIsOrderedProductOfExponentials) {
  const hps::IsingParams p{4, -1.05, 0.5};
  const double dt = 0.13;
  Mat want = Mat::Identity(16, 16);
  const auto h = hps::ising_hamiltonian(p);
  // Exponentials applied in time order: X terms, ZZ bonds, Z fields.
  for (const char* kind : {"X", "ZZ", "Z"})
    for (const auto& term : h.terms()) {
      const std::string& s = term.pauli;
      const bool is_zz = std::count(s.begin(), s.end(), 'Z') == 2;
      const bool is_x = s.find('X') != std::string::npos;
      const bool is_z = !is_x && !is_zz;
      const std::string k = kind;
      if ((k == "X" && is_x) || (k == "ZZ" && is_zz) || (k == "Z" && is_z))
        want = Mat(oracle::expm_hermitian(term.coefficient * oracle::pauli_string(s), dt)) * want;
    }
  EXPECT_LT((hps::circuit_matrix(hps::build_ising_step(p, dt)) - want).norm(), 1e-12);
}

TEST(Ising, CnotCountAndConvergence) {
  for (int N = 2; N <= 10; ++N)
    EXPECT_EQ(hps::build_ising_step({N, 1.0, 0.3}, 0.1).cnot_count(), static_cast<std::size_t>(2 * (N - 1)));
  const hps::IsingParams p{4, -1.05, 0.5};
  const Mat exact = hps::exact_unitary(hps::ising_hamiltonian(p), 1.0).matrix();
  double prev = 1e9;
  for (int M : {10, 20, 40}) {
    const double err = hps::operator_distance(hps::circuit_matrix(hps::build_trotter_ising(p, {1.0, M})), exact);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(Ym, StepMatchesProductOfClosedFormTerms) {
  // Magnetic exponentials site by site (X, left XZ, right XZ, ZXZ), then the
  // diagonal ones; equal up to the global phase of the dropped constant.
  for (int N : {1, 2, 3, 5}) {
    const double K = 0.7, dt = 0.2;
    const auto h = hps::gauge::ym_ising_closed_form(N, K);
    const std::string id(static_cast<std::size_t>(N), 'I');
    auto term = [&](std::initializer_list<std::pair<int, char>> ops) {
      std::string s = id;
      for (const auto& [q, c] : ops) s[static_cast<std::size_t>(q)] = c;
      return s;
    };
    Mat want = Mat::Identity(1 << N, 1 << N);
    auto apply = [&](const std::string& s) {
      const double c = h.coefficient_of(s);
      if (c != 0.0) want = Mat(oracle::expm_hermitian(c * oracle::pauli_string(s), dt)) * want;
    };
    for (int i = 0; i < N; ++i) {
      apply(term({{i, 'X'}}));
      if (i > 0) apply(term({{i - 1, 'Z'}, {i, 'X'}}));
      if (i + 1 < N) apply(term({{i, 'X'}, {i + 1, 'Z'}}));
      if (i > 0 && i + 1 < N) apply(term({{i - 1, 'Z'}, {i, 'X'}, {i + 1, 'Z'}}));
    }
    for (const auto& t : h.terms())
      if (t.pauli.find('X') == std::string::npos) apply(t.pauli);
    const Mat got = hps::circuit_matrix(hps::build_ym_step({N, K}, dt));
    EXPECT_LT(phase_free(got, want), 1e-11) << "N=" << N;
  }
}

TEST(Ym, CnotCount) {
  for (int N = 2; N <= 10; ++N)
    EXPECT_EQ(hps::build_ym_step({N, 2.0}, 0.5).cnot_count(), static_cast<std::size_t>(10 * N - 14)) << N;
}

TEST(Ym, TrotterConvergesToExact) {
  const hps::YmParams p{4, 2.0};
  const Mat exact = hps::exact_unitary(hps::gauge::ym_ising_closed_form(4, 2.0), 1.0).matrix();
  const double e1 = phase_free(hps::circuit_matrix(hps::build_trotter_ym(p, {1.0, 20})), exact);
  const double e2 = phase_free(hps::circuit_matrix(hps::build_trotter_ym(p, {1.0, 40})), exact);
  EXPECT_LT(e2, e1);
  EXPECT_NEAR(e1 / e2, 2.0, 0.3);
}

TEST(Transforms, ConjugateCircuitIsEntrywiseConjugate) {
  const Circuit c = hps::build_ym_step({3, 1.3}, 0.4);
  EXPECT_LT((hps::circuit_matrix(hps::conjugate_circuit(c)) - hps::circuit_matrix(c).conjugate()).norm(), 1e-12);
}

TEST(Transforms, RelabelMovesQubits) {
  Circuit c(2);
  c.h(0).cnot(0, 1).rz(1, 0.5);
  const std::vector<int> map = {3, 1};
  const Circuit r = hps::relabel_circuit(c, map, 4);
  EXPECT_EQ(r.to_text(), "H 3\nCNOT 3 1\nRZ 1 0.5\n");
  const std::vector<int> bad = {1, 1};
  EXPECT_THROW(hps::relabel_circuit(c, bad, 4), std::invalid_argument);
}

TEST(Trotter, SpecValidation) {
  EXPECT_THROW((hps::TrotterSpec{1.0, 0}.validate()), std::invalid_argument);
  EXPECT_DOUBLE_EQ((hps::TrotterSpec{2.0, 20}.dt()), 0.1);
}

}  // namespace
