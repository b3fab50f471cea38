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
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace {

using hps::Circuit;
using hps::Complex;
using hps::PureState;
using oracle::Mat;

Eigen::VectorXcd as_vector(const PureState& s) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(s.dim()));
  for (hps::Index i = 0; i < s.dim(); ++i) v(static_cast<Eigen::Index>(i)) = s[i];
  return v;
}

PureState random_state(int n, std::uint64_t seed) {
  hps::RngStream rng(seed, 0);
  return hps::sample_haar_state(n, rng);
}

Circuit random_circuit(int n, int gates, hps::RngStream& rng) {
  Circuit c(n);
  for (int k = 0; k < gates; ++k) {
    const auto kind = rng.uniform_int(3);
    const int q = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    if (kind == 0) {
      c.h(q);
    } else if (kind == 1) {
      c.rz(q, 4 * rng.uniform() - 2);
    } else {
      int t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - 1)));
      if (t >= q) ++t;
      c.cnot(q, t);
    }
  }
  return c;
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  hps::RngStream a(7, 3), b(7, 3), c(7, 4);
  const double x = a.uniform();
  EXPECT_EQ(x, b.uniform());
  EXPECT_NE(x, c.uniform());
  for (int k = 0; k < 1000; ++k) EXPECT_LT(a.uniform_int(5), 5U);
}

TEST(Rng, ComplexNormalHasUnitVariance) {
  hps::RngStream r(1, 0);
  double s = 0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) s += std::norm(r.complex_normal());
  EXPECT_NEAR(s / n, 1.0, 0.03);
}

TEST(Circuit, TextRoundTrip) {
  Circuit c(3, "demo");
  c.h(0).rz(1, 0.1234567890123).cnot(2, 0);
  const std::string text = c.to_text();
  EXPECT_EQ(text, "H 0\nRZ 1 0.1234567890123\nCNOT 2 0\n");
  EXPECT_EQ(Circuit::from_text(text, 3), c);
}

TEST(Circuit, RejectsBadGates) {
  Circuit c(2);
  EXPECT_THROW(c.cnot(1, 1), std::invalid_argument);
  EXPECT_THROW(c.h(2), std::out_of_range);
  EXPECT_THROW(Circuit::from_text("FOO 1\n", 2), std::invalid_argument);
}

TEST(Circuit, InverseUndoes) {
  hps::RngStream rng(3, 0);
  const Circuit c = random_circuit(4, 40, rng);
  Circuit both = c;
  both.append(c.inverse());
  EXPECT_LT((hps::circuit_matrix(both) - Mat::Identity(16, 16)).norm(), 1e-12);
}

TEST(Kernels, GatesMatchDenseOracle) {
  hps::RngStream rng(11, 0);
  const int n = 5;
  for (int trial = 0; trial < 20; ++trial) {
    const Circuit c = random_circuit(n, 25, rng);
    PureState psi = random_state(n, 100 + trial);
    const Eigen::VectorXcd want = oracle::circuit_full(c) * as_vector(psi);
    hps::run_circuit(psi, c);
    EXPECT_LT((as_vector(psi) - want).norm(), 1e-12);
  }
}

TEST(Kernels, PaulisMatchDenseOracle) {
  const int n = 3;
  for (int which = 1; which <= 3; ++which)
    for (int q = 0; q < n; ++q) {
      PureState psi = random_state(n, 5);
      std::string s(n, 'I');
      s[static_cast<std::size_t>(q)] = "IXYZ"[which];
      const Eigen::VectorXcd want = oracle::pauli_string(s) * as_vector(psi);
      hps::kernel::pauli(psi.span(), n, q, which);
      EXPECT_LT((as_vector(psi) - want).norm(), 1e-14);
    }
}

TEST(Kernels, DenseOnSubsetMatchesEmbedding) {
  hps::RngStream rng(2, 0);
  const auto u = hps::sample_haar_unitary(4, rng);
  PureState psi = random_state(4, 9);
  // First listed qubit is the high bit of the small operator.
  const std::vector<int> targets = {3, 1};
  Mat big = Mat::Zero(16, 16);
  for (int row = 0; row < 16; ++row)
    for (int col = 0; col < 16; ++col) {
      const int rs = ((row >> 0) & 1) << 1 | ((row >> 2) & 1);
      const int cs = ((col >> 0) & 1) << 1 | ((col >> 2) & 1);
      if ((row & 0b1010) != (col & 0b1010)) continue;
      big(row, col) = u.matrix()(rs, cs);
    }
  const Eigen::VectorXcd want = big * as_vector(psi);
  hps::apply_dense_unitary(psi, u.matrix(), targets);
  EXPECT_LT((as_vector(psi) - want).norm(), 1e-12);
}

TEST(Kernels, BellProjectionIsAProjector) {
  PureState psi = random_state(4, 21);
  hps::kernel::bell_project(psi.span(), 4, 0, 2);
  PureState again = psi;
  hps::kernel::bell_project(again.span(), 4, 0, 2);
  EXPECT_LT(again.distance(psi), 1e-15);
  Mat phi = Mat::Zero(4, 1);
  phi(0, 0) = phi(3, 0) = 1 / std::sqrt(2.0);
  // Compare with |phi><phi| on qubits (0, 2).
  PureState fresh = random_state(4, 21);
  Eigen::VectorXcd v = as_vector(fresh), out = Eigen::VectorXcd::Zero(16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      if ((i & 0b0101) != (j & 0b0101)) continue;
      const int ip = ((i >> 3) & 1) << 1 | ((i >> 1) & 1);
      const int jp = ((j >> 3) & 1) << 1 | ((j >> 1) & 1);
      out(i) += phi(ip, 0) * phi(jp, 0) * v(j);
    }
  EXPECT_LT((as_vector(psi) - out).norm(), 1e-14);
}

TEST(PureState, NormAndInner) {
  PureState a = random_state(3, 1), b = random_state(3, 2);
  EXPECT_NEAR(a.norm_squared(), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(a.inner(a)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(a.inner(b) - std::conj(b.inner(a))), 0.0, 1e-15);
  PureState c = a;
  for (hps::Index i = 0; i < c.dim(); ++i) c[i] *= std::exp(Complex(0, 0.7));
  EXPECT_GT(c.distance(a), 0.1);
  EXPECT_LT(c.phase_free_distance(a), 1e-12);
}

TEST(PureState, ZeroNormCannotBeNormalized) {
  PureState z = PureState::from_amplitudes(std::vector<Complex>(4, 0.0), true);
  EXPECT_THROW(z.normalize(), hps::ProjectionError);
}

TEST(Reduced, PurityAgreesWithDensityAndComplement) {
  const PureState psi = random_state(6, 8);
  const std::vector<int> sub = {4, 1};
  const std::vector<int> comp = {0, 2, 3, 5};
  const double p1 = hps::reduced_density(psi, sub).purity();
  EXPECT_NEAR(p1, hps::reduced_purity(psi, sub), 1e-12);
  EXPECT_NEAR(p1, hps::reduced_purity(psi, comp), 1e-12);
  const auto e1 = hps::entropies(hps::reduced_density(psi, sub));
  const auto e2 = hps::entropies(hps::reduced_density(psi, comp));
  EXPECT_NEAR(e1.von_neumann, e2.von_neumann, 1e-10);
  EXPECT_LE(e1.renyi2, e1.von_neumann + 1e-12);
}

TEST(Reduced, BellPairIsMaximallyMixed) {
  PureState psi(2);
  hps::run_circuit(psi, Circuit(2).h(0).cnot(0, 1));
  const auto e = hps::entropies(hps::reduced_density(psi, std::vector<int>{1}));
  EXPECT_NEAR(e.von_neumann, 1.0, 1e-12);
  EXPECT_NEAR(e.renyi2, 1.0, 1e-12);
}

TEST(Mixed, PartialTraceOfProductState) {
  const PureState a = random_state(2, 1), b = random_state(1, 2);
  const auto rho = hps::MixedState::from_pure(a.kron(b));
  const auto ra = hps::partial_trace(rho, std::vector<int>{0, 1});
  EXPECT_LT((ra.matrix() - hps::MixedState::from_pure(a).matrix()).norm(), 1e-12);
  EXPECT_NEAR(ra.trace().real(), 1.0, 1e-12);
}

TEST(Haar, UnitaryAndFirstMoment) {
  hps::RngStream rng(4, 0);
  double s = 0;
  const int n = 400;
  for (int k = 0; k < n; ++k) {
    const auto u = hps::sample_haar_unitary(4, rng);
    ASSERT_TRUE(u.is_unitary());
    s += std::norm(u.matrix()(1, 2));
  }
  // E|U_ij|^2 = 1/d with variance (d-1)/(d^2(d+1)).
  EXPECT_NEAR(s / n, 0.25, 4 * std::sqrt(3.0 / 80.0 / n));
}

TEST(Pauli, ParsePhaseAndDense) {
  const auto p = hps::PauliString::parse("XYZI");
  EXPECT_EQ(p.str(), "XYZI");
  EXPECT_THROW(hps::PauliString::parse("XQ"), std::invalid_argument);
  hps::PauliHamiltonian h(3);
  h.add(0.5, "XZI");
  h.add(-1.25, "IYY");
  h.add(0.25, "XZI");
  EXPECT_DOUBLE_EQ(h.coefficient_of("XZI"), 0.75);
  const Mat want = 0.75 * oracle::pauli_string("XZI") - 1.25 * oracle::pauli_string("IYY");
  EXPECT_LT((h.dense() - want).norm(), 1e-14);
  const auto round = hps::PauliHamiltonian::from_text(h.to_text());
  EXPECT_LT((round.dense() - want).norm(), 0.0 + 1e-15);
}

TEST(Pauli, ApplyPauliMatchesDense) {
  PureState psi = random_state(3, 4);
  const Eigen::VectorXcd want = oracle::pauli_string("YIX") * as_vector(psi);
  hps::apply_pauli(psi, "YX", std::vector<int>{0, 2});
  EXPECT_LT((as_vector(psi) - want).norm(), 1e-14);
}

TEST(Spectral, MatchesPadeExponential) {
  hps::PauliHamiltonian h(3);
  h.add(-1.0, "ZZI");
  h.add(-1.0, "IZZ");
  h.add(1.05, "XII");
  h.add(0.3, "IYI");
  const hps::SpectralPropagator prop(h);
  for (double t : {0.0, 0.3, 2.5}) {
    const Mat want = oracle::expm_hermitian(h.dense(), t);
    EXPECT_LT((prop.at(t).matrix() - want).norm(), 1e-11) << "t=" << t;
  }
  EXPECT_LT(hps::operator_distance(prop.at(1.0).matrix(), hps::exact_unitary(h, 1.0).matrix()), 1e-13);
}

TEST(Channel, DepolarizeMatchesKrausSum) {
  const PureState psi = random_state(3, 6);
  auto rho = hps::MixedState::from_pure(psi);
  const Mat want = oracle::depolarize_kraus(rho.matrix(), 0.3, {0, 2}, 3);
  hps::apply_channel_step(rho, hps::DepolarizeStep{0.3, {0, 2}});
  EXPECT_LT((rho.matrix() - want).norm(), 1e-13);
}

TEST(Channel, NoisyCnotMatchesTrajectoryAverage) {
  // Exact channel vs the ensemble of Pauli replacements, enumerated exactly.
  const PureState psi = random_state(3, 12);
  auto rho = hps::MixedState::from_pure(psi);
  const double p = 0.2;
  hps::apply_channel_step(rho, hps::NoisyCnotStep{2, 0, p});
  Mat avg = (1 - p) * oracle::cnot_full(2, 0, 3) * hps::MixedState::from_pure(psi).matrix() *
            oracle::cnot_full(2, 0, 3).adjoint();
  for (int w = 0; w < 16; ++w) {
    PureState t = psi;
    hps::kernel::pauli(t.span(), 3, 2, w >> 2);
    hps::kernel::pauli(t.span(), 3, 0, w & 3);
    avg += (p / 16) * hps::MixedState::from_pure(t).matrix();
  }
  EXPECT_LT((rho.matrix() - avg).norm(), 1e-13);
}

TEST(Channel, UnitaryStepsMatchConjugation) {
  hps::RngStream rng(8, 0);
  const Circuit c = random_circuit(3, 20, rng);
  const PureState psi = random_state(3, 13);
  auto rho = hps::MixedState::from_pure(psi);
  hps::apply_channel_step(rho, hps::UnitaryStep{c});
  PureState out = psi;
  hps::run_circuit(out, c);
  EXPECT_LT((rho.matrix() - hps::MixedState::from_pure(out).matrix()).norm(), 1e-12);
  const auto u = hps::sample_haar_unitary(4, rng);
  hps::apply_channel_step(rho, hps::DenseUnitaryStep{u.matrix(), {2, 0}});
  hps::apply_dense_unitary(out, u.matrix(), std::vector<int>{2, 0});
  EXPECT_LT((rho.matrix() - hps::MixedState::from_pure(out).matrix()).norm(), 1e-12);
}

TEST(Channel, FullDepolarizationGivesMaximallyMixed) {
  auto rho = hps::MixedState::from_pure(random_state(2, 3));
  hps::apply_channel_step(rho, hps::DepolarizeStep{1.0, {0, 1}});
  EXPECT_LT((rho.matrix() - Mat::Identity(4, 4) / 4.0).norm(), 1e-14);
  EXPECT_THROW(hps::apply_channel_step(rho, hps::DepolarizeStep{1.5, {0}}), std::invalid_argument);
}

}  // namespace
