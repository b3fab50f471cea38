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
using hps::NoiseScope;
using hps::NoiseSpec;
using hps::Placement;
using hps::ProtocolLayout;

Circuit chaotic_ising(int N, double t, int M) {
  return hps::build_trotter_ising({N, -1.05, 0.5}, {t, M});
}

Circuit random_circuit(int n, int gates, hps::RngStream& rng) {
  Circuit c(n);
  for (int k = 0; k < gates; ++k) {
    const int q = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    switch (rng.uniform_int(3)) {
      case 0: c.h(q); break;
      case 1: c.rz(q, 6 * rng.uniform() - 3); break;
      default: c.cnot(q, (q + 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - 1)))) % n);
    }
  }
  return c;
}

TEST(Layout, DefaultsAndDimensions) {
  const auto L = hps::make_layout(8, 1, 2, Placement::kIsingDefault);
  EXPECT_EQ(L.d_A(), 2U);
  EXPECT_EQ(L.d_B(), 128U);
  EXPECT_EQ(L.d_C(), 64U);
  EXPECT_EQ(L.d_D(), 4U);
  EXPECT_EQ(L.a_sites, (std::vector<int>{0}));
  EXPECT_EQ(L.d_sites, (std::vector<int>{6, 7}));
  EXPECT_EQ(L.total_qubits(), 18);
  EXPECT_EQ(L.r(0), 0);
  EXPECT_EQ(L.s(0), 1);
  EXPECT_EQ(L.sp(7), 16);
  EXPECT_EQ(L.rp(0), 17);
  const auto Y = hps::make_layout(8, 1, 2, Placement::kYmDefault);
  EXPECT_EQ(Y.a_sites, (std::vector<int>{1}));
  EXPECT_EQ(Y.d_sites, (std::vector<int>{5, 6}));
  const auto E = hps::make_layout(5, 2, 1, Placement::kExplicit, {4, 2}, {2});
  EXPECT_EQ(E.a_sites, (std::vector<int>{4, 2}));
  EXPECT_EQ(E.d_sites, (std::vector<int>{2}));
}

TEST(Layout, Rejections) {
  EXPECT_THROW(hps::make_layout(4, 1, 5, Placement::kIsingDefault), std::invalid_argument);
  EXPECT_THROW(hps::make_layout(4, 0, 1, Placement::kIsingDefault), std::invalid_argument);
  EXPECT_THROW(hps::make_layout(4, 1, 1, Placement::kExplicit, {4}, {0}), std::out_of_range);
  EXPECT_THROW(hps::make_layout(4, 2, 1, Placement::kExplicit, {1, 1}, {0}), std::invalid_argument);
  EXPECT_THROW(hps::make_layout(3, 2, 1, Placement::kYmDefault), std::invalid_argument);
}

TEST(Ideal, IdentityAnchor) {
  for (int NA : {1, 2}) {
    const auto L = hps::make_layout(4, NA, 2, Placement::kIsingDefault);
    const auto r = hps::run_hp_ideal(L, Circuit(4));
    EXPECT_NEAR(r.p_epr, 1.0, 1e-12);
    EXPECT_NEAR(r.f_epr, 1.0 / static_cast<double>(L.d_A() * L.d_A()), 1e-12);
  }
}

TEST(Ideal, SwapRoutesInputToOutput) {
  // With A moved onto D, DD' projection always succeeds with 1/d_A^2 and
  // the reference pair is recovered perfectly.
  const auto L = hps::make_layout(2, 1, 1, Placement::kIsingDefault);
  Circuit swap(2);
  swap.cnot(0, 1).cnot(1, 0).cnot(0, 1);
  const auto r = hps::run_hp_ideal(L, swap);
  EXPECT_NEAR(r.p_epr, 0.25, 1e-12);
  EXPECT_NEAR(r.f_epr, 1.0, 1e-12);
}

TEST(Ideal, IdentityAndLowerBoundOnRandomCircuits) {
  hps::RngStream rng(17, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto L = hps::make_layout(5, 1 + trial % 2, 1 + trial % 3, Placement::kIsingDefault);
    const Circuit u = random_circuit(5, 60, rng);
    const auto r = hps::run_hp_ideal(L, u);
    const double dA2 = static_cast<double>(L.d_A() * L.d_A());
    const double dD2 = static_cast<double>(L.d_D() * L.d_D());
    EXPECT_NEAR(r.f_epr * r.p_epr * dA2, 1.0, 1e-9);
    EXPECT_GE(r.p_epr, std::max(1 / dA2, 1 / dD2) - 1e-9);
    EXPECT_LE(r.p_epr, 1.0 + 1e-12);
    // Independent route: purity of B'D on the reference state.
    EXPECT_NEAR(r.p_epr, oracle::p_epr_from_purity(L, hps::circuit_matrix(u)), 1e-10);
  }
}

TEST(Ideal, DenseAndCircuitAgree) {
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  const Circuit u = chaotic_ising(4, 1.0, 10);
  const auto a = hps::run_hp_ideal(L, u);
  const auto b = hps::run_hp_ideal(L, hps::circuit_unitary(u));
  EXPECT_NEAR(a.p_epr, b.p_epr, 1e-12);
  EXPECT_NEAR(a.f_epr, b.f_epr, 1e-12);
}

TEST(Ideal, FrozenIsingValue) {
  // Chaotic Ising, N = 4, t = 1, M = 10; computed with the purity oracle.
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  const Circuit u = chaotic_ising(4, 1.0, 10);
  const double want = oracle::p_epr_from_purity(L, hps::circuit_matrix(u));
  EXPECT_NEAR(want, 0.79765630346465743, 1e-12);
  EXPECT_NEAR(hps::run_hp_ideal(L, u).p_epr, want, 1e-12);
}

TEST(Ideal, SeriesMatchesSingleRuns) {
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  const Circuit step = hps::build_ising_step({4, 1.0, 0.0}, 0.1);
  const auto s = hps::run_hp_ideal_series(L, step, {0, 3, 7}, 0.1);
  ASSERT_EQ(s.size(), 3U);
  EXPECT_NEAR(s[0].p_epr, 1.0, 1e-12);
  EXPECT_NEAR(s[2].t, 0.7, 1e-12);
  const auto one = hps::run_hp_ideal(L, hps::repeat_circuit(step, 7, "u"));
  EXPECT_NEAR(s[2].p_epr, one.p_epr, 1e-12);
  EXPECT_THROW(hps::run_hp_ideal_series(L, step, {3, 3}, 0.1), std::invalid_argument);
}

TEST(Ideal, ExactSeriesApproachedByTrotter) {
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  const auto exact = hps::run_hp_exact_series(L, hps::ising_hamiltonian({4, -1.05, 0.5}), {2.0});
  const auto coarse = hps::run_hp_ideal(L, chaotic_ising(4, 2.0, 20));
  const auto fine = hps::run_hp_ideal(L, chaotic_ising(4, 2.0, 80));
  EXPECT_LT(std::abs(fine.p_epr - exact[0].p_epr), std::abs(coarse.p_epr - exact[0].p_epr));
  EXPECT_LT(std::abs(fine.p_epr - exact[0].p_epr), 5e-3);
}

class ChannelModes : public ::testing::TestWithParam<double> {};

TEST_P(ChannelModes, WholeUnitaryClosedFormAndRenyiIdentity) {
  const double p = GetParam();
  const auto L = hps::make_layout(3, 1, 1, Placement::kIsingDefault);
  const Circuit u = chaotic_ising(3, 1.5, 15);
  const double p_ideal = hps::run_hp_ideal(L, u).p_epr;
  NoiseSpec ns;
  ns.p = p;
  ns.scope = NoiseScope::kWholeUnitary;
  const auto r = hps::run_hp_channel_exact(L, u, ns);
  const double dD2 = static_cast<double>(L.d_D() * L.d_D());
  EXPECT_NEAR(r.p_epr, (1 - p) * (1 - p) * p_ideal + (2 * p - p * p) / dD2, 1e-10);
  ASSERT_TRUE(r.diagnostics.has_value());
  const auto& g = *r.diagnostics;
  EXPECT_NEAR(4 * r.f_epr, std::exp2(g.i2), 1e-9);
  EXPECT_NEAR(g.delta, std::exp2(g.i2) * r.p_epr, 1e-12);
  const double dA = 2, dB = 4, dD = 2;
  EXPECT_NEAR(g.purity_bd, dD / dB * r.p_epr, 1e-10);
  EXPECT_NEAR(g.purity_rbd, dA * dD / dB * r.p_epr * r.f_epr, 1e-10);
  EXPECT_NEAR(g.s2_r, 1.0, 1e-10);

  ns.scope = NoiseScope::kEvolutionOnly;
  const auto e = hps::run_hp_channel_exact(L, u, ns);
  EXPECT_NEAR(4 * e.f_epr, std::exp2(e.diagnostics->i2), 1e-9);
  EXPECT_NEAR(e.diagnostics->purity_bd, dD / dB * e.p_epr, 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Grid, ChannelModes, ::testing::Values(0.0, 0.01, 0.05, 0.2, 1.0));

TEST(Channel, NoiseMonotoneInWholeUnitaryMode) {
  const auto L = hps::make_layout(3, 1, 1, Placement::kIsingDefault);
  const Circuit u = chaotic_ising(3, 2.0, 20);
  double prev = 2;
  for (double p : {0.0, 0.1, 0.3, 0.6, 1.0}) {
    NoiseSpec ns;
    ns.p = p;
    ns.scope = NoiseScope::kWholeUnitary;
    const double v = hps::run_hp_channel_exact(L, u, ns, false).p_epr;
    EXPECT_LE(v, prev + 1e-10);
    prev = v;
  }
  EXPECT_NEAR(prev, 0.25, 1e-12);
}

TEST(Channel, ZeroNoiseMatchesIdealInAllScopes) {
  const auto L = hps::make_layout(3, 1, 2, Placement::kIsingDefault);
  const Circuit u = chaotic_ising(3, 1.0, 10);
  const auto ideal = hps::run_hp_ideal(L, u);
  for (auto scope : {NoiseScope::kAllCnots, NoiseScope::kEvolutionOnly, NoiseScope::kWholeUnitary}) {
    NoiseSpec ns;
    ns.scope = scope;
    const auto r = hps::run_hp_channel_exact(L, u, ns);
    EXPECT_NEAR(r.p_epr, ideal.p_epr, 1e-12);
    EXPECT_NEAR(r.f_epr, ideal.f_epr, 1e-12);
  }
}

TEST(Channel, WholeUnitarySeriesMatchesSingleRun) {
  const auto L = hps::make_layout(3, 1, 1, Placement::kIsingDefault);
  const Circuit step = hps::build_ising_step({3, -1.05, 0.5}, 0.1);
  NoiseSpec ns;
  ns.p = 0.1;
  ns.scope = NoiseScope::kWholeUnitary;
  const auto series = hps::run_hp_channel_series(L, step, {2, 5}, 0.1, ns);
  const auto single = hps::run_hp_channel_exact(L, hps::repeat_circuit(step, 5, "u"), ns);
  EXPECT_NEAR(series[1].p_epr, single.p_epr, 1e-12);
  EXPECT_NEAR(series[1].f_epr, single.f_epr, 1e-12);
}

TEST(Channel, SizeBound) {
  const auto L = hps::make_layout(6, 1, 2, Placement::kIsingDefault);
  EXPECT_THROW(hps::run_hp_channel_exact(L, Circuit(6), NoiseSpec{}), hps::SizeError);
}

TEST(Trajectories, ZeroNoiseIsIdeal) {
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  const Circuit u = chaotic_ising(4, 1.0, 10);
  const auto ideal = hps::run_hp_ideal(L, u);
  NoiseSpec ns;
  ns.n_traj = 3;
  const auto r = hps::run_hp_trajectories(L, u, ns);
  EXPECT_NEAR(r.p_epr, ideal.p_epr, 1e-12);
  EXPECT_NEAR(r.f_epr, ideal.f_epr, 1e-12);
  EXPECT_NEAR(r.p_err, 0.0, 1e-12);
}

TEST(Trajectories, Deterministic) {
  const auto L = hps::make_layout(3, 1, 1, Placement::kIsingDefault);
  NoiseSpec ns;
  ns.p = 0.1;
  ns.n_traj = 20;
  ns.seed = 99;
  const Circuit u = chaotic_ising(3, 1.0, 5);
  const auto a = hps::run_hp_trajectories(L, u, ns);
  const auto b = hps::run_hp_trajectories(L, u, ns);
  EXPECT_EQ(a.p_epr, b.p_epr);
  EXPECT_EQ(a.f_err, b.f_err);
  ns.scope = NoiseScope::kWholeUnitary;
  EXPECT_THROW(hps::run_hp_trajectories(L, u, ns), std::invalid_argument);
}

class TrajectoryScopes : public ::testing::TestWithParam<NoiseScope> {};

TEST_P(TrajectoryScopes, AgreeWithChannel) {
  const auto L = hps::make_layout(3, 1, 1, Placement::kIsingDefault);
  const Circuit u = chaotic_ising(3, 1.0, 5);
  NoiseSpec ns;
  ns.p = 0.05;
  ns.scope = GetParam();
  ns.n_traj = 3000;
  const auto exact = hps::run_hp_channel_exact(L, u, ns, false);
  const auto traj = hps::run_hp_trajectories(L, u, ns);
  EXPECT_LT(std::abs(traj.p_epr - exact.p_epr), 4 * traj.p_err + 1e-12);
  EXPECT_LT(std::abs(traj.f_epr - exact.f_epr), 4 * traj.f_err + 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Scopes, TrajectoryScopes,
                         ::testing::Values(NoiseScope::kAllCnots, NoiseScope::kEvolutionOnly));

TEST(Haar, Baselines) {
  const auto h = hps::haar_baselines(2, 128, 64, 4);
  EXPECT_EQ(h.p_exact_fraction, "1297/4369");  // = 19455/65535
  EXPECT_NEAR(h.p_exact, 19455.0 / 65535.0, 1e-15);
  EXPECT_NEAR(h.f_exact, 65535.0 / 77820.0, 1e-15);
  EXPECT_NEAR(h.p_approx, 0.296875, 1e-15);
  EXPECT_NEAR(h.f_approx, 0.8, 1e-15);
  EXPECT_NEAR(h.purity_rd_exact, 0.125086, 5e-7);
  EXPECT_NEAR(h.purity_rd_approx, 0.125122, 5e-7);
  EXPECT_THROW(hps::haar_baselines(2, 3, 2, 3), std::invalid_argument);
  EXPECT_THROW(hps::haar_baselines(2, 4, 2, 2), std::invalid_argument);
}

TEST(Haar, SampleMeanMatchesClosedForm) {
  const auto L = hps::make_layout(3, 1, 1, Placement::kIsingDefault);
  const auto h = hps::haar_baselines(L);
  std::vector<double> ps;
  for (std::uint64_t k = 0; k < 300; ++k) {
    hps::RngStream rng(5, k);
    ps.push_back(hps::run_hp_ideal(L, hps::sample_haar_unitary(8, rng)).p_epr);
  }
  EXPECT_LT(std::abs(hps::detail::mean_of(ps) - h.p_exact), 3.5 * hps::detail::stderr_of(ps));
}

TEST(Otoc, ExactAverageEqualsProjection) {
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  for (double t : {0.3, 1.0, 3.0}) {
    const auto u = hps::circuit_unitary(chaotic_ising(4, t, 10));
    hps::OtocEvaluator ev(L, u);
    EXPECT_NEAR(ev.exact_average(), hps::run_hp_ideal(L, u).p_epr, 1e-10) << t;
  }
}

TEST(Otoc, IdentityGivesOne) {
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  const auto est = hps::averaged_otoc_mc(L, hps::DenseUnitary::identity(16), 50, 3);
  EXPECT_NEAR(est.mean, 1.0, 1e-12);
  EXPECT_NEAR(est.err, 0.0, 1e-12);
}

TEST(Otoc, SampleBounds) {
  const auto L = hps::make_layout(4, 2, 2, Placement::kIsingDefault);
  hps::OtocEvaluator ev(L, hps::circuit_unitary(chaotic_ising(4, 2.0, 20)));
  for (std::size_t a = 0; a < ev.n_a_paulis(); ++a)
    for (std::size_t b = 0; b < ev.n_d_paulis(); ++b) {
      const double v = ev.value(a, b);
      EXPECT_LE(std::abs(v), 1.0 + 1e-12);
    }
}

TEST(Teleport, IdentityAndSwap) {
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  const std::vector<hps::Complex> psi = {0.6, hps::Complex(0, 0.8)};
  const auto [p, f] = hps::run_state_teleportation(L, Circuit(4), psi);
  EXPECT_NEAR(p, 1.0, 1e-12);
  EXPECT_NEAR(f, 0.5, 1e-12);
  const auto L2 = hps::make_layout(2, 1, 1, Placement::kIsingDefault);
  Circuit swap(2);
  swap.cnot(0, 1).cnot(1, 0).cnot(0, 1);
  const auto [p2, f2] = hps::run_state_teleportation(L2, swap, psi);
  EXPECT_NEAR(p2, 0.25, 1e-12);
  EXPECT_NEAR(f2, 1.0, 1e-12);
  EXPECT_THROW(hps::run_state_teleportation(L, Circuit(4), {1.0, 1.0}), std::invalid_argument);
}

TEST(Teleport, BasisAverageMatchesEprProtocol) {
  // Averaging P^psi F^psi over a 2-design of inputs gives
  // (P_EPR + 1/d_A)/(d_A + 1); the six Pauli eigenstates form one for a qubit.
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  const Circuit u = chaotic_ising(4, 2.0, 20);
  const hps::StateTeleporter tp(L, u);
  const double r = 1 / std::sqrt(2.0);
  const std::vector<std::vector<hps::Complex>> states = {
      {1, 0}, {0, 1}, {r, r}, {r, -r}, {r, hps::Complex(0, r)}, {r, hps::Complex(0, -r)}};
  double s = 0;
  for (const auto& psi : states) {
    const auto [p, f] = tp.evaluate(psi);
    s += p * f;
  }
  const double P = hps::run_hp_ideal(L, u).p_epr;
  EXPECT_NEAR(s / 6, (P + 0.5) / 3, 1e-12);
}

TEST(Entropies, IdentityRoutesInformationLocally) {
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  const auto e = hps::scrambling_entropies(L, Circuit(4));
  EXPECT_NEAR(e.i_r_bd, 0.0, 1e-10);
  EXPECT_NEAR(e.i_r_c, 2.0, 1e-10);
  EXPECT_NEAR(e.i_r_d, 0.0, 1e-10);
  EXPECT_NEAR(e.i2_r_bd, 0.0, 1e-10);
}

TEST(Entropies, RenyiBoundAndTripartiteSign) {
  const auto L = hps::make_layout(4, 1, 2, Placement::kIsingDefault);
  hps::RngStream rng(3, 0);
  const auto u = hps::sample_haar_unitary(16, rng);
  const auto e = hps::scrambling_entropies(L, u);
  EXPECT_LE(e.i2_r_bd, e.i_r_bd + 1e-9);
  EXPECT_LT(e.i3_r_c_d, 0.0);
  const auto only = hps::scrambling_entropies(L, u, true);
  EXPECT_NEAR(only.i2_r_bd, e.i2_r_bd, 1e-12);
  // Renyi-2 mutual information ties to the projection fidelity.
  EXPECT_NEAR(std::exp2(e.i2_r_bd), 4 * hps::run_hp_ideal(L, u).f_epr, 1e-9);
}

TEST(Bootstrap, RatioEstimator) {
  const std::vector<double> num = {1, 2, 3, 4}, den = {2, 4, 6, 8};
  const auto [est, err] = hps::bootstrap_ratio(num, den, 200, hps::RngStream(1, 0));
  EXPECT_DOUBLE_EQ(est, 0.5);
  EXPECT_NEAR(err, 0.0, 1e-15);
}

}  // namespace
