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


#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include "hpscramble/channel.hpp"
#include "hpscramble/circuit.hpp"
#include "hpscramble/circuits.hpp"
#include "hpscramble/core.hpp"
#include "hpscramble/pauli.hpp"
#include "hpscramble/rng.hpp"
#include "hpscramble/state.hpp"
#include "hpscramble/unitary.hpp"

namespace hps {

// ---------------------------------------------------------------------------
// Register layout.

enum class Placement { kIsingDefault, kYmDefault, kExplicit };

inline std::string to_string(Placement p) {
  switch (p) {
    case Placement::kIsingDefault: return "ising_default";
    case Placement::kYmDefault: return "ym_default";
    case Placement::kExplicit: return "explicit";
  }
  return "?";
}

inline Placement parse_placement(const std::string& s) {
  if (s == "ising_default") return Placement::kIsingDefault;
  if (s == "ym_default") return Placement::kYmDefault;
  if (s == "explicit") return Placement::kExplicit;
  throw std::invalid_argument("unknown placement '" + s + "'");
}

/// Global qubit order is [R | S | S' | R'], where S = AB is the system,
/// S' = A'B' its same-site copy, and R, R' hold N_A reference qubits each.
/// A and D are chosen sites of S; D' and A' are the same sites in S'.
struct ProtocolLayout {
  int N = 0;
  int N_A = 0;
  int N_D = 0;
  Placement placement = Placement::kIsingDefault;
  std::vector<int> a_sites;
  std::vector<int> d_sites;

  int total_qubits() const { return 2 * N + 2 * N_A; }
  int r(int k) const { return k; }
  int s(int i) const { return N_A + i; }
  int sp(int i) const { return N_A + N + i; }
  int rp(int k) const { return N_A + 2 * N + k; }

  Index d_A() const { return pow2(N_A); }
  Index d_B() const { return pow2(N - N_A); }
  Index d_C() const { return pow2(N - N_D); }
  Index d_D() const { return pow2(N_D); }
  Index d() const { return pow2(N); }

  std::vector<int> b_sites() const { return complement(a_sites); }
  std::vector<int> c_sites() const { return complement(d_sites); }

  std::vector<int> s_map() const {
    std::vector<int> m(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) m[static_cast<std::size_t>(i)] = s(i);
    return m;
  }
  std::vector<int> sp_map() const {
    std::vector<int> m(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) m[static_cast<std::size_t>(i)] = sp(i);
    return m;
  }

  /// Initial EPR pairs: R-A, B-B', A'-R'.
  std::vector<QubitPair> prep_pairs() const {
    std::vector<QubitPair> p;
    for (int k = 0; k < N_A; ++k) p.push_back({r(k), s(a_sites[static_cast<std::size_t>(k)])});
    for (int b : b_sites()) p.push_back({s(b), sp(b)});
    for (int k = 0; k < N_A; ++k) p.push_back({sp(a_sites[static_cast<std::size_t>(k)]), rp(k)});
    return p;
  }
  std::vector<QubitPair> dd_pairs() const {
    std::vector<QubitPair> p;
    for (int d : d_sites) p.push_back({s(d), sp(d)});
    return p;
  }
  std::vector<QubitPair> rr_pairs() const {
    std::vector<QubitPair> p;
    for (int k = 0; k < N_A; ++k) p.push_back({r(k), rp(k)});
    return p;
  }

 private:
  std::vector<int> complement(const std::vector<int>& sites) const {
    std::vector<int> out;
    for (int i = 0; i < N; ++i)
      if (std::find(sites.begin(), sites.end(), i) == sites.end()) out.push_back(i);
    return out;
  }
};

/// ising_default: A = first N_A sites, D = last N_D sites.
/// ym_default: A = {1..N_A}, D = {N-1-N_D .. N-2}, keeping both off the chain ends.
inline ProtocolLayout make_layout(int N, int N_A, int N_D, Placement placement,
                                  std::vector<int> a_explicit = {}, std::vector<int> d_explicit = {}) {
  if (N < 1) throw std::invalid_argument("N must be at least 1");
  if (N_A < 1 || N_A > N) throw std::invalid_argument("N_A must lie in [1, N]");
  if (N_D < 1 || N_D > N) throw std::invalid_argument("N_D must lie in [1, N]");
  ProtocolLayout L;
  L.N = N;
  L.N_A = N_A;
  L.N_D = N_D;
  L.placement = placement;
  switch (placement) {
    case Placement::kIsingDefault:
      for (int k = 0; k < N_A; ++k) L.a_sites.push_back(k);
      for (int k = N - N_D; k < N; ++k) L.d_sites.push_back(k);
      break;
    case Placement::kYmDefault:
      if (N_A + 2 > N || N_D + 2 > N)
        throw std::invalid_argument("ym_default placement needs N_A + 2 <= N and N_D + 2 <= N");
      for (int k = 1; k <= N_A; ++k) L.a_sites.push_back(k);
      for (int k = N - 1 - N_D; k <= N - 2; ++k) L.d_sites.push_back(k);
      break;
    case Placement::kExplicit:
      L.a_sites = std::move(a_explicit);
      L.d_sites = std::move(d_explicit);
      break;
  }
  auto check = [N](const std::vector<int>& v, std::size_t want, const char* what) {
    if (v.size() != want) throw std::invalid_argument(std::string(what) + " site count mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] < 0 || v[i] >= N) throw std::out_of_range(std::string(what) + " site out of range");
      for (std::size_t j = 0; j < i; ++j)
        if (v[i] == v[j]) throw std::invalid_argument(std::string(what) + " site repeated");
    }
  };
  check(L.a_sites, static_cast<std::size_t>(N_A), "A");
  check(L.d_sites, static_cast<std::size_t>(N_D), "D");
  return L;
}

// ---------------------------------------------------------------------------
// Results and noise.

enum class NoiseScope { kAllCnots, kEvolutionOnly, kWholeUnitary };

inline std::string to_string(NoiseScope s) {
  switch (s) {
    case NoiseScope::kAllCnots: return "all_cnots";
    case NoiseScope::kEvolutionOnly: return "evolution_only";
    case NoiseScope::kWholeUnitary: return "whole_unitary";
  }
  return "?";
}

inline NoiseScope parse_scope(const std::string& s) {
  if (s == "all_cnots") return NoiseScope::kAllCnots;
  if (s == "evolution_only") return NoiseScope::kEvolutionOnly;
  if (s == "whole_unitary") return NoiseScope::kWholeUnitary;
  throw std::invalid_argument("unknown noise scope '" + s + "'");
}

struct NoiseSpec {
  double p = 0.0;
  NoiseScope scope = NoiseScope::kAllCnots;
  std::size_t n_traj = 1;
  std::uint64_t seed = 1;
  std::size_t n_bootstrap = 200;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("noise.p must lie in [0, 1]");
  }
};

struct Diagnostics {
  double s2_r = 0.0;
  double s2_bd = 0.0;
  double s2_rbd = 0.0;
  double i2 = 0.0;
  double delta = 0.0;
  double purity_bd = 0.0;
  double purity_rbd = 0.0;
};

struct HpResult {
  double t = 0.0;
  double p_epr = 0.0;
  double f_epr = 0.0;
  double p_err = 0.0;
  double f_err = 0.0;
  std::size_t n_traj = 0;
  std::optional<Diagnostics> diagnostics;
};

// ---------------------------------------------------------------------------
// Shared building blocks.

/// U on S followed by U* on S', as one circuit on the protocol register.
inline Circuit paired_circuit(const ProtocolLayout& L, const Circuit& u) {
  if (u.n_qubits() != L.N) throw std::invalid_argument("evolution circuit must act on N qubits");
  const int n = L.total_qubits();
  Circuit c = relabel_circuit(u, L.s_map(), n);
  c.append(relabel_circuit(conjugate_circuit(u), L.sp_map(), n));
  c.set_label(u.label());
  return c;
}

/// Initial protocol state |EPR>_{RA} |EPR>_{BB'} |EPR>_{A'R'}.
inline PureState initial_protocol_state(const ProtocolLayout& L) {
  PureState psi(L.total_qubits());
  run_circuit(psi, build_epr_prep(L.prep_pairs(), L.total_qubits()));
  return psi;
}

inline void apply_dense_pair(PureState& psi, const ProtocolLayout& L, const Eigen::MatrixXcd& u) {
  const auto sm = L.s_map(), spm = L.sp_map();
  kernel::apply_dense(psi.span(), psi.n_qubits(), u, sm);
  kernel::apply_dense(psi.span(), psi.n_qubits(), Eigen::MatrixXcd(u.conjugate()), spm);
}

struct ProjectionPair {
  double p = 0.0;
  double joint = 0.0;
};

/// ||Pi_DD' psi||^2 and ||Pi_RR' Pi_DD' psi||^2 (relative to ||psi||^2).
inline ProjectionPair measure_projections(const PureState& psi, const ProtocolLayout& L) {
  PureState w = psi;
  const double n0 = w.norm_squared();
  const auto dd = L.dd_pairs(), rr = L.rr_pairs();
  project_epr_pairs(w, dd);
  const double p = w.norm_squared() / n0;
  project_epr_pairs(w, rr);
  return {p, w.norm_squared() / n0};
}

inline HpResult result_from_projections(const ProjectionPair& pr) {
  HpResult r;
  r.p_epr = pr.p;
  if (pr.p < kProjectionThreshold) throw ProjectionError("EPR projection probability is numerically zero");
  r.f_epr = pr.joint / pr.p;
  return r;
}

/// Runs a circuit on a pure state, replacing each CNOT with probability p by
/// a uniformly drawn two-qubit Pauli (identity included).
inline void run_noisy_circuit(PureState& psi, const Circuit& c, double p, RngStream& rng) {
  const int n = psi.n_qubits();
  const auto v = psi.span();
  for (const Gate& g : c.gates()) {
    if (g.kind == GateKind::kCNOT && p > 0.0 && rng.uniform() < p) {
      const auto which = static_cast<int>(rng.uniform_int(16));
      kernel::pauli(v, n, g.q0, which >> 2);
      kernel::pauli(v, n, g.q1, which & 3);
    } else {
      kernel::apply_gate(v, n, g);
    }
  }
}

namespace detail {

/// Probabilities that all listed qubits read 0: (first list) and (both lists).
inline ProjectionPair zero_outcome_probabilities(std::span<const Complex> amps, int n,
                                                 const std::vector<int>& first,
                                                 const std::vector<int>& second) {
  Index m1 = 0, m2 = 0;
  for (int q : first) m1 |= pow2(bit_of(n, q));
  for (int q : second) m2 |= pow2(bit_of(n, q));
  double total = 0, p = 0, j = 0;
  for (Index i = 0; i < amps.size(); ++i) {
    const double w = std::norm(amps[i]);
    total += w;
    if ((i & m1) == 0) {
      p += w;
      if ((i & m2) == 0) j += w;
    }
  }
  return {p / total, j / total};
}

inline std::vector<int> flatten(const std::vector<QubitPair>& pairs) {
  std::vector<int> out;
  for (const auto& [a, b] : pairs) {
    out.push_back(a);
    out.push_back(b);
  }
  return out;
}

inline std::vector<int> checked_checkpoints(const std::vector<int>& steps) {
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k] < 0) throw std::invalid_argument("checkpoint step counts must be non-negative");
    if (k > 0 && steps[k] <= steps[k - 1])
      throw std::invalid_argument("checkpoint step counts must be strictly increasing");
  }
  return steps;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stderr_of(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace detail

/// Ratio-of-means estimate with bootstrap error over paired samples.
inline std::pair<double, double> bootstrap_ratio(const std::vector<double>& num, const std::vector<double>& den,
                                                 std::size_t n_resamples, RngStream rng) {
  const std::size_t n = num.size();
  const double est = detail::mean_of(num) / detail::mean_of(den);
  if (n < 2 || n_resamples < 2) return {est, 0.0};
  std::vector<double> ratios;
  ratios.reserve(n_resamples);
  for (std::size_t b = 0; b < n_resamples; ++b) {
    double sn = 0, sd = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto idx = static_cast<std::size_t>(rng.uniform_int(n));
      sn += num[idx];
      sd += den[idx];
    }
    ratios.push_back(sd > 0 ? sn / sd : 0.0);
  }
  const double m = detail::mean_of(ratios);
  double s = 0;
  for (double x : ratios) s += (x - m) * (x - m);
  return {est, std::sqrt(s / static_cast<double>(n_resamples - 1))};
}

// ---------------------------------------------------------------------------
// Ideal protocol.

inline HpResult run_hp_ideal(const ProtocolLayout& L, const Circuit& u) {
  PureState psi = initial_protocol_state(L);
  run_circuit(psi, paired_circuit(L, u));
  HpResult r = result_from_projections(measure_projections(psi, L));
  r.n_traj = 1;
  return r;
}

inline HpResult run_hp_ideal(const ProtocolLayout& L, const DenseUnitary& u) {
  if (u.dim() != L.d()) throw std::invalid_argument("unitary dimension must be 2^N");
  PureState psi = initial_protocol_state(L);
  apply_dense_pair(psi, L, u.matrix());
  HpResult r = result_from_projections(measure_projections(psi, L));
  r.n_traj = 1;
  return r;
}

/// Repeats `step` and measures after each checkpoint's cumulative step count.
inline std::vector<HpResult> run_hp_ideal_series(const ProtocolLayout& L, const Circuit& step,
                                                 const std::vector<int>& checkpoints, double dt) {
  const auto steps = detail::checked_checkpoints(checkpoints);
  const Circuit paired = paired_circuit(L, step);
  PureState psi = initial_protocol_state(L);
  std::vector<HpResult> out;
  int done = 0;
  for (int target : steps) {
    for (; done < target; ++done) run_circuit(psi, paired);
    HpResult r = result_from_projections(measure_projections(psi, L));
    r.t = target * dt;
    r.n_traj = 1;
    out.push_back(r);
  }
  return out;
}

/// Exact evolution e^{-iHt} at each listed time.
inline std::vector<HpResult> run_hp_exact_series(const ProtocolLayout& L, const PauliHamiltonian& h,
                                                 const std::vector<double>& times) {
  if (h.n_qubits() != L.N) throw std::invalid_argument("Hamiltonian must act on N qubits");
  const SpectralPropagator prop(h);
  const PureState psi0 = initial_protocol_state(L);
  std::vector<HpResult> out;
  for (double t : times) {
    PureState psi = psi0;
    apply_dense_pair(psi, L, prop.at(t).matrix());
    HpResult r = result_from_projections(measure_projections(psi, L));
    r.t = t;
    r.n_traj = 1;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Noisy protocol: quantum trajectories.

namespace detail {

inline void check_trajectory_scope(const NoiseSpec& noise) {
  noise.validate();
  if (noise.scope == NoiseScope::kWholeUnitary)
    throw std::invalid_argument("trajectory runs support all_cnots and evolution_only scopes");
  if (noise.n_traj < 1) throw std::invalid_argument("noise.n_traj must be at least 1");
}

inline std::vector<HpResult> summarize_trajectories(const std::vector<std::vector<double>>& ps,
                                                    const std::vector<std::vector<double>>& js,
                                                    const std::vector<int>& steps, double dt,
                                                    const NoiseSpec& noise) {
  std::vector<HpResult> out;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    HpResult r;
    r.t = steps[k] * dt;
    r.n_traj = noise.n_traj;
    r.p_epr = mean_of(ps[k]);
    r.p_err = stderr_of(ps[k]);
    if (r.p_epr < kProjectionThreshold)
      throw ProjectionError("mean EPR projection probability is consistent with zero");
    // Bootstrap streams live far above the trajectory stream indices.
    const auto [f, ferr] =
        bootstrap_ratio(js[k], ps[k], noise.n_bootstrap, RngStream(noise.seed, (std::uint64_t{1} << 62) + k));
    r.f_epr = f;
    r.f_err = ferr;
    out.push_back(r);
  }
  return out;
}

}  // namespace detail

/// Per trajectory, each in-scope CNOT is replaced with probability p by a
/// random two-qubit Pauli. P and the joint projection are exact expectation
/// values of each trajectory's state; F is the ratio of their means.
inline std::vector<HpResult> run_hp_trajectories_series(const ProtocolLayout& L, const Circuit& step,
                                                        const std::vector<int>& checkpoints, double dt,
                                                        const NoiseSpec& noise) {
  detail::check_trajectory_scope(noise);
  const auto steps = detail::checked_checkpoints(checkpoints);
  const int n = L.total_qubits();
  const Circuit paired = paired_circuit(L, step);
  const Circuit prep = build_epr_prep(L.prep_pairs(), n);
  const bool noisy_io = noise.scope == NoiseScope::kAllCnots;
  std::vector<QubitPair> meas_pairs = L.dd_pairs();
  for (const auto& pr : L.rr_pairs()) meas_pairs.push_back(pr);
  const Circuit measure = build_epr_measure(meas_pairs, n);
  const auto dd_qubits = detail::flatten(L.dd_pairs());
  const auto rr_qubits = detail::flatten(L.rr_pairs());

  std::vector<std::vector<double>> ps(steps.size(), std::vector<double>(noise.n_traj));
  std::vector<std::vector<double>> js = ps;
  const PureState zero(n);
  for (std::size_t tr = 0; tr < noise.n_traj; ++tr) {
    RngStream rng(noise.seed, tr);
    PureState psi = zero;
    run_noisy_circuit(psi, prep, noisy_io ? noise.p : 0.0, rng);
    int done = 0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      for (; done < steps[k]; ++done) run_noisy_circuit(psi, paired, noise.p, rng);
      ProjectionPair pr;
      if (noisy_io) {
        PureState w = psi;
        run_noisy_circuit(w, measure, noise.p, rng);
        pr = detail::zero_outcome_probabilities(w.span(), n, dd_qubits, rr_qubits);
      } else {
        pr = measure_projections(psi, L);
      }
      ps[k][tr] = pr.p;
      js[k][tr] = pr.joint;
    }
  }
  return detail::summarize_trajectories(ps, js, steps, dt, noise);
}

inline HpResult run_hp_trajectories(const ProtocolLayout& L, const Circuit& u, const NoiseSpec& noise) {
  return run_hp_trajectories_series(L, u, {1}, 0.0, noise).front();
}

// ---------------------------------------------------------------------------
// Noisy protocol: exact density-operator evolution.

namespace detail {

/// Tr[Pi rho Pi] for a product of EPR projectors, applied to rows and columns.
inline void project_rho_pairs(MixedState& rho, const std::vector<QubitPair>& pairs) {
  const int n = rho.n_qubits();
  for (const auto& [a, b] : pairs) {
    kernel::bell_project(rho.flat(), 2 * n, a, b);
    kernel::bell_project(rho.flat(), 2 * n, a + n, b + n);
  }
}

inline ProjectionPair measure_rho(const MixedState& rho, const ProtocolLayout& L, bool noisy_io, double p) {
  const double tr0 = rho.trace().real();
  if (noisy_io) {
    MixedState w = rho;
    std::vector<QubitPair> pairs = L.dd_pairs();
    for (const auto& pr : L.rr_pairs()) pairs.push_back(pr);
    apply_noisy_circuit(w, build_epr_measure(pairs, rho.n_qubits()), p);
    const int n = rho.n_qubits();
    Index m1 = 0, m2 = 0;
    for (int q : flatten(L.dd_pairs())) m1 |= pow2(bit_of(n, q));
    for (int q : flatten(L.rr_pairs())) m2 |= pow2(bit_of(n, q));
    double pp = 0, jj = 0;
    for (Index i = 0; i < w.dim(); ++i) {
      if (i & m1) continue;
      const double diag = w.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
      pp += diag;
      if ((i & m2) == 0) jj += diag;
    }
    return {pp / tr0, jj / tr0};
  }
  MixedState w = rho;
  project_rho_pairs(w, L.dd_pairs());
  const double pp = w.trace().real();
  project_rho_pairs(w, L.rr_pairs());
  return {pp / tr0, w.trace().real() / tr0};
}

/// Reference-system state on [R | S | B'] with the (noisy) evolution applied to S.
struct ChoiRegister {
  int n = 0;
  std::vector<int> r, s, bp;
  std::vector<QubitPair> pairs;

  explicit ChoiRegister(const ProtocolLayout& L) {
    n = 2 * L.N;
    for (int k = 0; k < L.N_A; ++k) r.push_back(k);
    for (int i = 0; i < L.N; ++i) s.push_back(L.N_A + i);
    const auto b = L.b_sites();
    for (std::size_t j = 0; j < b.size(); ++j) bp.push_back(L.N_A + L.N + static_cast<int>(j));
    for (int k = 0; k < L.N_A; ++k) pairs.push_back({r[static_cast<std::size_t>(k)], s[static_cast<std::size_t>(L.a_sites[static_cast<std::size_t>(k)])]});
    for (std::size_t j = 0; j < b.size(); ++j) pairs.push_back({s[static_cast<std::size_t>(b[j])], bp[j]});
  }
};

inline Diagnostics choi_diagnostics(const MixedState& choi, const ChoiRegister& reg, const ProtocolLayout& L,
                                    double p_epr) {
  std::vector<int> bd = reg.bp;
  for (int d : L.d_sites) bd.push_back(reg.s[static_cast<std::size_t>(d)]);
  std::vector<int> rbd = reg.r;
  rbd.insert(rbd.end(), bd.begin(), bd.end());
  Diagnostics g;
  g.s2_r = renyi2(partial_trace(choi, reg.r));
  g.purity_bd = partial_trace(choi, bd).purity();
  g.purity_rbd = partial_trace(choi, rbd).purity();
  g.s2_bd = -std::log2(g.purity_bd);
  g.s2_rbd = -std::log2(g.purity_rbd);
  g.i2 = g.s2_r + g.s2_bd - g.s2_rbd;
  g.delta = std::exp2(g.i2) * p_epr;
  return g;
}

}  // namespace detail

/// Exact channel evolution of the full protocol density operator.
///
/// whole_unitary: the map rho -> (1-p) U rho U^dag + p (I/d) (x) Tr_S rho acts
/// once for U(t) on S and once for U*(t) on S'. all_cnots / evolution_only:
/// every CNOT in scope is followed by two-qubit depolarization of strength p.
/// Diagnostics come from the reference state on [R | S | B'] with the same
/// noise on the evolution (preparation and readout noise excluded).
inline std::vector<HpResult> run_hp_channel_series(const ProtocolLayout& L, const Circuit& step,
                                                   const std::vector<int>& checkpoints, double dt,
                                                   const NoiseSpec& noise, bool diagnostics = true) {
  noise.validate();
  const auto steps = detail::checked_checkpoints(checkpoints);
  const int n = L.total_qubits();
  if (n > 12) throw SizeError("exact channel evolution limited to 12 protocol qubits");
  const double p = noise.p;
  const bool noisy_io = noise.scope == NoiseScope::kAllCnots && p > 0;
  const detail::ChoiRegister reg(L);

  MixedState rho0(n);
  apply_noisy_circuit(rho0, build_epr_prep(L.prep_pairs(), n), noisy_io ? p : 0.0);
  MixedState choi0(reg.n);
  apply_channel_step(choi0, UnitaryStep{build_epr_prep(reg.pairs, reg.n)});

  std::vector<HpResult> out;
  if (noise.scope == NoiseScope::kWholeUnitary) {
    const Eigen::MatrixXcd step_u = circuit_matrix(step);
    const auto d = static_cast<Eigen::Index>(L.d());
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
    int done = 0;
    const auto sm = L.s_map(), spm = L.sp_map();
    for (int target : steps) {
      for (; done < target; ++done) u = step_u * u;
      MixedState rho = rho0;
      apply_channel_step(rho, DenseUnitaryStep{u, sm});
      apply_channel_step(rho, DepolarizeStep{p, sm});
      apply_channel_step(rho, DenseUnitaryStep{u.conjugate(), spm});
      apply_channel_step(rho, DepolarizeStep{p, spm});
      HpResult r = result_from_projections(detail::measure_rho(rho, L, false, p));
      r.t = target * dt;
      if (diagnostics) {
        MixedState choi = choi0;
        apply_channel_step(choi, DenseUnitaryStep{u, reg.s});
        apply_channel_step(choi, DepolarizeStep{p, reg.s});
        r.diagnostics = detail::choi_diagnostics(choi, reg, L, r.p_epr);
      }
      out.push_back(r);
    }
    return out;
  }

  const Circuit paired = paired_circuit(L, step);
  const Circuit choi_step = relabel_circuit(step, reg.s, reg.n);
  MixedState rho = rho0, choi = choi0;
  int done = 0;
  for (int target : steps) {
    for (; done < target; ++done) {
      apply_noisy_circuit(rho, paired, p);
      if (diagnostics) apply_noisy_circuit(choi, choi_step, p);
    }
    HpResult r = result_from_projections(detail::measure_rho(rho, L, noisy_io, p));
    r.t = target * dt;
    if (diagnostics) r.diagnostics = detail::choi_diagnostics(choi, reg, L, r.p_epr);
    out.push_back(r);
  }
  return out;
}

inline HpResult run_hp_channel_exact(const ProtocolLayout& L, const Circuit& u, const NoiseSpec& noise,
                                     bool diagnostics = true) {
  return run_hp_channel_series(L, u, {1}, 0.0, noise, diagnostics).front();
}

/// Whole-unitary depolarization around a dense U.
inline HpResult run_hp_channel_exact(const ProtocolLayout& L, const DenseUnitary& u, const NoiseSpec& noise,
                                     bool diagnostics = true) {
  noise.validate();
  if (noise.scope != NoiseScope::kWholeUnitary && noise.p > 0)
    throw std::invalid_argument("per-CNOT noise needs a circuit, not a dense unitary");
  const int n = L.total_qubits();
  if (n > 12) throw SizeError("exact channel evolution limited to 12 protocol qubits");
  const detail::ChoiRegister reg(L);
  const auto sm = L.s_map(), spm = L.sp_map();
  MixedState rho(n);
  apply_channel_step(rho, UnitaryStep{build_epr_prep(L.prep_pairs(), n)});
  apply_channel_step(rho, DenseUnitaryStep{u.matrix(), sm});
  apply_channel_step(rho, DepolarizeStep{noise.p, sm});
  apply_channel_step(rho, DenseUnitaryStep{u.matrix().conjugate(), spm});
  apply_channel_step(rho, DepolarizeStep{noise.p, spm});
  HpResult r = result_from_projections(detail::measure_rho(rho, L, false, noise.p));
  if (diagnostics) {
    MixedState choi(reg.n);
    apply_channel_step(choi, UnitaryStep{build_epr_prep(reg.pairs, reg.n)});
    apply_channel_step(choi, DenseUnitaryStep{u.matrix(), reg.s});
    apply_channel_step(choi, DepolarizeStep{noise.p, reg.s});
    r.diagnostics = detail::choi_diagnostics(choi, reg, L, r.p_epr);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Haar analytics.

struct HaarBaselines {
  double p_exact = 0.0;
  double p_approx = 0.0;
  double f_exact = 0.0;
  double f_approx = 0.0;
  double purity_rd_exact = 0.0;
  double purity_rd_approx = 0.0;
  std::string p_exact_fraction;
  std::string f_exact_fraction;
};

inline HaarBaselines haar_baselines(Index d_A, Index d_B, Index d_C, Index d_D) {
  using Big = boost::multiprecision::cpp_int;
  using Q = boost::rational<Big>;
  auto pow2_ok = [](Index x) { return x >= 1 && (x & (x - 1)) == 0; };
  if (!pow2_ok(d_A) || !pow2_ok(d_B) || !pow2_ok(d_C) || !pow2_ok(d_D))
    throw std::invalid_argument("dimensions must be powers of two");
  if (d_A * d_B != d_C * d_D) throw std::invalid_argument("dimensions must satisfy d_A d_B = d_C d_D");
  const Big a(d_A), b(d_B), c(d_C), dd(d_D);
  const Big d = a * b;
  const Big d2m1 = d * d - 1;
  HaarBaselines h;
  if (d2m1 == 0) {
    // A single state: U is a phase and nothing scrambles.
    h.p_exact = h.f_exact = h.purity_rd_exact = 1.0;
  } else {
    const Q p = (Q(b * b) + Q(c * c) - Q(c * c, a * a) - Q(1)) / Q(d2m1);
    const Q f = Q(1) / (Q(a * a) * p);
    const Q pur = Q(b * c + a * dd, d2m1) - Q(b * dd + a * c, d * d2m1);
    h.p_exact = boost::rational_cast<double>(p);
    h.f_exact = boost::rational_cast<double>(f);
    h.purity_rd_exact = boost::rational_cast<double>(pur);
    h.p_exact_fraction = p.numerator().str() + "/" + p.denominator().str();
    h.f_exact_fraction = f.numerator().str() + "/" + f.denominator().str();
  }
  const double A = static_cast<double>(d_A), B = static_cast<double>(d_B);
  const double C = static_cast<double>(d_C), D = static_cast<double>(d_D);
  h.p_approx = 1 / (A * A) + 1 / (D * D) - 1 / (A * A * D * D);
  h.f_approx = 1 / (1 + (A / D) * (A / D));
  h.purity_rd_approx = 1 / (A * D) + 1 / (B * C);
  return h;
}

inline HaarBaselines haar_baselines(const ProtocolLayout& L) {
  return haar_baselines(L.d_A(), L.d_B(), L.d_C(), L.d_D());
}

// ---------------------------------------------------------------------------
// Averaged OTOC.

struct McEstimate {
  double mean = 0.0;
  double err = 0.0;
  std::size_t n = 0;
};

/// Tr[O_A W O_A W^dag]/d for W = U^dag O_D U, with Paulis drawn uniformly on
/// the A and D sites. Each distinct W is formed once and reused.
class OtocEvaluator {
 public:
  OtocEvaluator(const ProtocolLayout& L, const DenseUnitary& u) : L_(L), u_(u.matrix()) {
    if (u.dim() != L.d()) throw std::invalid_argument("unitary dimension must be 2^N");
  }

  std::size_t n_a_paulis() const { return pow2(2 * L_.N_A); }
  std::size_t n_d_paulis() const { return pow2(2 * L_.N_D); }

  double value(std::size_t a_index, std::size_t d_index) {
    const Eigen::MatrixXcd& w = heisenberg(d_index);
    const PauliString pa = pauli_on(L_.a_sites, a_index);
    const auto d = static_cast<Eigen::Index>(L_.d());
    std::vector<Complex> ph(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) ph[static_cast<std::size_t>(i)] = pa.phase(static_cast<Index>(i));
    // (P W P)_{ij} = phase(i^x) W_{i^x, j^x} conj(phase(j^x)).
    Complex tr = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto jx = static_cast<Eigen::Index>(static_cast<Index>(j) ^ pa.x_mask);
      const Complex cj = std::conj(ph[static_cast<std::size_t>(jx)]);
      for (Eigen::Index i = 0; i < d; ++i) {
        const auto ix = static_cast<Eigen::Index>(static_cast<Index>(i) ^ pa.x_mask);
        tr += ph[static_cast<std::size_t>(ix)] * w(ix, jx) * cj * std::conj(w(i, j));
      }
    }
    return tr.real() / static_cast<double>(d);
  }

  /// Average over every Pauli pair.
  double exact_average() {
    double s = 0;
    for (std::size_t b = 0; b < n_d_paulis(); ++b)
      for (std::size_t a = 0; a < n_a_paulis(); ++a) s += value(a, b);
    return s / static_cast<double>(n_a_paulis() * n_d_paulis());
  }

 private:
  PauliString pauli_on(const std::vector<int>& sites, std::size_t index) const {
    static constexpr char kChars[4] = {'I', 'X', 'Y', 'Z'};
    std::string s(static_cast<std::size_t>(L_.N), 'I');
    const std::size_t k = sites.size();
    for (std::size_t j = 0; j < k; ++j)
      s[static_cast<std::size_t>(sites[j])] = kChars[(index >> (2 * (k - 1 - j))) & 3];
    return PauliString::parse(s);
  }

  const Eigen::MatrixXcd& heisenberg(std::size_t d_index) {
    auto it = cache_.find(d_index);
    if (it != cache_.end()) return it->second;
    const PauliString pd = pauli_on(L_.d_sites, d_index);
    Eigen::MatrixXcd ou(u_.rows(), u_.cols());
    for (Eigen::Index r = 0; r < u_.rows(); ++r) {
      const auto src = static_cast<Eigen::Index>(static_cast<Index>(r) ^ pd.x_mask);
      ou.row(r) = pd.phase(static_cast<Index>(src)) * u_.row(src);
    }
    return cache_.emplace(d_index, Eigen::MatrixXcd(u_.adjoint() * ou)).first->second;
  }

  ProtocolLayout L_;
  Eigen::MatrixXcd u_;
  std::unordered_map<std::size_t, Eigen::MatrixXcd> cache_;
};

inline McEstimate averaged_otoc_mc(const ProtocolLayout& L, const DenseUnitary& u, std::size_t n_samples,
                                   std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("need at least one OTOC sample");
  OtocEvaluator ev(L, u);
  std::vector<double> vals(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    RngStream rng(seed, k);
    const auto a = static_cast<std::size_t>(rng.uniform_int(ev.n_a_paulis()));
    const auto b = static_cast<std::size_t>(rng.uniform_int(ev.n_d_paulis()));
    vals[k] = ev.value(a, b);
  }
  return {detail::mean_of(vals), detail::stderr_of(vals), n_samples};
}

inline McEstimate averaged_otoc_mc(const ProtocolLayout& L, const Circuit& u, std::size_t n_samples,
                                   std::uint64_t seed) {
  return averaged_otoc_mc(L, circuit_unitary(u), n_samples, seed);
}

// ---------------------------------------------------------------------------
// State teleportation.

/// Input psi on A (no reference R), EPR pairs on BB' and A'R'. The projected
/// output is linear in psi, so one evolved vector per basis input is kept and
/// any psi is then evaluated in O(d_A^3).
class StateTeleporter {
 public:
  StateTeleporter(const ProtocolLayout& L, const Circuit& u) : L_(L) { build([&](PureState& s) {
      run_circuit(s, paired_circuit_on(u));
    }); }
  StateTeleporter(const ProtocolLayout& L, const DenseUnitary& u) : L_(L) {
    build([&](PureState& s) {
      kernel::apply_dense(s.span(), s.n_qubits(), u.matrix(), s_map());
      kernel::apply_dense(s.span(), s.n_qubits(), Eigen::MatrixXcd(u.matrix().conjugate()), sp_map());
    });
  }

  Index d_A() const { return L_.d_A(); }

  /// (P^psi, F^psi) with F^psi = <psi| rho_R' |psi> after the DD' projection.
  std::pair<double, double> evaluate(const std::vector<Complex>& psi) const {
    const auto dA = static_cast<Eigen::Index>(d_A());
    if (static_cast<Eigen::Index>(psi.size()) != dA) throw std::invalid_argument("psi must have d_A entries");
    const Eigen::Map<const Eigen::VectorXcd> v(psi.data(), dA);
    const double nrm = v.squaredNorm();
    if (std::abs(nrm - 1.0) > kNormTolerance) throw std::invalid_argument("psi must be normalized");
    const double p = (v.adjoint() * gram_ * v)(0, 0).real();
    if (p < kProjectionThreshold) throw ProjectionError("EPR projection probability is numerically zero");
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dA, dA);
    for (Eigen::Index a = 0; a < dA; ++a)
      for (Eigen::Index b = 0; b < dA; ++b) rho += v(a) * std::conj(v(b)) * blocks_[static_cast<std::size_t>(a * dA + b)];
    const double pf = (v.adjoint() * rho * v)(0, 0).real();
    return {p, pf / p};
  }

 private:
  int n_total() const { return 2 * L_.N + L_.N_A; }
  std::vector<int> s_map() const {
    std::vector<int> m;
    for (int i = 0; i < L_.N; ++i) m.push_back(i);
    return m;
  }
  std::vector<int> sp_map() const {
    std::vector<int> m;
    for (int i = 0; i < L_.N; ++i) m.push_back(L_.N + i);
    return m;
  }
  int rp(int k) const { return 2 * L_.N + k; }

  Circuit paired_circuit_on(const Circuit& u) const {
    if (u.n_qubits() != L_.N) throw std::invalid_argument("evolution circuit must act on N qubits");
    Circuit c = relabel_circuit(u, s_map(), n_total());
    c.append(relabel_circuit(conjugate_circuit(u), sp_map(), n_total()));
    return c;
  }

  template <typename Evolve>
  void build(Evolve&& evolve) {
    const int n = n_total();
    if (n > kMaxStateQubits) throw SizeError("teleportation register too large");
    std::vector<QubitPair> prep;
    for (int b : L_.b_sites()) prep.push_back({b, L_.N + b});
    for (int k = 0; k < L_.N_A; ++k) prep.push_back({L_.N + L_.a_sites[static_cast<std::size_t>(k)], rp(k)});
    std::vector<QubitPair> dd;
    for (int d : L_.d_sites) dd.push_back({d, L_.N + d});
    std::vector<int> rprime;
    for (int k = 0; k < L_.N_A; ++k) rprime.push_back(rp(k));

    const auto dA = static_cast<Eigen::Index>(d_A());
    PureState base(n);
    run_circuit(base, build_epr_prep(prep, n));
    std::vector<Eigen::MatrixXcd> outs;  // per basis input: R' x rest block
    std::vector<PureState> states;
    for (Eigen::Index a = 0; a < dA; ++a) {
      PureState s = base;
      for (int k = 0; k < L_.N_A; ++k)
        if ((static_cast<Index>(a) >> (L_.N_A - 1 - k)) & 1U)
          kernel::pauli_x(s.span(), n, L_.a_sites[static_cast<std::size_t>(k)]);
      evolve(s);
      project_epr_pairs(s, dd);
      outs.push_back(detail::gather_block(s, rprime));
      states.push_back(std::move(s));
    }
    gram_ = Eigen::MatrixXcd(dA, dA);
    for (Eigen::Index a = 0; a < dA; ++a)
      for (Eigen::Index b = 0; b < dA; ++b)
        gram_(a, b) = states[static_cast<std::size_t>(a)].inner(states[static_cast<std::size_t>(b)]);
    blocks_.resize(static_cast<std::size_t>(dA * dA));
    for (Eigen::Index a = 0; a < dA; ++a)
      for (Eigen::Index b = 0; b < dA; ++b)
        blocks_[static_cast<std::size_t>(a * dA + b)] =
            outs[static_cast<std::size_t>(a)] * outs[static_cast<std::size_t>(b)].adjoint();
  }

  ProtocolLayout L_;
  Eigen::MatrixXcd gram_;
  std::vector<Eigen::MatrixXcd> blocks_;
};

inline std::pair<double, double> run_state_teleportation(const ProtocolLayout& L, const Circuit& u,
                                                         const std::vector<Complex>& psi) {
  return StateTeleporter(L, u).evaluate(psi);
}

// ---------------------------------------------------------------------------
// Entropic diagnostics of the ideal reference state.

struct ScramblingEntropies {
  double i2_r_bd = 0.0;
  double i_r_bd = 0.0;
  double i_r_c = 0.0;
  double i_r_d = 0.0;
  double i3_r_c_d = 0.0;
};

namespace detail {

inline std::vector<int> complement_of(int n, const std::vector<int>& subset) {
  std::vector<int> out;
  for (int q = 0; q < n; ++q)
    if (std::find(subset.begin(), subset.end(), q) == subset.end()) out.push_back(q);
  return out;
}

/// Entropies of a pure state's subsystem, evaluated on the smaller side.
inline Entropies subsystem_entropies(const PureState& psi, const std::vector<int>& subset) {
  if (subset.empty() || static_cast<int>(subset.size()) == psi.n_qubits()) return {0.0, 0.0};
  const auto comp = complement_of(psi.n_qubits(), subset);
  const auto& small = subset.size() <= comp.size() ? subset : comp;
  return entropies(reduced_density(psi, small));
}

}  // namespace detail

/// Mutual informations of |Psi> = (U (x) I)|EPR>_{RA}|EPR>_{BB'} on [R | S | B'].
inline ScramblingEntropies scrambling_entropies(const ProtocolLayout& L, const DenseUnitary& u,
                                                bool renyi_only = false) {
  const detail::ChoiRegister reg(L);
  PureState psi(reg.n);
  run_circuit(psi, build_epr_prep(reg.pairs, reg.n));
  kernel::apply_dense(psi.span(), reg.n, u.matrix(), reg.s);
  std::vector<int> d, c;
  for (int x : L.d_sites) d.push_back(reg.s[static_cast<std::size_t>(x)]);
  for (int x : L.c_sites()) c.push_back(reg.s[static_cast<std::size_t>(x)]);
  std::vector<int> bd = reg.bp;
  bd.insert(bd.end(), d.begin(), d.end());
  auto join = [](std::vector<int> a, const std::vector<int>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  auto s2 = [&](const std::vector<int>& sub) {
    const auto comp = detail::complement_of(reg.n, sub);
    return -std::log2(reduced_purity(psi, sub.size() <= comp.size() ? sub : comp));
  };
  ScramblingEntropies out;
  out.i2_r_bd = s2(reg.r) + s2(bd) - s2(join(reg.r, bd));
  if (renyi_only) return out;
  auto S = [&](const std::vector<int>& sub) { return detail::subsystem_entropies(psi, sub).von_neumann; };
  const double sr = S(reg.r);
  out.i_r_bd = sr + S(bd) - S(join(reg.r, bd));
  out.i_r_c = sr + S(c) - S(join(reg.r, c));
  out.i_r_d = sr + S(d) - S(join(reg.r, d));
  const double i_r_cd = sr + S(join(c, d)) - S(join(reg.r, join(c, d)));
  out.i3_r_c_d = out.i_r_c + out.i_r_d - i_r_cd;
  return out;
}

inline ScramblingEntropies scrambling_entropies(const ProtocolLayout& L, const Circuit& u, bool renyi_only = false) {
  return scrambling_entropies(L, circuit_unitary(u), renyi_only);
}

}  // namespace hps
