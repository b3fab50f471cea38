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

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hpscramble/circuit.hpp"
#include "hpscramble/core.hpp"
#include "hpscramble/pauli.hpp"
#include "hpscramble/state.hpp"

namespace hps {

using QubitPair = std::pair<int, int>;

struct TrotterSpec {
  double t = 0.0;
  int M = 1;

  double dt() const { return t / M; }
  void validate() const {
    if (M < 1) throw std::invalid_argument("Trotter step count must be at least 1");
    if (t < 0) throw std::invalid_argument("evolution time must be non-negative");
  }
};

/// H = -sum Z_i Z_{i+1} - h sum X_i - m sum Z_i, open chain.
struct IsingParams {
  int N = 8;
  double h = 0.0;
  double m = 0.0;
};

/// Yang-Mills-Ising chain with magnetic coupling K.
struct YmParams {
  int N = 8;
  double K = 0.0;
};

namespace detail {

inline void check_disjoint_pairs(std::span<const QubitPair> pairs) {
  std::vector<int> seen;
  for (const auto& [a, b] : pairs) {
    if (a == b) throw std::invalid_argument("EPR pair uses one qubit twice");
    for (int q : {a, b}) {
      for (int s : seen)
        if (s == q) throw std::invalid_argument("EPR pairs overlap");
      seen.push_back(q);
    }
  }
}

}  // namespace detail

/// H on each first qubit, then one CNOT per pair.
inline Circuit build_epr_prep(std::span<const QubitPair> pairs, int n_qubits) {
  detail::check_disjoint_pairs(pairs);
  Circuit c(n_qubits, "epr_prep");
  for (const auto& pr : pairs) c.h(pr.first);
  for (const auto& [a, b] : pairs) c.cnot(a, b);
  return c;
}

/// Bell-basis rotation; the pair was an EPR pair iff both qubits then read 0.
inline Circuit build_epr_measure(std::span<const QubitPair> pairs, int n_qubits) {
  detail::check_disjoint_pairs(pairs);
  Circuit c(n_qubits, "epr_measure");
  for (const auto& [a, b] : pairs) c.cnot(a, b);
  for (const auto& pr : pairs) c.h(pr.first);
  return c;
}

/// Projects pairs in place onto EPR states and returns the (relative) probability.
/// The state is left unnormalized with the norm-deferred flag set.
inline double project_epr_pairs(PureState& state, std::span<const QubitPair> pairs) {
  detail::check_disjoint_pairs(pairs);
  const double before = state.norm_squared();
  for (const auto& [a, b] : pairs) kernel::bell_project(state.span(), state.n_qubits(), a, b);
  state.set_norm_deferred(true);
  return before > 0 ? state.norm_squared() / before : 0.0;
}

struct ProjectionResult {
  double prob = 0.0;
  /// False when the projection probability is below the meaningful threshold;
  /// `projected` is then left unnormalized.
  bool possible = false;
  PureState projected;
};

inline ProjectionResult epr_projector_overlap(const PureState& state, std::span<const QubitPair> pairs) {
  ProjectionResult out;
  out.projected = state;
  out.prob = project_epr_pairs(out.projected, pairs);
  out.possible = out.prob >= kProjectionThreshold;
  if (out.possible) out.projected.normalize();
  return out;
}

/// exp(-i theta/2 P) for P in {Z, X, ZZ, XZ, ZXZ}; sites[j] carries axis[j].
inline Circuit build_pauli_rotation(const std::string& axis, double theta, std::span<const int> sites,
                                    int n_qubits) {
  if (sites.size() != axis.size()) throw std::invalid_argument("site count does not match axis");
  Circuit c(n_qubits, axis);
  if (axis == "Z") {
    c.rz(sites[0], theta);
  } else if (axis == "X") {
    c.h(sites[0]).rz(sites[0], theta).h(sites[0]);
  } else if (axis == "ZZ") {
    c.cnot(sites[0], sites[1]).rz(sites[1], theta).cnot(sites[0], sites[1]);
  } else if (axis == "XZ") {
    const int x = sites[0], z = sites[1];
    c.h(x).cnot(x, z).rz(z, theta).cnot(x, z).h(x);
  } else if (axis == "ZXZ") {
    const int z1 = sites[0], x = sites[1], z2 = sites[2];
    c.h(x).cnot(z1, z2).cnot(x, z2).rz(z2, theta).cnot(x, z2).cnot(z1, z2).h(x);
  } else {
    throw std::invalid_argument("unsupported rotation axis: " + axis);
  }
  return c;
}

inline Circuit build_pauli_rotation(const std::string& axis, double theta, std::initializer_list<int> sites,
                                    int n_qubits) {
  return build_pauli_rotation(axis, theta, std::span<const int>(sites.begin(), sites.size()), n_qubits);
}

inline PauliHamiltonian ising_hamiltonian(const IsingParams& p) {
  if (p.N < 2) throw std::invalid_argument("Ising chain needs N >= 2");
  PauliHamiltonian h(p.N);
  const std::string id(static_cast<std::size_t>(p.N), 'I');
  for (int i = 0; i + 1 < p.N; ++i) {
    std::string s = id;
    s[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i) + 1] = 'Z';
    h.add(-1.0, s);
  }
  for (int i = 0; i < p.N; ++i) {
    std::string s = id;
    s[static_cast<std::size_t>(i)] = 'X';
    if (p.h != 0.0) h.add(-p.h, s);
  }
  for (int i = 0; i < p.N; ++i) {
    std::string s = id;
    s[static_cast<std::size_t>(i)] = 'Z';
    if (p.m != 0.0) h.add(-p.m, s);
  }
  return h;
}

/// One first-order step: X layer first in time, then ZZ bonds and Z fields.
inline Circuit build_ising_step(const IsingParams& p, double dt) {
  if (p.N < 2) throw std::invalid_argument("Ising chain needs N >= 2");
  Circuit c(p.N, "ising_step");
  if (p.h != 0.0)
    for (int i = 0; i < p.N; ++i) c.h(i).rz(i, -2.0 * p.h * dt).h(i);
  for (int i = 0; i + 1 < p.N; ++i) c.cnot(i, i + 1).rz(i + 1, -2.0 * dt).cnot(i, i + 1);
  if (p.m != 0.0)
    for (int i = 0; i < p.N; ++i) c.rz(i, -2.0 * p.m * dt);
  return c;
}

inline Circuit repeat_circuit(const Circuit& step, int M, std::string label) {
  Circuit c(step.n_qubits(), std::move(label));
  c.reserve(step.size() * static_cast<std::size_t>(M));
  for (int k = 0; k < M; ++k) c.append(step);
  return c;
}

inline Circuit build_trotter_ising(const IsingParams& p, const TrotterSpec& spec) {
  spec.validate();
  return repeat_circuit(build_ising_step(p, spec.dt()), spec.M, "trotter_ising");
}

/// One step of the Yang-Mills-Ising chain. Magnetic factors come first in
/// time, site by site in the order X, XZ(left), XZ(right), ZXZ; the end sites
/// see a fixed Z = +1 neighbour, so their left/right factors fold into X and
/// XZ. The diagonal Z/ZZ layer follows. The constant energy is dropped.
inline Circuit build_ym_step(const YmParams& p, double dt) {
  const int N = p.N;
  if (N < 1) throw std::invalid_argument("YM chain needs N >= 1");
  if (p.K < 0) throw std::invalid_argument("K must be non-negative");
  Circuit c(N, "ym_step");
  const double kx = -p.K * dt / 8.0;
  if (p.K != 0.0) {
    if (N == 1) {
      c.append(build_pauli_rotation("X", 16.0 * kx, {0}, N));
    } else {
      for (int i = 0; i < N; ++i) {
        if (i == 0) {
          c.append(build_pauli_rotation("X", 4.0 * kx, {0}, N));
          c.append(build_pauli_rotation("XZ", 12.0 * kx, {0, 1}, N));
        } else if (i == N - 1) {
          c.append(build_pauli_rotation("X", 4.0 * kx, {i}, N));
          c.append(build_pauli_rotation("XZ", 12.0 * kx, {i, i - 1}, N));
        } else {
          c.append(build_pauli_rotation("X", kx, {i}, N));
          c.append(build_pauli_rotation("XZ", 3.0 * kx, {i, i - 1}, N));
          c.append(build_pauli_rotation("XZ", 3.0 * kx, {i, i + 1}, N));
          c.append(build_pauli_rotation("ZXZ", 9.0 * kx, {i - 1, i, i + 1}, N));
        }
      }
    }
  }
  for (int i = 0; i < N; ++i) {
    const double weight = (N == 1) ? 4.0 : (i == 0 || i == N - 1) ? 3.0 : 2.0;
    c.rz(i, -3.0 * weight * dt / 8.0);
  }
  for (int i = 1; i < N; ++i) c.cnot(i - 1, i).rz(i, -3.0 * dt / 8.0).cnot(i - 1, i);
  return c;
}

inline Circuit build_trotter_ym(const YmParams& p, const TrotterSpec& spec) {
  spec.validate();
  return repeat_circuit(build_ym_step(p, spec.dt()), spec.M, "trotter_ym");
}

/// Entry-wise complex conjugate: RZ angles flip sign, H and CNOT are real.
inline Circuit conjugate_circuit(const Circuit& c) {
  Circuit out(c.n_qubits(), c.label().empty() ? std::string() : c.label() + "*");
  out.reserve(c.size());
  for (Gate g : c.gates()) {
    g.angle = -g.angle;
    out.append(g);
  }
  return out;
}

/// Moves qubit q of `c` to map[q] on an n_target-qubit register.
inline Circuit relabel_circuit(const Circuit& c, std::span<const int> map, int n_target) {
  if (static_cast<int>(map.size()) < c.n_qubits()) throw std::invalid_argument("relabel map too short");
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] < 0 || map[i] >= n_target) throw std::out_of_range("relabel target out of range");
    for (std::size_t j = 0; j < i; ++j)
      if (map[i] == map[j]) throw std::invalid_argument("relabel map is not injective");
  }
  Circuit out(n_target, c.label());
  out.reserve(c.size());
  for (Gate g : c.gates()) {
    g.q0 = map[static_cast<std::size_t>(g.q0)];
    if (g.q1 >= 0) g.q1 = map[static_cast<std::size_t>(g.q1)];
    out.append(g);
  }
  return out;
}

}  // namespace hps
