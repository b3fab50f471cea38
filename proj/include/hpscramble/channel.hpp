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
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hpscramble/circuit.hpp"
#include "hpscramble/core.hpp"
#include "hpscramble/state.hpp"

namespace hps {

/// Conjugation by a circuit acting on the density operator's register.
struct UnitaryStep {
  Circuit circuit;
};

/// Conjugation by a dense unitary on the listed qubits.
struct DenseUnitaryStep {
  Eigen::MatrixXcd matrix;
  std::vector<int> targets;
};

/// rho -> (1-p) rho + p (I/d_S) (x) Tr_S rho.
struct DepolarizeStep {
  double p = 0.0;
  std::vector<int> targets;
};

/// rho -> (1-p) CNOT rho CNOT + p (I/4) (x) Tr_{c,t} rho.
struct NoisyCnotStep {
  int control = 0;
  int target = 1;
  double p = 0.0;
};

using ChannelStep = std::variant<UnitaryStep, DenseUnitaryStep, DepolarizeStep, NoisyCnotStep>;

namespace detail {

inline void conjugate_gate(MixedState& rho, const Gate& g) {
  const int n = rho.n_qubits();
  check_gate(g, n);
  const auto v = rho.flat();
  kernel::apply_gate(v, 2 * n, g);
  Gate c = g;
  c.q0 += n;
  if (c.q1 >= 0) c.q1 += n;
  c.angle = -c.angle;
  kernel::apply_gate(v, 2 * n, c);
}

inline void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("error probability outside [0,1]");
}

inline void depolarize(MixedState& rho, double p, std::span<const int> targets) {
  check_probability(p);
  if (p == 0.0 || targets.empty()) return;
  const int n = rho.n_qubits();
  std::vector<int> doubled(targets.begin(), targets.end());
  for (int q : targets) doubled.push_back(q + n);
  const IndexSplit split(2 * n, doubled);
  const Index ds = pow2(static_cast<int>(targets.size()));
  // Within the selected block, label s*ds + s' addresses row s, column s'.
  const auto v = rho.flat();
  const double keep = 1.0 - p, spread = p / static_cast<double>(ds);
  for (const Index r : split.rest) {
    Complex tr = 0;
    for (Index s = 0; s < ds; ++s) tr += v[split.sel[s * ds + s] | r];
    for (Index s = 0; s < split.sel.size(); ++s) v[split.sel[s] | r] *= keep;
    for (Index s = 0; s < ds; ++s) v[split.sel[s * ds + s] | r] += spread * tr;
  }
}

}  // namespace detail

inline void apply_channel_step(MixedState& rho, const ChannelStep& step) {
  const int n = rho.n_qubits();
  if (const auto* u = std::get_if<UnitaryStep>(&step)) {
    if (u->circuit.n_qubits() > n) throw std::out_of_range("circuit wider than register");
    for (const Gate& g : u->circuit.gates()) detail::conjugate_gate(rho, g);
  } else if (const auto* d = std::get_if<DenseUnitaryStep>(&step)) {
    std::vector<int> cols(d->targets);
    for (int& q : cols) q += n;
    kernel::apply_dense(rho.flat(), 2 * n, d->matrix, d->targets);
    kernel::apply_dense(rho.flat(), 2 * n, Eigen::MatrixXcd(d->matrix.conjugate()), cols);
  } else if (const auto* dep = std::get_if<DepolarizeStep>(&step)) {
    detail::depolarize(rho, dep->p, dep->targets);
  } else if (const auto* c = std::get_if<NoisyCnotStep>(&step)) {
    detail::check_probability(c->p);
    detail::conjugate_gate(rho, Gate::cnot(c->control, c->target));
    const int pair[2] = {c->control, c->target};
    detail::depolarize(rho, c->p, pair);
  }
}

/// Runs a circuit on rho with every CNOT replaced by its depolarized version.
inline void apply_noisy_circuit(MixedState& rho, const Circuit& circuit, double p) {
  detail::check_probability(p);
  for (const Gate& g : circuit.gates()) {
    if (g.kind == GateKind::kCNOT && p > 0.0) {
      apply_channel_step(rho, NoisyCnotStep{g.q0, g.q1, p});
    } else {
      detail::conjugate_gate(rho, g);
    }
  }
}

}  // namespace hps
