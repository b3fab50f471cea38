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
#include <bit>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hpscramble/circuit.hpp"
#include "hpscramble/core.hpp"
#include "hpscramble/pauli.hpp"

namespace hps {

namespace detail {

/// Splits an n-qubit label into (selected qubits, remaining qubits).
/// `sel[s] | rest[r]` is the global label whose selected qubits read s and
/// whose remaining qubits read r; the first listed qubit is the top bit of s,
/// and remaining qubits keep their global order.
struct IndexSplit {
  std::vector<Index> sel;
  std::vector<Index> rest;

  IndexSplit(int n, std::span<const int> qubits) {
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (int q : qubits) {
      if (q < 0 || q >= n) throw std::out_of_range("qubit index out of range");
      if (used[static_cast<std::size_t>(q)]) throw std::invalid_argument("repeated qubit index");
      used[static_cast<std::size_t>(q)] = true;
    }
    std::vector<int> others;
    for (int q = 0; q < n; ++q)
      if (!used[static_cast<std::size_t>(q)]) others.push_back(q);
    sel = offsets(n, qubits);
    rest = offsets(n, others);
  }

  static std::vector<Index> offsets(int n, std::span<const int> qubits) {
    const int k = static_cast<int>(qubits.size());
    std::vector<Index> out(pow2(k), 0);
    for (Index s = 0; s < out.size(); ++s) {
      Index g = 0;
      for (int j = 0; j < k; ++j)
        if (s & pow2(k - 1 - j)) g |= pow2(bit_of(n, qubits[static_cast<std::size_t>(j)]));
      out[s] = g;
    }
    return out;
  }
};

inline Index insert_zero_bit(Index i, int bit) {
  const Index low = i & (pow2(bit) - 1);
  return ((i >> bit) << (bit + 1)) | low;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Amplitude kernels on a raw 2^n vector.

namespace kernel {

inline void hadamard(std::span<Complex> v, int n, int q) {
  constexpr double s = 0.70710678118654752440;
  const Index stride = pow2(bit_of(n, q));
  const Index dim = v.size();
  for (Index base = 0; base < dim; base += 2 * stride) {
    for (Index i = base; i < base + stride; ++i) {
      const Complex a = v[i], b = v[i + stride];
      v[i] = (a + b) * s;
      v[i + stride] = (a - b) * s;
    }
  }
}

inline void rz(std::span<Complex> v, int n, int q, double theta) {
  const Complex p0 = std::polar(1.0, -theta / 2), p1 = std::polar(1.0, theta / 2);
  const Index stride = pow2(bit_of(n, q));
  const Index dim = v.size();
  for (Index base = 0; base < dim; base += 2 * stride) {
    for (Index i = base; i < base + stride; ++i) {
      v[i] *= p0;
      v[i + stride] *= p1;
    }
  }
}

inline void cnot(std::span<Complex> v, int n, int control, int target) {
  const int bc = bit_of(n, control), bt = bit_of(n, target);
  const int lo = std::min(bc, bt), hi = std::max(bc, bt);
  const Index cm = pow2(bc), tm = pow2(bt);
  const Index quarter = v.size() >> 2;
  for (Index j = 0; j < quarter; ++j) {
    const Index i = detail::insert_zero_bit(detail::insert_zero_bit(j, lo), hi) | cm;
    std::swap(v[i], v[i | tm]);
  }
}

inline void pauli_x(std::span<Complex> v, int n, int q) {
  const Index stride = pow2(bit_of(n, q));
  for (Index base = 0; base < v.size(); base += 2 * stride)
    for (Index i = base; i < base + stride; ++i) std::swap(v[i], v[i + stride]);
}

inline void pauli_z(std::span<Complex> v, int n, int q) {
  const Index stride = pow2(bit_of(n, q));
  for (Index base = 0; base < v.size(); base += 2 * stride)
    for (Index i = base; i < base + stride; ++i) v[i + stride] = -v[i + stride];
}

inline void pauli_y(std::span<Complex> v, int n, int q) {
  const Complex I(0, 1);
  const Index stride = pow2(bit_of(n, q));
  for (Index base = 0; base < v.size(); base += 2 * stride) {
    for (Index i = base; i < base + stride; ++i) {
      const Complex a = v[i], b = v[i + stride];
      v[i] = -I * b;
      v[i + stride] = I * a;
    }
  }
}

/// Pauli by index 0..3 = I, X, Y, Z.
inline void pauli(std::span<Complex> v, int n, int q, int which) {
  switch (which) {
    case 1: pauli_x(v, n, q); break;
    case 2: pauli_y(v, n, q); break;
    case 3: pauli_z(v, n, q); break;
    default: break;
  }
}

/// Projects qubit pair (a, b) onto (|00> + |11>)/sqrt2 in place.
inline void bell_project(std::span<Complex> v, int n, int a, int b) {
  const int ba = bit_of(n, a), bb = bit_of(n, b);
  const int lo = std::min(ba, bb), hi = std::max(ba, bb);
  const Index ma = pow2(ba), mb = pow2(bb);
  const Index quarter = v.size() >> 2;
  for (Index j = 0; j < quarter; ++j) {
    const Index i00 = detail::insert_zero_bit(detail::insert_zero_bit(j, lo), hi);
    const Index i11 = i00 | ma | mb;
    const Complex avg = (v[i00] + v[i11]) * 0.5;
    v[i00] = avg;
    v[i11] = avg;
    v[i00 | ma] = 0;
    v[i00 | mb] = 0;
  }
}

inline void apply_gate(std::span<Complex> v, int n, const Gate& g) {
  switch (g.kind) {
    case GateKind::kH: hadamard(v, n, g.q0); break;
    case GateKind::kRZ: rz(v, n, g.q0, g.angle); break;
    case GateKind::kCNOT: cnot(v, n, g.q0, g.q1); break;
  }
}

/// Contracts a dense 2^k x 2^k matrix onto the listed qubits.
inline void apply_dense(std::span<Complex> v, int n, const Eigen::MatrixXcd& u,
                        std::span<const int> targets) {
  const detail::IndexSplit split(n, targets);
  const auto k = static_cast<Eigen::Index>(split.sel.size());
  const auto r = static_cast<Eigen::Index>(split.rest.size());
  if (u.rows() != k || u.cols() != k) throw std::invalid_argument("dense unitary dimension mismatch");
  Eigen::MatrixXcd block(k, r);
  for (Eigen::Index c = 0; c < r; ++c)
    for (Eigen::Index s = 0; s < k; ++s)
      block(s, c) = v[split.sel[static_cast<std::size_t>(s)] | split.rest[static_cast<std::size_t>(c)]];
  const Eigen::MatrixXcd out = u * block;
  for (Eigen::Index c = 0; c < r; ++c)
    for (Eigen::Index s = 0; s < k; ++s)
      v[split.sel[static_cast<std::size_t>(s)] | split.rest[static_cast<std::size_t>(c)]] = out(s, c);
}

}  // namespace kernel

// ---------------------------------------------------------------------------

class MixedState;

/// Dense state vector. Qubit 0 is the most significant bit of the basis label.
class PureState {
 public:
  PureState() = default;

  /// |0...0> on n qubits.
  explicit PureState(int n_qubits) : n_(n_qubits) {
    if (n_qubits < 0 || n_qubits > kMaxStateQubits) throw SizeError("unsupported register size");
    amps_.assign(pow2(n_qubits), Complex(0));
    amps_[0] = 1.0;
  }

  static PureState from_amplitudes(std::vector<Complex> amps, bool norm_deferred = false) {
    const std::size_t size = amps.size();
    if (size == 0 || (size & (size - 1)) != 0)
      throw std::invalid_argument("amplitude count is not a power of two");
    PureState s;
    s.n_ = std::countr_zero(size);
    s.amps_ = std::move(amps);
    s.norm_deferred_ = norm_deferred;
    if (!norm_deferred && std::abs(s.norm_squared() - 1.0) > kNormTolerance)
      throw std::invalid_argument("state is not normalized");
    return s;
  }

  static PureState basis(int n_qubits, Index label) {
    PureState s(n_qubits);
    s.amps_[0] = 0;
    s.amps_.at(label) = 1.0;
    return s;
  }

  int n_qubits() const { return n_; }
  Index dim() const { return amps_.size(); }
  const std::vector<Complex>& amplitudes() const { return amps_; }
  std::span<Complex> span() { return amps_; }
  std::span<const Complex> span() const { return amps_; }
  Complex operator[](Index i) const { return amps_[i]; }
  Complex& operator[](Index i) { return amps_[i]; }

  /// True after a non-unitary operation (projection) until normalize() is called.
  bool norm_deferred() const { return norm_deferred_; }
  void set_norm_deferred(bool v) { norm_deferred_ = v; }

  double norm_squared() const {
    double s = 0.0;
    for (const Complex& a : amps_) s += std::norm(a);
    return s;
  }

  void normalize() {
    const double n2 = norm_squared();
    if (n2 < kProjectionThreshold) throw ProjectionError("cannot normalize a null state");
    const double inv = 1.0 / std::sqrt(n2);
    for (Complex& a : amps_) a *= inv;
    norm_deferred_ = false;
  }

  Complex inner(const PureState& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("dimension mismatch");
    Complex s = 0;
    for (Index i = 0; i < dim(); ++i) s += std::conj(amps_[i]) * other.amps_[i];
    return s;
  }

  double distance(const PureState& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("dimension mismatch");
    double s = 0;
    for (Index i = 0; i < dim(); ++i) s += std::norm(amps_[i] - other.amps_[i]);
    return std::sqrt(s);
  }

  /// Distance minimized over a global phase.
  double phase_free_distance(const PureState& other) const {
    const double a = norm_squared(), b = other.norm_squared();
    return std::sqrt(std::max(0.0, a + b - 2.0 * std::abs(inner(other))));
  }

  /// Tensor product; `this` occupies the leading (most significant) qubits.
  PureState kron(const PureState& low) const {
    if (n_ + low.n_ > kMaxStateQubits) throw SizeError("tensor product too large");
    PureState out;
    out.n_ = n_ + low.n_;
    out.amps_.resize(dim() * low.dim());
    for (Index i = 0; i < dim(); ++i)
      for (Index j = 0; j < low.dim(); ++j) out.amps_[i * low.dim() + j] = amps_[i] * low.amps_[j];
    out.norm_deferred_ = norm_deferred_ || low.norm_deferred_;
    return out;
  }

 private:
  int n_ = 0;
  std::vector<Complex> amps_;
  bool norm_deferred_ = false;
};

inline void check_gate(const Gate& g, int n) {
  if (g.q0 < 0 || g.q0 >= n || (g.arity() == 2 && (g.q1 < 0 || g.q1 >= n)))
    throw std::out_of_range("gate index out of range: malformed circuit");
}

/// Applies one gate in place.
inline void apply_gate(PureState& state, const Gate& g) {
  check_gate(g, state.n_qubits());
  kernel::apply_gate(state.span(), state.n_qubits(), g);
}

/// Applies gates in list order.
inline void run_circuit(PureState& state, const Circuit& c) {
  if (c.n_qubits() > state.n_qubits()) throw std::out_of_range("circuit wider than state");
  for (const Gate& g : c.gates()) kernel::apply_gate(state.span(), state.n_qubits(), g);
}

inline void apply_dense_unitary(PureState& state, const Eigen::MatrixXcd& u,
                                std::span<const int> targets) {
  kernel::apply_dense(state.span(), state.n_qubits(), u, targets);
}

/// Applies a Pauli string given over the listed qubits (character j acts on targets[j]).
inline void apply_pauli(PureState& state, const std::string& pauli, std::span<const int> targets) {
  if (pauli.size() != targets.size()) throw std::invalid_argument("Pauli length mismatch");
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const char c = pauli[j];
    const int which = c == 'X' ? 1 : c == 'Y' ? 2 : c == 'Z' ? 3 : 0;
    if (c != 'I' && which == 0) throw std::invalid_argument("bad Pauli character");
    kernel::pauli(state.span(), state.n_qubits(), targets[j], which);
  }
}

// ---------------------------------------------------------------------------

/// Density operator stored row-major; the flat buffer doubles as a 2n-qubit
/// vector whose first n qubits index rows and last n index columns.
class MixedState {
 public:
  using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  MixedState() = default;

  explicit MixedState(int n_qubits) : n_(n_qubits) {
    if (n_qubits < 0 || 2 * n_qubits > kMaxStateQubits) throw SizeError("density matrix too large");
    const auto d = static_cast<Eigen::Index>(pow2(n_qubits));
    rho_ = Matrix::Zero(d, d);
    rho_(0, 0) = 1.0;
  }

  static MixedState from_pure(const PureState& psi) {
    MixedState m;
    m.n_ = psi.n_qubits();
    if (2 * m.n_ > kMaxStateQubits) throw SizeError("density matrix too large");
    const auto d = static_cast<Eigen::Index>(psi.dim());
    const Eigen::Map<const Eigen::VectorXcd> v(psi.amplitudes().data(), d);
    m.rho_ = v * v.adjoint();
    return m;
  }

  static MixedState from_matrix(const Eigen::MatrixXcd& m, bool validate = true) {
    const Eigen::Index d = m.rows();
    if (m.cols() != d || d == 0 || (d & (d - 1)) != 0)
      throw std::invalid_argument("density matrix must be square with power-of-two size");
    MixedState s;
    s.n_ = std::countr_zero(static_cast<Index>(d));
    s.rho_ = m;
    if (validate) s.validate();
    return s;
  }

  static MixedState maximally_mixed(int n_qubits) {
    MixedState s(n_qubits);
    const auto d = static_cast<Eigen::Index>(pow2(n_qubits));
    s.rho_ = Matrix::Identity(d, d) / static_cast<double>(d);
    return s;
  }

  int n_qubits() const { return n_; }
  Index dim() const { return pow2(n_); }
  const Matrix& matrix() const { return rho_; }
  Matrix& matrix() { return rho_; }

  std::span<Complex> flat() { return {rho_.data(), static_cast<std::size_t>(rho_.size())}; }
  std::span<const Complex> flat() const {
    return {rho_.data(), static_cast<std::size_t>(rho_.size())};
  }

  Complex trace() const { return rho_.trace(); }
  double purity() const { return rho_.squaredNorm(); }

  /// Throws if Hermiticity, trace or positivity fail beyond tolerance.
  void validate() const {
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTolerance)
      throw std::invalid_argument("density matrix is not Hermitian");
    if (std::abs(trace() - 1.0) > kNormTolerance)
      throw std::invalid_argument("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(rho_),
                                                        Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kHermitianTolerance)
      throw std::invalid_argument("density matrix has a negative eigenvalue");
  }

  /// Expectation Tr[rho O] for a dense operator on the whole register.
  Complex expectation(const Eigen::MatrixXcd& op) const {
    return (rho_.cwiseProduct(op.transpose())).sum();
  }

 private:
  int n_ = 0;
  Matrix rho_;
};

// ---------------------------------------------------------------------------
// Reduced quantities.

namespace detail {

/// Amplitudes arranged as (selected qubits) x (rest).
inline Eigen::MatrixXcd gather_block(const PureState& state, std::span<const int> subset) {
  const IndexSplit split(state.n_qubits(), subset);
  const auto k = static_cast<Eigen::Index>(split.sel.size());
  const auto r = static_cast<Eigen::Index>(split.rest.size());
  Eigen::MatrixXcd a(k, r);
  for (Eigen::Index c = 0; c < r; ++c)
    for (Eigen::Index s = 0; s < k; ++s)
      a(s, c) = state[split.sel[static_cast<std::size_t>(s)] | split.rest[static_cast<std::size_t>(c)]];
  return a;
}

}  // namespace detail

/// Partial trace over the complement of `subset`. Qubit order follows `subset`.
inline MixedState reduced_density(const PureState& state, std::span<const int> subset) {
  if (subset.size() > 14) throw SizeError("reduced density limited to 14 qubits");
  const Eigen::MatrixXcd a = detail::gather_block(state, subset);
  Eigen::MatrixXcd rho = a * a.adjoint();
  const double tr = rho.trace().real();
  if (state.norm_deferred()) rho /= tr;
  return MixedState::from_matrix(rho, false);
}

/// Tr[rho_S^2] from the Gram matrix on the smaller side of the split.
inline double reduced_purity(const PureState& state, std::span<const int> subset) {
  const Eigen::MatrixXcd a = detail::gather_block(state, subset);
  const double n2 = a.squaredNorm();
  double p;
  if (a.rows() <= a.cols()) {
    p = (a * a.adjoint()).squaredNorm();
  } else {
    p = (a.adjoint() * a).squaredNorm();
  }
  return p / (n2 * n2);
}

/// Partial trace of a density operator onto `subset` (qubit order follows `subset`).
inline MixedState partial_trace(const MixedState& rho, std::span<const int> subset) {
  const detail::IndexSplit split(rho.n_qubits(), subset);
  const auto k = static_cast<Eigen::Index>(split.sel.size());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(k, k);
  const auto& m = rho.matrix();
  for (const Index r : split.rest)
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        out(i, j) += m(static_cast<Eigen::Index>(split.sel[static_cast<std::size_t>(i)] | r),
                       static_cast<Eigen::Index>(split.sel[static_cast<std::size_t>(j)] | r));
  return MixedState::from_matrix(out, false);
}

struct Entropies {
  double von_neumann = 0.0;
  double renyi2 = 0.0;
};

/// Base-2 von Neumann and Renyi-2 entropies.
inline Entropies entropies(const MixedState& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(rho.matrix()),
                                                     Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() < -kHermitianTolerance)
    throw std::invalid_argument("entropies: density matrix is not positive semidefinite");
  double s = 0.0, p = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double l = ev(i);
    p += l * l;
    if (l > 0) s -= l * std::log2(l);
  }
  return {s, -std::log2(p)};
}

inline double renyi2(const MixedState& rho) { return -std::log2(rho.purity()); }

}  // namespace hps
