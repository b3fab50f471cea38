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

#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "hpscramble/circuit.hpp"
#include "hpscramble/core.hpp"
#include "hpscramble/pauli.hpp"
#include "hpscramble/rng.hpp"
#include "hpscramble/state.hpp"

namespace hps {

class DenseUnitary {
 public:
  DenseUnitary() = default;
  explicit DenseUnitary(Eigen::MatrixXcd m, bool check = true) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("unitary must be square");
    if (check && !is_unitary()) throw std::invalid_argument("matrix is not unitary");
  }

  static DenseUnitary identity(Index dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return DenseUnitary(Eigen::MatrixXcd::Identity(d, d), false);
  }

  Index dim() const { return static_cast<Index>(m_.rows()); }
  int n_qubits() const { return std::countr_zero(dim()); }
  const Eigen::MatrixXcd& matrix() const { return m_; }

  bool is_unitary(double tol = kNormTolerance) const {
    const Eigen::MatrixXcd d = m_ * m_.adjoint() - Eigen::MatrixXcd::Identity(m_.rows(), m_.cols());
    return d.cwiseAbs().maxCoeff() <= tol;
  }

  DenseUnitary conjugate() const { return DenseUnitary(m_.conjugate(), false); }
  DenseUnitary adjoint() const { return DenseUnitary(m_.adjoint(), false); }

  friend DenseUnitary operator*(const DenseUnitary& a, const DenseUnitary& b) {
    return DenseUnitary(a.m_ * b.m_, false);
  }

 private:
  Eigen::MatrixXcd m_;
};

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of R's diagonal moved into Q.
inline DenseUnitary sample_haar_unitary(Index dim, RngStream& rng) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXcd z(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) z(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(d, d);
  const Eigen::MatrixXcd& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j) {
    const Complex rjj = r(j, j);
    const double a = std::abs(rjj);
    q.col(j) *= a > 0 ? rjj / a : Complex(1.0);
  }
  return DenseUnitary(std::move(q), false);
}

/// Haar-random pure state on n qubits (normalized complex Gaussian vector).
inline PureState sample_haar_state(int n_qubits, RngStream& rng) {
  std::vector<Complex> amps(pow2(n_qubits));
  for (Complex& a : amps) a = rng.complex_normal();
  PureState s = PureState::from_amplitudes(std::move(amps), true);
  s.normalize();
  return s;
}

/// Dense matrix of a circuit on its own register.
inline Eigen::MatrixXcd circuit_matrix(const Circuit& c) {
  const int n = c.n_qubits();
  if (n > 14) throw SizeError("circuit matrix limited to 14 qubits");
  const Index d = pow2(n);
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Index col = 0; col < d; ++col) {
    PureState s = PureState::basis(n, col);
    run_circuit(s, c);
    for (Index row = 0; row < d; ++row)
      m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = s[row];
  }
  return m;
}

inline DenseUnitary circuit_unitary(const Circuit& c) { return DenseUnitary(circuit_matrix(c), false); }

/// Eigendecomposition of a Hermitian Hamiltonian, reused for any t.
class SpectralPropagator {
 public:
  explicit SpectralPropagator(const Eigen::MatrixXcd& h) {
    if (h.rows() > 4096) throw SizeError("exact evolution limited to 12 qubits");
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > kHermitianTolerance)
      throw std::invalid_argument("Hamiltonian is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
  }
  explicit SpectralPropagator(const PauliHamiltonian& h) : SpectralPropagator(checked_dense(h)) {}

  const Eigen::VectorXd& eigenvalues() const { return evals_; }
  const Eigen::MatrixXcd& eigenvectors() const { return evecs_; }

  /// e^{-iHt}.
  DenseUnitary at(double t) const {
    Eigen::VectorXcd ph(evals_.size());
    for (Eigen::Index k = 0; k < evals_.size(); ++k) ph(k) = std::polar(1.0, -evals_(k) * t);
    return DenseUnitary(evecs_ * ph.asDiagonal() * evecs_.adjoint(), false);
  }

 private:
  static Eigen::MatrixXcd checked_dense(const PauliHamiltonian& h) {
    if (h.n_qubits() > 12) throw SizeError("exact evolution limited to 12 qubits");
    return h.dense();
  }

  Eigen::VectorXd evals_;
  Eigen::MatrixXcd evecs_;
};

inline DenseUnitary exact_unitary(const PauliHamiltonian& h, double t) {
  return SpectralPropagator(h).at(t);
}

/// Operator-norm distance ||a - b||_2.
inline double operator_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a - b);
  return svd.singularValues()(0);
}

}  // namespace hps
