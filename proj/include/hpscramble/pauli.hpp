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

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hpscramble/core.hpp"

namespace hps {

/// Single Pauli string on n qubits in symplectic form, character q acting on qubit q.
struct PauliString {
  Index x_mask = 0;
  Index z_mask = 0;
  int n_qubits = 0;

  static PauliString parse(const std::string& s) {
    const int n = static_cast<int>(s.size());
    if (n > 62) throw SizeError("Pauli string too long");
    PauliString p;
    p.n_qubits = n;
    for (int q = 0; q < n; ++q) {
      const Index bit = pow2(bit_of(n, q));
      switch (s[static_cast<std::size_t>(q)]) {
        case 'I': break;
        case 'X': p.x_mask |= bit; break;
        case 'Z': p.z_mask |= bit; break;
        case 'Y':
          p.x_mask |= bit;
          p.z_mask |= bit;
          break;
        default: throw std::invalid_argument("bad Pauli character in '" + s + "'");
      }
    }
    return p;
  }

  std::string str() const {
    std::string s(static_cast<std::size_t>(n_qubits), 'I');
    for (int q = 0; q < n_qubits; ++q) {
      const Index bit = pow2(bit_of(n_qubits, q));
      const bool x = x_mask & bit, z = z_mask & bit;
      s[static_cast<std::size_t>(q)] = x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
    }
    return s;
  }

  int y_count() const { return __builtin_popcountll(x_mask & z_mask); }

  /// P|col> = phase(col) |col ^ x_mask>.
  Complex phase(Index col) const {
    static const Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    // Y = i X Z, so each Y contributes i; Z-parity taken on the input label.
    const int sign = __builtin_popcountll(col & z_mask) & 1;
    const Complex ph = kIPow[y_count() & 3];
    return sign ? -ph : ph;
  }
};

struct PauliTerm {
  double coefficient = 0.0;
  std::string pauli;
};

/// Real linear combination of Pauli strings.
class PauliHamiltonian {
 public:
  PauliHamiltonian() = default;
  explicit PauliHamiltonian(int n_qubits) : n_qubits_(n_qubits) {}

  int n_qubits() const { return n_qubits_; }
  const std::vector<PauliTerm>& terms() const { return terms_; }

  /// Adds a term; identical strings are merged and zero coefficients dropped on simplify().
  void add(double coefficient, const std::string& pauli) {
    if (static_cast<int>(pauli.size()) != n_qubits_)
      throw std::invalid_argument("Pauli string length does not match register");
    PauliString::parse(pauli);
    for (PauliTerm& t : terms_) {
      if (t.pauli == pauli) {
        t.coefficient += coefficient;
        return;
      }
    }
    terms_.push_back({coefficient, pauli});
  }

  void simplify(double tol = 0.0) {
    std::erase_if(terms_, [tol](const PauliTerm& t) { return std::abs(t.coefficient) <= tol; });
  }

  double coefficient_of(const std::string& pauli) const {
    for (const PauliTerm& t : terms_)
      if (t.pauli == pauli) return t.coefficient;
    return 0.0;
  }

  Eigen::MatrixXcd dense() const {
    if (n_qubits_ > 14) throw SizeError("dense Hamiltonian limited to 14 qubits");
    const Index dim = pow2(n_qubits_);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                                static_cast<Eigen::Index>(dim));
    for (const PauliTerm& t : terms_) {
      const PauliString p = PauliString::parse(t.pauli);
      for (Index col = 0; col < dim; ++col) {
        const Index row = col ^ p.x_mask;
        m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) +=
            t.coefficient * p.phase(col);
      }
    }
    return m;
  }

  /// One term per line: `coefficient pauli_string`.
  std::string to_text() const {
    std::string out;
    for (const PauliTerm& t : terms_) {
      out += format_double(t.coefficient);
      out += ' ';
      out += t.pauli;
      out += '\n';
    }
    return out;
  }

  static PauliHamiltonian from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    PauliHamiltonian h;
    bool first = true;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      double c;
      std::string s;
      if (!(ls >> c >> s)) continue;
      if (first) {
        h = PauliHamiltonian(static_cast<int>(s.size()));
        first = false;
      }
      h.add(c, s);
    }
    return h;
  }

 private:
  int n_qubits_ = 0;
  std::vector<PauliTerm> terms_;
};

}  // namespace hps
