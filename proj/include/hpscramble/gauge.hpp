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
#include <cstdio>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include "hpscramble/core.hpp"
#include "hpscramble/pauli.hpp"

namespace hps::gauge {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::rational<BigInt>;

/// Half-integer stored as twice its value. Spins are non-negative; magnetic
/// quantum numbers may be negative.
class HalfInt {
 public:
  constexpr HalfInt() = default;
  static constexpr HalfInt from_twice(int twice) {
    HalfInt h;
    h.twice_ = twice;
    return h;
  }
  static constexpr HalfInt integer(int v) { return from_twice(2 * v); }
  static constexpr HalfInt half() { return from_twice(1); }

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return twice_ / 2.0; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }

  friend constexpr HalfInt operator+(HalfInt a, HalfInt b) { return from_twice(a.twice_ + b.twice_); }
  friend constexpr HalfInt operator-(HalfInt a, HalfInt b) { return from_twice(a.twice_ - b.twice_); }
  friend constexpr HalfInt operator-(HalfInt a) { return from_twice(-a.twice_); }
  friend constexpr auto operator<=>(HalfInt, HalfInt) = default;

  std::string str() const {
    return is_integer() ? std::to_string(twice_ / 2) : std::to_string(twice_) + "/2";
  }

 private:
  int twice_ = 0;
};

inline constexpr HalfInt kZero = HalfInt::from_twice(0);
inline constexpr HalfInt kHalf = HalfInt::from_twice(1);

/// |a - b| <= c <= a + b with a + b + c integer.
inline bool triangle(HalfInt a, HalfInt b, HalfInt c) {
  if (a.twice() < 0 || b.twice() < 0 || c.twice() < 0) return false;
  if ((a.twice() + b.twice() + c.twice()) % 2 != 0) return false;
  return std::abs(a.twice() - b.twice()) <= c.twice() && c.twice() <= a.twice() + b.twice();
}

/// sign * sqrt(square), with `square` an exact non-negative rational.
struct SignedSqrt {
  int sign = 0;
  Rational square{0};

  double to_double() const {
    if (sign == 0) return 0.0;
    return sign * std::sqrt(boost::rational_cast<double>(square));
  }
};

namespace detail {

inline BigInt factorial(int n) {
  if (n < 0) throw std::domain_error("negative factorial");
  BigInt f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace detail

/// Wigner 3j symbol by the Racah sum in exact integer arithmetic.
inline SignedSqrt wigner_3j_exact(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3) {
  if (!triangle(j1, j2, j3)) return {};
  if ((m1 + m2 + m3).twice() != 0) return {};
  for (auto [j, m] : {std::pair{j1, m1}, std::pair{j2, m2}, std::pair{j3, m3}}) {
    if (std::abs(m.twice()) > j.twice() || (j.twice() - m.twice()) % 2 != 0) return {};
  }
  // All combinations below are integers once the checks above pass.
  auto I = [](HalfInt h) { return h.twice() / 2; };
  const int a = I(j1 + j2 - j3), b = I(j1 - j2 + j3), c = I(-j1 + j2 + j3), s = I(j1 + j2 + j3);
  const BigInt tri_num = detail::factorial(a) * detail::factorial(b) * detail::factorial(c);
  const BigInt tri_den = detail::factorial(s + 1);
  const BigInt mfac = detail::factorial(I(j1 + m1)) * detail::factorial(I(j1 - m1)) *
                      detail::factorial(I(j2 + m2)) * detail::factorial(I(j2 - m2)) *
                      detail::factorial(I(j3 + m3)) * detail::factorial(I(j3 - m3));

  const int t1 = I(j1 + j2 - j3), t2 = I(j1 - m1), t3 = I(j2 + m2);
  const int t4 = I(j3 - j2 + m1), t5 = I(j3 - j1 - m2);
  const int kmin = std::max({0, -t4, -t5});
  const int kmax = std::min({t1, t2, t3});
  Rational sum(0);
  for (int k = kmin; k <= kmax; ++k) {
    const BigInt den = detail::factorial(k) * detail::factorial(t1 - k) * detail::factorial(t2 - k) *
                       detail::factorial(t3 - k) * detail::factorial(t4 + k) * detail::factorial(t5 + k);
    sum += Rational(k % 2 == 0 ? BigInt(1) : BigInt(-1), den);
  }
  if (sum.numerator() == 0) return {};
  const int phase_exp = I(j1 - j2 - m3);
  int sign = (sum.numerator() > 0 ? 1 : -1) * (phase_exp % 2 == 0 ? 1 : -1);
  SignedSqrt out;
  out.sign = sign;
  out.square = sum * sum * Rational(tri_num * mfac, tri_den);
  return out;
}

inline double wigner_3j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3) {
  return wigner_3j_exact(j1, j2, j3, m1, m2, m3).to_double();
}

/// Vertex coefficient lambda_{s_i s_j}(j_i, j_j, j_b): the amplitude with
/// which the link pair (i, j) of the vertex singlet |j_i, j_j, j_b> is moved to
/// |j_i + s_i/2, j_j + s_j/2, j_b>. Zero for transitions to nonexistent states.
inline SignedSqrt lambda_coeff_exact(int s_i, int s_j, HalfInt ji, HalfInt jj, HalfInt jb) {
  if ((s_i != 1 && s_i != -1) || (s_j != 1 && s_j != -1))
    throw std::invalid_argument("lambda signs must be +-1");
  if (!triangle(ji, jj, jb)) return {};
  const HalfInt ti = ji + HalfInt::from_twice(s_i), tj = jj + HalfInt::from_twice(s_j);
  if (!triangle(ti, tj, jb)) return {};
  // Work with twice-values: every factor below is an integer over 2.
  const int Ji = ji.twice(), Jj = jj.twice(), Jb = jb.twice();
  BigInt num, den;
  int sign = 1;
  if (s_i == 1 && s_j == 1) {
    num = BigInt(4 + Jb + Ji + Jj) * BigInt(2 - Jb + Ji + Jj);
    den = BigInt(4) * BigInt(Ji + 1) * BigInt(Jj + 2);
  } else if (s_i == -1 && s_j == -1) {
    if (Jj == 0) return {};
    num = BigInt(Jb - Ji - Jj) * BigInt(-2 - Ji - Jj - Jb);
    den = BigInt(4) * BigInt(Ji + 1) * BigInt(Jj);
  } else if (s_i == 1 && s_j == -1) {
    if (Jj == 0) return {};
    num = BigInt(2 + Jb + Ji - Jj) * BigInt(Jb - Ji + Jj);
    den = BigInt(4) * BigInt(Ji + 1) * BigInt(Jj);
    sign = -1;
  } else {
    num = BigInt(2 + Jb - Ji + Jj) * BigInt(Jb + Ji - Jj);
    den = BigInt(4) * BigInt(Ji + 1) * BigInt(Jj + 2);
  }
  if (num < 0) {
    std::fprintf(stderr, "lambda: negative radicand for an admissible transition\n");
    return {};
  }
  if (num == 0) return {};
  return {sign, Rational(num, den)};
}

inline double lambda_coeff(int s_i, int s_j, HalfInt ji, HalfInt jj, HalfInt jb) {
  return lambda_coeff_exact(s_i, s_j, ji, jj, jb).to_double();
}

/// Link spins of the two-leg ladder: lower legs j[0..N-1], upper legs
/// jp[0..N-1], rungs jpp[0..N]. Links beyond the ends carry spin 0.
struct LadderBasisState {
  std::vector<HalfInt> j;
  std::vector<HalfInt> jp;
  std::vector<HalfInt> jpp;

  int N() const { return static_cast<int>(j.size()); }
  HalfInt lower(int i) const { return (i < 0 || i >= N()) ? kZero : j[static_cast<std::size_t>(i)]; }
  HalfInt upper(int i) const { return (i < 0 || i >= N()) ? kZero : jp[static_cast<std::size_t>(i)]; }
  HalfInt rung(int i) const { return jpp[static_cast<std::size_t>(i)]; }

  /// Lower vertex i joins (j_{i-1}, j''_i, j_i); upper vertex i joins (j'_{i-1}, j'_i, j''_i).
  bool vertex_ok(int i) const {
    return triangle(lower(i - 1), rung(i), lower(i)) && triangle(upper(i - 1), upper(i), rung(i));
  }
  bool is_physical() const {
    if (static_cast<int>(jp.size()) != N() || static_cast<int>(jpp.size()) != N() + 1) return false;
    for (int i = 0; i <= N(); ++i)
      if (!vertex_ok(i)) return false;
    return true;
  }
  HalfInt max_spin() const {
    HalfInt m = kZero;
    for (const auto* v : {&j, &jp, &jpp})
      for (HalfInt h : *v) m = std::max(m, h);
    return m;
  }

  friend auto operator<=>(const LadderBasisState&, const LadderBasisState&) = default;
  friend bool operator==(const LadderBasisState&, const LadderBasisState&) = default;

  std::string str() const {
    auto join = [](const std::vector<HalfInt>& v) {
      std::string s;
      for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + v[k].str();
      return s;
    };
    return "j=[" + join(j) + "] j'=[" + join(jp) + "] j''=[" + join(jpp) + "]";
  }
};

/// Dual-spin string for a j_max = 1/2 state: bit i is 1 (down) iff j_i = 1/2.
/// Site 0 is the most significant bit.
inline Index dual_spin_map(const LadderBasisState& s) {
  const int N = s.N();
  if (s.max_spin() > kHalf) throw std::invalid_argument("dual spin map needs spins <= 1/2");
  if (!s.is_physical()) throw std::invalid_argument("dual spin map needs a physical state");
  Index bits = 0;
  for (int i = 0; i < N; ++i) {
    if (s.j[static_cast<std::size_t>(i)] != s.jp[static_cast<std::size_t>(i)])
      throw std::invalid_argument("upper and lower legs disagree: not a loop configuration");
    if (s.j[static_cast<std::size_t>(i)] == kHalf) bits |= pow2(bit_of(N, i));
  }
  return bits;
}

inline LadderBasisState dual_spin_inverse(Index bits, int N) {
  LadderBasisState s;
  s.j.assign(static_cast<std::size_t>(N), kZero);
  s.jp.assign(static_cast<std::size_t>(N), kZero);
  s.jpp.assign(static_cast<std::size_t>(N) + 1, kZero);
  auto down = [&](int i) { return i >= 0 && i < N && ((bits >> bit_of(N, i)) & 1U); };
  for (int i = 0; i < N; ++i)
    if (down(i)) s.j[static_cast<std::size_t>(i)] = s.jp[static_cast<std::size_t>(i)] = kHalf;
  for (int i = 0; i <= N; ++i)
    if (down(i - 1) != down(i)) s.jpp[static_cast<std::size_t>(i)] = kHalf;
  return s;
}

/// All gauge-invariant states with spins <= j_max. For j_max = 1/2 the order
/// follows the dual-spin label; otherwise (j, j', j'') lexicographic.
inline std::vector<LadderBasisState> enumerate_physical_basis(int N, HalfInt j_max) {
  if (N < 1) throw std::invalid_argument("ladder needs N >= 1");
  if (j_max.twice() < 0) throw std::invalid_argument("j_max must be non-negative");
  std::vector<LadderBasisState> out;
  LadderBasisState cur;
  cur.j.assign(static_cast<std::size_t>(N), kZero);
  cur.jp.assign(static_cast<std::size_t>(N), kZero);
  cur.jpp.assign(static_cast<std::size_t>(N) + 1, kZero);
  const int top = j_max.twice();
  // Site i fixes j''_i, j_i, j'_i, which completes vertex i.
  std::function<void(int)> dfs = [&](int i) {
    if (i == N) {
      for (int r = 0; r <= top; ++r) {
        cur.jpp[static_cast<std::size_t>(N)] = HalfInt::from_twice(r);
        if (cur.vertex_ok(N)) out.push_back(cur);
      }
      return;
    }
    for (int r = 0; r <= top; ++r) {
      cur.jpp[static_cast<std::size_t>(i)] = HalfInt::from_twice(r);
      for (int a = 0; a <= top; ++a) {
        cur.j[static_cast<std::size_t>(i)] = HalfInt::from_twice(a);
        if (!triangle(cur.lower(i - 1), cur.rung(i), cur.lower(i))) continue;
        for (int b = 0; b <= top; ++b) {
          cur.jp[static_cast<std::size_t>(i)] = HalfInt::from_twice(b);
          if (triangle(cur.upper(i - 1), cur.upper(i), cur.rung(i))) dfs(i + 1);
        }
      }
    }
    cur.j[static_cast<std::size_t>(i)] = cur.jp[static_cast<std::size_t>(i)] = cur.jpp[static_cast<std::size_t>(i)] = kZero;
  };
  dfs(0);
  if (j_max == kHalf) {
    std::sort(out.begin(), out.end(), [](const LadderBasisState& a, const LadderBasisState& b) {
      return dual_spin_map(a) < dual_spin_map(b);
    });
  } else {
    std::sort(out.begin(), out.end(), [](const LadderBasisState& a, const LadderBasisState& b) {
      return std::tie(a.j, a.jp, a.jpp) < std::tie(b.j, b.jp, b.jpp);
    });
  }
  return out;
}

struct SparseEntry {
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

/// Real symmetric matrix as a coordinate list.
struct SparseHamiltonian {
  Index dim = 0;
  std::vector<SparseEntry> entries;

  Eigen::MatrixXd dense() const {
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (const SparseEntry& e : entries)
      m(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) += e.value;
    return m;
  }

  /// One `row col value` triple per line, duplicates summed, zeros dropped.
  std::string to_text() const {
    std::map<std::pair<Index, Index>, double> acc;
    for (const SparseEntry& e : entries) acc[{e.row, e.col}] += e.value;
    std::string out;
    char buf[96];
    for (const auto& [rc, v] : acc) {
      if (v == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%llu %llu %s\n", static_cast<unsigned long long>(rc.first),
                    static_cast<unsigned long long>(rc.second), format_double(v).c_str());
      out += buf;
    }
    return out;
  }

  friend SparseHamiltonian operator+(SparseHamiltonian a, const SparseHamiltonian& b) {
    if (a.dim != b.dim) throw std::invalid_argument("dimension mismatch");
    a.entries.insert(a.entries.end(), b.entries.begin(), b.entries.end());
    return a;
  }
};

inline SparseHamiltonian electric_matrix(const std::vector<LadderBasisState>& basis) {
  SparseHamiltonian h;
  h.dim = basis.size();
  auto casimir = [](HalfInt s) { return s.value() * (s.value() + 1.0) / 2.0; };
  for (Index k = 0; k < basis.size(); ++k) {
    double e = 0.0;
    for (const auto* v : {&basis[k].j, &basis[k].jp, &basis[k].jpp})
      for (HalfInt s : *v) e += casimir(s);
    h.entries.push_back({k, k, e});
  }
  return h;
}

/// One term of the plaquette operator on plaquette i: sign pattern
/// (s_i, s'_i, s''_i, s''_{i+1}) applied to `from`.
struct PlaquetteTransition {
  LadderBasisState to;
  double amplitude = 0.0;
};

/// The product of the four vertex coefficients around plaquette i.
inline double plaquette_lambda(const LadderBasisState& s, int i, int si, int spi, int sppi, int sppi1) {
  const double a = lambda_coeff(si, sppi1, s.lower(i), s.rung(i + 1), s.lower(i + 1));
  if (a == 0.0) return 0.0;
  const double b = lambda_coeff(sppi1, spi, s.rung(i + 1), s.upper(i), s.upper(i + 1));
  if (b == 0.0) return 0.0;
  const double c = lambda_coeff(spi, sppi, s.upper(i), s.rung(i), s.upper(i - 1));
  if (c == 0.0) return 0.0;
  const double d = lambda_coeff(sppi, si, s.rung(i), s.lower(i), s.lower(i - 1));
  return a * b * c * d;
}

/// Nonzero terms of tr U_plaquette(i) acting on `s`, restricted to spins <= j_max.
inline std::vector<PlaquetteTransition> plaquette_transitions(const LadderBasisState& s, int i, HalfInt j_max) {
  if (i < 0 || i >= s.N()) throw std::out_of_range("plaquette index out of range");
  std::vector<PlaquetteTransition> out;
  const auto ui = static_cast<std::size_t>(i);
  for (int si : {1, -1})
    for (int spi : {1, -1})
      for (int sppi : {1, -1})
        for (int sppi1 : {1, -1}) {
          LadderBasisState t = s;
          t.j[ui] = t.j[ui] + HalfInt::from_twice(si);
          t.jp[ui] = t.jp[ui] + HalfInt::from_twice(spi);
          t.jpp[ui] = t.jpp[ui] + HalfInt::from_twice(sppi);
          t.jpp[ui + 1] = t.jpp[ui + 1] + HalfInt::from_twice(sppi1);
          if (t.j[ui] > j_max || t.jp[ui] > j_max || t.jpp[ui] > j_max || t.jpp[ui + 1] > j_max) continue;
          const double amp = plaquette_lambda(s, i, si, spi, sppi, sppi1);
          if (amp == 0.0) continue;
          if (!t.is_physical()) throw std::logic_error("plaquette term left the gauge-invariant sector");
          out.push_back({std::move(t), amp});
        }
  return out;
}

/// Matrix of the single plaquette operator tr U(i) on the given basis.
inline SparseHamiltonian plaquette_matrix(const std::vector<LadderBasisState>& basis, int i, HalfInt j_max) {
  std::map<LadderBasisState, Index> index;
  for (Index k = 0; k < basis.size(); ++k) index.emplace(basis[k], k);
  SparseHamiltonian h;
  h.dim = basis.size();
  for (Index col = 0; col < basis.size(); ++col) {
    for (const PlaquetteTransition& tr : plaquette_transitions(basis[col], i, j_max)) {
      const auto it = index.find(tr.to);
      if (it == index.end()) throw std::logic_error("plaquette target missing from basis");
      h.entries.push_back({it->second, col, tr.amplitude});
    }
  }
  return h;
}

/// -K sum_i tr U(i).
inline SparseHamiltonian magnetic_matrix(const std::vector<LadderBasisState>& basis, double K,
                                         HalfInt j_max = kHalf) {
  SparseHamiltonian h;
  h.dim = basis.size();
  if (basis.empty() || K == 0.0) return h;
  const int N = basis.front().N();
  for (int i = 0; i < N; ++i) {
    SparseHamiltonian p = plaquette_matrix(basis, i, j_max);
    for (SparseEntry& e : p.entries) e.value *= -K;
    h = h + p;
  }
  return h;
}

namespace detail {

/// Expands a product of (constant + coefficient * Z_k) style factors into Pauli terms.
/// Each factor is a list of (coefficient, site or -1 for identity).
inline void add_product(PauliHamiltonian& h, double scale, char head, int head_site,
                        const std::vector<std::vector<std::pair<double, int>>>& factors) {
  const int n = h.n_qubits();
  std::vector<std::pair<double, std::string>> acc{{scale, std::string(static_cast<std::size_t>(n), 'I')}};
  if (head_site >= 0) acc[0].second[static_cast<std::size_t>(head_site)] = head;
  for (const auto& f : factors) {
    std::vector<std::pair<double, std::string>> next;
    for (const auto& [c, s] : acc) {
      for (const auto& [fc, site] : f) {
        std::string t = s;
        if (site >= 0) {
          char& ch = t[static_cast<std::size_t>(site)];
          // Only Z factors are multiplied in; Z*Z = I on the same site.
          if (ch == 'I') ch = 'Z';
          else if (ch == 'Z') ch = 'I';
          else throw std::logic_error("unexpected operator overlap");
        }
        next.push_back({c * fc, t});
      }
    }
    acc = std::move(next);
  }
  for (const auto& [c, s] : acc) h.add(c, s);
}

}  // namespace detail

/// sum_{i=0}^{N} (3/16)(3 - 2 Z_i - Z_{i-1} Z_i) - (K/16) sum_{i=0}^{N-1} X_i (1 + 3 Z_{i-1})(1 + 3 Z_{i+1}),
/// with Z_{-1} = Z_N = 1. Includes the constant (identity) term.
inline PauliHamiltonian ym_ising_closed_form(int N, double K) {
  if (N < 1) throw std::invalid_argument("YM chain needs N >= 1");
  PauliHamiltonian h(N);
  auto site = [N](int k) { return (k < 0 || k >= N) ? -1 : k; };
  for (int i = 0; i <= N; ++i) {
    detail::add_product(h, 3.0 / 16.0 * 3.0, 'I', -1, {});
    detail::add_product(h, 3.0 / 16.0 * -2.0, 'I', -1, {{{1.0, site(i)}}});
    detail::add_product(h, 3.0 / 16.0 * -1.0, 'I', -1, {{{1.0, site(i - 1)}}, {{1.0, site(i)}}});
  }
  if (K != 0.0) {
    for (int i = 0; i < N; ++i) {
      detail::add_product(h, -K / 16.0, 'X', i,
                          {{{1.0, -1}, {3.0, site(i - 1)}}, {{1.0, -1}, {3.0, site(i + 1)}}});
    }
  }
  h.simplify(1e-15);
  return h;
}

/// Electric plus magnetic matrix on the j_max = 1/2 basis, in dual-spin order.
inline Eigen::MatrixXd ym_constructive_dense(int N, double K) {
  const auto basis = enumerate_physical_basis(N, kHalf);
  const SparseHamiltonian h = electric_matrix(basis) + magnetic_matrix(basis, K);
  const auto d = static_cast<Eigen::Index>(pow2(N));
  if (static_cast<Eigen::Index>(basis.size()) != d) throw std::logic_error("basis size is not 2^N");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  std::vector<Index> label(basis.size());
  for (Index k = 0; k < basis.size(); ++k) label[k] = dual_spin_map(basis[k]);
  for (const SparseEntry& e : h.entries)
    out(static_cast<Eigen::Index>(label[e.row]), static_cast<Eigen::Index>(label[e.col])) += e.value;
  return out;
}

/// tr U(i) on a dual-spin string: flips site i and returns the vertex-coefficient product.
inline std::pair<double, Index> plaquette_action(int i, Index bits, int N) {
  const LadderBasisState s = dual_spin_inverse(bits, N);
  const auto terms = plaquette_transitions(s, i, kHalf);
  if (terms.size() != 1) throw std::logic_error("expected a single plaquette transition at j_max = 1/2");
  return {terms.front().amplitude, dual_spin_map(terms.front().to)};
}

}  // namespace hps::gauge
