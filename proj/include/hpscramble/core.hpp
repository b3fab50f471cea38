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

#include <charconv>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hps {

using Complex = std::complex<double>;

/// Basis-state label. Qubit 0 is the most significant bit.
using Index = std::uint64_t;

inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kProjectionThreshold = 1e-14;

/// Dense simulation refuses registers larger than this.
inline constexpr int kMaxStateQubits = 28;

/// Raised when an EPR projection has (numerically) zero probability.
class ProjectionError : public std::runtime_error {
 public:
  explicit ProjectionError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a requested dense object would exceed its feasibility bound.
class SizeError : public std::length_error {
 public:
  explicit SizeError(const std::string& what) : std::length_error(what) {}
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline constexpr Index pow2(int k) { return Index{1} << k; }

/// Bit position (from the least significant end) of qubit `q` in an n-qubit label.
inline constexpr int bit_of(int n_qubits, int q) { return n_qubits - 1 - q; }

}  // namespace hps
