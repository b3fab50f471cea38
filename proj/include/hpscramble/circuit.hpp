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
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hps {

enum class GateKind { kH, kRZ, kCNOT };

/// One elementary gate. For CNOT, q0 is the control and q1 the target.
struct Gate {
  GateKind kind = GateKind::kH;
  int q0 = 0;
  int q1 = -1;
  double angle = 0.0;

  static Gate h(int q) { return {GateKind::kH, q, -1, 0.0}; }
  static Gate rz(int q, double theta) { return {GateKind::kRZ, q, -1, theta}; }
  static Gate cnot(int control, int target) {
    if (control == target) throw std::invalid_argument("CNOT control equals target");
    return {GateKind::kCNOT, control, target, 0.0};
  }

  int arity() const { return kind == GateKind::kCNOT ? 2 : 1; }
  int max_qubit() const { return std::max(q0, q1); }

  friend bool operator==(const Gate&, const Gate&) = default;
};

/// Ordered gate list. List order is time order.
class Circuit {
 public:
  Circuit() = default;
  explicit Circuit(int n_qubits, std::string label = {})
      : n_qubits_(n_qubits), label_(std::move(label)) {
    if (n_qubits < 0) throw std::invalid_argument("negative qubit count");
  }

  int n_qubits() const { return n_qubits_; }
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }
  const std::vector<Gate>& gates() const { return gates_; }
  std::size_t size() const { return gates_.size(); }
  bool empty() const { return gates_.empty(); }

  Circuit& append(const Gate& g) {
    check(g);
    gates_.push_back(g);
    return *this;
  }
  Circuit& h(int q) { return append(Gate::h(q)); }
  Circuit& rz(int q, double theta) { return append(Gate::rz(q, theta)); }
  Circuit& cnot(int c, int t) { return append(Gate::cnot(c, t)); }

  /// Appends `other` after this circuit. Register sizes must agree.
  Circuit& append(const Circuit& other) {
    if (other.n_qubits_ > n_qubits_) throw std::invalid_argument("appended circuit is wider");
    gates_.insert(gates_.end(), other.gates_.begin(), other.gates_.end());
    return *this;
  }

  void reserve(std::size_t n) { gates_.reserve(n); }

  std::size_t cnot_count() const {
    return static_cast<std::size_t>(std::count_if(
        gates_.begin(), gates_.end(), [](const Gate& g) { return g.kind == GateKind::kCNOT; }));
  }

  /// Reversed order with negated RZ angles.
  Circuit inverse() const {
    Circuit out(n_qubits_, label_.empty() ? label_ : label_ + "^-1");
    out.gates_.assign(gates_.rbegin(), gates_.rend());
    for (Gate& g : out.gates_) g.angle = -g.angle;
    return out;
  }

  /// Line format: `H q`, `RZ q theta`, `CNOT c t`.
  std::string to_text() const {
    std::string out;
    char buf[96];
    for (const Gate& g : gates_) {
      switch (g.kind) {
        case GateKind::kH:
          std::snprintf(buf, sizeof buf, "H %d\n", g.q0);
          break;
        case GateKind::kRZ:
          std::snprintf(buf, sizeof buf, "RZ %d %s\n", g.q0, format_double(g.angle).c_str());
          break;
        case GateKind::kCNOT:
          std::snprintf(buf, sizeof buf, "CNOT %d %d\n", g.q0, g.q1);
          break;
      }
      out += buf;
    }
    return out;
  }

  static Circuit from_text(const std::string& text, int n_qubits) {
    Circuit c(n_qubits);
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ls(line);
      std::string op;
      if (!(ls >> op)) continue;
      auto fail = [&] {
        throw std::invalid_argument("bad circuit line " + std::to_string(line_no) + ": " + line);
      };
      if (op == "H") {
        int q;
        if (!(ls >> q)) fail();
        c.h(q);
      } else if (op == "RZ") {
        int q;
        double theta;
        if (!(ls >> q >> theta)) fail();
        c.rz(q, theta);
      } else if (op == "CNOT") {
        int a, b;
        if (!(ls >> a >> b)) fail();
        c.cnot(a, b);
      } else {
        fail();
      }
    }
    return c;
  }

  friend bool operator==(const Circuit& a, const Circuit& b) {
    return a.n_qubits_ == b.n_qubits_ && a.gates_ == b.gates_;
  }

 private:
  void check(const Gate& g) const {
    if (g.q0 < 0 || g.q0 >= n_qubits_ || (g.arity() == 2 && (g.q1 < 0 || g.q1 >= n_qubits_)))
      throw std::out_of_range("gate qubit index out of range");
  }

  int n_qubits_ = 0;
  std::string label_;
  std::vector<Gate> gates_;
};

}  // namespace hps
