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
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpscramble/circuits.hpp"
#include "hpscramble/gauge.hpp"
#include "hpscramble/protocol.hpp"
#include "hpscramble/unitary.hpp"

namespace hps {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class Method { kIdeal, kTrajectories, kChannel };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::kIdeal: return "ideal";
    case Method::kTrajectories: return "trajectories";
    case Method::kChannel: return "channel";
  }
  return "?";
}

struct ExperimentConfig {
  std::string model = "ising";  // ising | ym | haar
  double h = -1.05;
  double m = 0.5;
  double K = 2.0;
  int N = 8;
  int N_A = 1;
  int N_D = 2;
  Placement placement = Placement::kIsingDefault;
  std::vector<int> a_sites;
  std::vector<int> d_sites;

  // Time grid: dt, the last time and the recording stride in steps, or an
  // explicit list of times (multiples of dt).
  double dt = 0.1;
  double t_max = 10.0;
  int every = 1;
  std::vector<double> times;

  Method method = Method::kIdeal;
  NoiseSpec noise;
  bool diagnostics = false;
  bool exact_reference = false;
  std::size_t haar_samples = 200;

  std::string sweep_axis;
  std::vector<double> sweep_values;
  double window_lo = 0.0;
  double window_hi = 0.0;
  bool window_in_kt = false;

  std::string output_path;
  std::string output_format = "csv";

  std::uint64_t seed() const { return noise.seed; }
};

namespace detail {

using Json = nlohmann::json;

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline void reject_unknown(const Json& j, const std::string& path, std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(join_path(path, it.key()), "unknown field");
  }
}

template <typename T>
T get_field(const Json& j, const std::string& path, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  const std::string p = join_path(path, key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(p, "expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(p, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
        throw ConfigError(p, "must be non-negative");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(p, "expected a number");
  } else {
    if (!v.is_string()) throw ConfigError(p, "expected a string");
  }
  return v.get<T>();
}

template <typename T>
std::vector<T> get_list(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) return {};
  const Json& v = j.at(key);
  const std::string p = join_path(path, key);
  if (!v.is_array()) throw ConfigError(p, "expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string pi = p + "[" + std::to_string(i) + "]";
    if constexpr (std::is_integral_v<T>) {
      if (!v[i].is_number_integer()) throw ConfigError(pi, "expected an integer");
    } else {
      if (!v[i].is_number()) throw ConfigError(pi, "expected a number");
    }
    out.push_back(v[i].get<T>());
  }
  return out;
}

inline const Json& get_object(const Json& j, const std::string& path, const char* key) {
  static const Json kEmpty = Json::object();
  if (!j.contains(key)) return kEmpty;
  const Json& v = j.at(key);
  if (!v.is_object()) throw ConfigError(join_path(path, key), "expected an object");
  return v;
}

inline std::string fmt_double(double x) {
  return format_double(x);
}

}  // namespace detail

/// Checks ranges and cross-field constraints; throws ConfigError naming the field.
inline void validate_config(const ExperimentConfig& c) {
  if (c.model != "ising" && c.model != "ym" && c.model != "haar")
    throw ConfigError("model", "must be one of ising, ym, haar (got '" + c.model + "')");
  if (c.N < 1 || c.N > 12) throw ConfigError("N", "must lie in [1, 12]");
  if (c.model == "ising" && c.N < 2) throw ConfigError("N", "the Ising chain needs N >= 2");
  if (c.N_A < 1 || c.N_A > c.N) throw ConfigError("N_A", "must lie in [1, N]");
  if (c.N_D < 1) throw ConfigError("N_D", "must be at least 1");
  if (c.N_D > c.N) throw ConfigError("N_D", "must not exceed N (N_D = " + std::to_string(c.N_D) + ", N = " + std::to_string(c.N) + ")");
  if (c.model == "ym" && c.K < 0) throw ConfigError("ym.K", "must be non-negative");
  if (!std::isfinite(c.h)) throw ConfigError("ising.h", "must be finite");
  if (!std::isfinite(c.m)) throw ConfigError("ising.m", "must be finite");
  if (!(c.dt > 0) || !std::isfinite(c.dt)) throw ConfigError("trotter.dt", "must be positive");
  if (c.times.empty()) {
    if (!(c.t_max >= 0)) throw ConfigError("trotter.t_max", "must be non-negative");
    if (c.every < 1) throw ConfigError("trotter.every", "must be at least 1");
  }
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    const std::string p = "trotter.times[" + std::to_string(i) + "]";
    if (c.times[i] < 0) throw ConfigError(p, "must be non-negative");
    if (i > 0 && !(c.times[i] > c.times[i - 1])) throw ConfigError(p, "times must be strictly increasing");
    const double steps = std::round(c.times[i] / c.dt);
    if (std::abs(steps * c.dt - c.times[i]) > 1e-9 * std::max(1.0, c.times[i]))
      throw ConfigError(p, "must be a multiple of trotter.dt");
  }
  if (!(c.noise.p >= 0.0 && c.noise.p <= 1.0))
    throw ConfigError("noise.p", "must lie in [0, 1] (got " + detail::fmt_double(c.noise.p) + ")");
  if (c.noise.n_traj < 1) throw ConfigError("noise.n_traj", "must be at least 1");
  if (c.method == Method::kTrajectories && c.noise.scope == NoiseScope::kWholeUnitary)
    throw ConfigError("noise.scope", "trajectories support all_cnots and evolution_only");
  if (c.method == Method::kChannel && 2 * c.N + 2 * c.N_A > 12)
    throw ConfigError("N", "channel runs need 2 N + 2 N_A <= 12");
  if (c.model == "haar" && c.method == Method::kTrajectories)
    throw ConfigError("method", "Haar unitaries have no circuit for per-CNOT trajectories");
  if (c.model == "haar" && c.method == Method::kChannel && c.noise.scope != NoiseScope::kWholeUnitary &&
      c.noise.p > 0)
    throw ConfigError("noise.scope", "Haar unitaries support only whole_unitary noise");
  if (c.haar_samples < 1) throw ConfigError("haar.n_samples", "must be at least 1");
  if (c.placement == Placement::kYmDefault && (c.N_A + 2 > c.N || c.N_D + 2 > c.N))
    throw ConfigError("placement", "ym_default needs N_A + 2 <= N and N_D + 2 <= N");
  if (c.placement == Placement::kExplicit) {
    auto check = [&](const std::vector<int>& v, int want, const char* key) {
      if (static_cast<int>(v.size()) != want)
        throw ConfigError(key, "needs exactly " + std::to_string(want) + " entries");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = std::string(key) + "[" + std::to_string(i) + "]";
        if (v[i] < 0 || v[i] >= c.N) throw ConfigError(p, "site out of range");
        for (std::size_t j = 0; j < i; ++j)
          if (v[i] == v[j]) throw ConfigError(p, "site repeated");
      }
    };
    check(c.a_sites, c.N_A, "a_sites");
    check(c.d_sites, c.N_D, "d_sites");
  }
  if (!c.sweep_axis.empty()) {
    const auto& a = c.sweep_axis;
    if (a != "t" && a != "K" && a != "p" && a != "N" && a != "M")
      throw ConfigError("sweep.axis", "must be one of t, K, p, N, M");
    if (c.sweep_values.empty()) throw ConfigError("sweep.values", "must be nonempty");
    if (c.window_hi < c.window_lo) throw ConfigError("sweep.window", "upper end below lower end");
  }
  if (c.output_format != "csv" && c.output_format != "json")
    throw ConfigError("output.format", "must be csv or json");
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::get_field;
  using detail::get_list;
  using detail::get_object;
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  detail::reject_unknown(j, "", {"model", "ising", "ym", "haar", "N", "N_A", "N_D", "placement", "a_sites",
                                 "d_sites", "trotter", "method", "noise", "diagnostics", "exact_reference",
                                 "seed", "sweep", "output"});
  ExperimentConfig c;
  c.model = get_field<std::string>(j, "", "model", c.model);
  const auto& ising = get_object(j, "", "ising");
  detail::reject_unknown(ising, "ising", {"h", "m"});
  c.h = get_field<double>(ising, "ising", "h", c.h);
  c.m = get_field<double>(ising, "ising", "m", c.m);
  const auto& ym = get_object(j, "", "ym");
  detail::reject_unknown(ym, "ym", {"K"});
  c.K = get_field<double>(ym, "ym", "K", c.K);
  const auto& haar = get_object(j, "", "haar");
  detail::reject_unknown(haar, "haar", {"n_samples"});
  c.haar_samples = get_field<std::size_t>(haar, "haar", "n_samples", c.haar_samples);

  c.N = get_field<int>(j, "", "N", c.N);
  c.N_A = get_field<int>(j, "", "N_A", c.N_A);
  c.N_D = get_field<int>(j, "", "N_D", c.N_D);
  const std::string default_placement = c.model == "ym" ? "ym_default" : "ising_default";
  try {
    c.placement = parse_placement(get_field<std::string>(j, "", "placement", default_placement));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("placement", e.what());
  }
  c.a_sites = get_list<int>(j, "", "a_sites");
  c.d_sites = get_list<int>(j, "", "d_sites");

  const auto& tr = get_object(j, "", "trotter");
  detail::reject_unknown(tr, "trotter", {"dt", "t_max", "every", "M", "times"});
  c.dt = get_field<double>(tr, "trotter", "dt", c.model == "ym" ? 0.5 : 0.1);
  c.t_max = get_field<double>(tr, "trotter", "t_max", c.t_max);
  c.every = get_field<int>(tr, "trotter", "every", c.every);
  if (tr.contains("M")) {
    const int M = get_field<int>(tr, "trotter", "M", 1);
    if (M < 1) throw ConfigError("trotter.M", "must be at least 1");
    if (tr.contains("dt")) throw ConfigError("trotter.M", "give either dt or M, not both");
    c.dt = c.t_max / M;
    c.every = M;
  }
  c.times = get_list<double>(tr, "trotter", "times");

  const std::string method = get_field<std::string>(j, "", "method", "ideal");
  if (method == "ideal") c.method = Method::kIdeal;
  else if (method == "trajectories") c.method = Method::kTrajectories;
  else if (method == "channel") c.method = Method::kChannel;
  else throw ConfigError("method", "must be one of ideal, trajectories, channel");

  const auto& nz = get_object(j, "", "noise");
  detail::reject_unknown(nz, "noise", {"p", "scope", "n_traj", "n_bootstrap"});
  c.noise.p = get_field<double>(nz, "noise", "p", 0.0);
  try {
    c.noise.scope = parse_scope(get_field<std::string>(nz, "noise", "scope", "all_cnots"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("noise.scope", e.what());
  }
  c.noise.n_traj = get_field<std::size_t>(nz, "noise", "n_traj", c.noise.n_traj);
  c.noise.n_bootstrap = get_field<std::size_t>(nz, "noise", "n_bootstrap", c.noise.n_bootstrap);
  c.noise.seed = get_field<std::uint64_t>(j, "", "seed", c.noise.seed);
  c.diagnostics = get_field<bool>(j, "", "diagnostics", c.diagnostics);
  c.exact_reference = get_field<bool>(j, "", "exact_reference", c.exact_reference);

  const auto& sw = get_object(j, "", "sweep");
  detail::reject_unknown(sw, "sweep", {"axis", "values", "window", "window_in"});
  c.sweep_axis = get_field<std::string>(sw, "sweep", "axis", "");
  c.sweep_values = get_list<double>(sw, "sweep", "values");
  const auto window = get_list<double>(sw, "sweep", "window");
  if (!window.empty()) {
    if (window.size() != 2) throw ConfigError("sweep.window", "expected [lo, hi]");
    c.window_lo = window[0];
    c.window_hi = window[1];
  }
  const std::string win_in = get_field<std::string>(sw, "sweep", "window_in", "t");
  if (win_in != "t" && win_in != "Kt") throw ConfigError("sweep.window_in", "must be t or Kt");
  c.window_in_kt = win_in == "Kt";

  const auto& out = get_object(j, "", "output");
  detail::reject_unknown(out, "output", {"path", "format"});
  c.output_path = get_field<std::string>(out, "output", "path", "");
  c.output_format = get_field<std::string>(out, "output", "format", "csv");
  validate_config(c);
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline ProtocolLayout layout_of(const ExperimentConfig& c) {
  return make_layout(c.N, c.N_A, c.N_D, c.placement, c.a_sites, c.d_sites);
}

/// Trotter step for the configured model (empty for haar).
inline Circuit model_step(const ExperimentConfig& c, double dt) {
  if (c.model == "ising") return build_ising_step({c.N, c.h, c.m}, dt);
  if (c.model == "ym") return build_ym_step({c.N, c.K}, dt);
  throw std::invalid_argument("the haar model has no Trotter step");
}

inline PauliHamiltonian model_hamiltonian(const ExperimentConfig& c) {
  if (c.model == "ising") return ising_hamiltonian({c.N, c.h, c.m});
  if (c.model == "ym") return gauge::ym_ising_closed_form(c.N, c.K);
  throw std::invalid_argument("the haar model has no Hamiltonian");
}

/// Cumulative step counts at which results are recorded.
inline std::vector<int> checkpoint_steps(const ExperimentConfig& c) {
  std::vector<int> steps;
  if (!c.times.empty()) {
    for (double t : c.times) steps.push_back(static_cast<int>(std::lround(t / c.dt)));
    return steps;
  }
  const int last = static_cast<int>(std::lround(c.t_max / c.dt));
  for (int k = 0; k <= last; k += c.every) steps.push_back(k);
  if (steps.back() != last) steps.push_back(last);
  return steps;
}

struct ResultRow {
  HpResult result;
  int steps = 0;
  std::optional<double> p_exact;
  std::optional<double> f_exact;
  std::string sweep_axis;
  double sweep_value = 0.0;
};

struct ExperimentOutput {
  ExperimentConfig config;
  ProtocolLayout layout;
  std::vector<ResultRow> rows;
};

inline ExperimentOutput run_experiment(const ExperimentConfig& c) {
  validate_config(c);
  ExperimentOutput out{c, layout_of(c), {}};
  const auto& L = out.layout;

  if (c.model == "haar") {
    std::vector<double> ps, js;
    for (std::size_t k = 0; k < c.haar_samples; ++k) {
      RngStream rng(c.noise.seed, k);
      const DenseUnitary u = sample_haar_unitary(L.d(), rng);
      const HpResult r = c.method == Method::kChannel ? run_hp_channel_exact(L, u, c.noise, false)
                                                      : run_hp_ideal(L, u);
      ps.push_back(r.p_epr);
      js.push_back(r.p_epr * r.f_epr);
    }
    ResultRow row;
    row.result.p_epr = detail::mean_of(ps);
    row.result.p_err = detail::stderr_of(ps);
    const auto [f, ferr] =
        bootstrap_ratio(js, ps, c.noise.n_bootstrap, RngStream(c.noise.seed, std::uint64_t{1} << 62));
    row.result.f_epr = f;
    row.result.f_err = ferr;
    row.result.n_traj = c.haar_samples;
    out.rows.push_back(row);
    return out;
  }

  const auto steps = checkpoint_steps(c);
  const Circuit step = model_step(c, c.dt);
  std::vector<HpResult> results;
  switch (c.method) {
    case Method::kIdeal: results = run_hp_ideal_series(L, step, steps, c.dt); break;
    case Method::kTrajectories: results = run_hp_trajectories_series(L, step, steps, c.dt, c.noise); break;
    case Method::kChannel: results = run_hp_channel_series(L, step, steps, c.dt, c.noise, c.diagnostics); break;
  }
  std::vector<HpResult> exact;
  if (c.exact_reference) {
    std::vector<double> ts;
    for (int s : steps) ts.push_back(s * c.dt);
    exact = run_hp_exact_series(L, model_hamiltonian(c), ts);
  }
  for (std::size_t k = 0; k < results.size(); ++k) {
    ResultRow row;
    row.result = results[k];
    row.steps = steps[k];
    if (!exact.empty()) {
      row.p_exact = exact[k].p_epr;
      row.f_exact = exact[k].f_epr;
    }
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps.

struct SweepSummary {
  double value = 0.0;
  double t_final = 0.0;
  double p_final = 0.0;
  double f_final = 0.0;
  double p_window = std::numeric_limits<double>::quiet_NaN();
  double f_window = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_window = 0;
  std::optional<double> p_exact_final;
  std::optional<double> f_exact_final;
};

struct SweepOutput {
  std::string axis;
  std::vector<ExperimentOutput> runs;
  std::vector<SweepSummary> summary;
};

inline ExperimentConfig sweep_point(const ExperimentConfig& base, const std::string& axis, double v) {
  ExperimentConfig c = base;
  c.sweep_axis.clear();
  c.sweep_values.clear();
  auto as_int = [&](const char* what) {
    if (v != std::round(v)) throw ConfigError("sweep.values", std::string(what) + " values must be integers");
    return static_cast<int>(v);
  };
  if (axis == "K") {
    c.K = v;
  } else if (axis == "p") {
    c.noise.p = v;
  } else if (axis == "N") {
    c.N = as_int("N");
  } else if (axis == "M") {
    const double t_end = c.times.empty() ? c.t_max : c.times.back();
    const int M = as_int("M");
    if (M < 1) throw ConfigError("sweep.values", "M values must be at least 1");
    c.dt = t_end / M;
    c.times = {t_end};
  } else if (axis == "t") {
    throw std::logic_error("time sweeps run as a single series");
  }
  return c;
}

inline SweepOutput run_sweep(const ExperimentConfig& base) {
  validate_config(base);
  if (base.sweep_axis.empty()) throw ConfigError("sweep.axis", "missing");
  SweepOutput out;
  out.axis = base.sweep_axis;
  std::vector<ExperimentConfig> points;
  if (base.sweep_axis == "t") {
    ExperimentConfig c = base;
    c.sweep_axis.clear();
    c.sweep_values.clear();
    c.times = base.sweep_values;
    points.push_back(c);
  } else {
    for (double v : base.sweep_values) points.push_back(sweep_point(base, base.sweep_axis, v));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    ExperimentOutput run = run_experiment(points[i]);
    for (std::size_t r = 0; r < run.rows.size(); ++r) {
      run.rows[r].sweep_axis = base.sweep_axis;
      run.rows[r].sweep_value = base.sweep_axis == "t" ? run.rows[r].result.t : base.sweep_values[i];
    }
    if (base.sweep_axis != "t") {
      SweepSummary s;
      s.value = base.sweep_values[i];
      const ResultRow& last = run.rows.back();
      s.t_final = last.result.t;
      s.p_final = last.result.p_epr;
      s.f_final = last.result.f_epr;
      s.p_exact_final = last.p_exact;
      s.f_exact_final = last.f_exact;
      double sp = 0, sf = 0;
      for (const ResultRow& row : run.rows) {
        const double x = base.window_in_kt ? points[i].K * row.result.t : row.result.t;
        if (base.window_hi > base.window_lo && x >= base.window_lo - 1e-12 && x <= base.window_hi + 1e-12) {
          sp += row.result.p_epr;
          sf += row.result.f_epr;
          ++s.n_window;
        }
      }
      if (s.n_window > 0) {
        s.p_window = sp / static_cast<double>(s.n_window);
        s.f_window = sf / static_cast<double>(s.n_window);
      }
      out.summary.push_back(s);
    }
    out.runs.push_back(std::move(run));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization.

inline std::string join_sites(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
  return s;
}

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {
      "model", "N", "N_A", "N_D", "placement", "a_sites", "d_sites", "t", "dt", "M", "K", "h", "m", "p",
      "scope", "method", "n_traj", "p_epr", "p_err", "f_epr", "f_err", "seed", "Kt", "s2_r", "s2_bd",
      "s2_rbd", "i2", "delta", "p_exact", "f_exact", "sweep_axis", "sweep_value"};
  return cols;
}

/// One record as ordered key/value pairs. Absent optional values are null.
inline nlohmann::ordered_json row_record(const ExperimentOutput& run, const ResultRow& row) {
  const auto& c = run.config;
  const auto& r = row.result;
  nlohmann::ordered_json j;
  j["model"] = c.model;
  j["N"] = c.N;
  j["N_A"] = c.N_A;
  j["N_D"] = c.N_D;
  j["placement"] = to_string(c.placement);
  j["a_sites"] = join_sites(run.layout.a_sites);
  j["d_sites"] = join_sites(run.layout.d_sites);
  j["t"] = r.t;
  j["dt"] = c.model == "haar" ? 0.0 : c.dt;
  j["M"] = row.steps;
  j["K"] = c.model == "ym" ? c.K : 0.0;
  j["h"] = c.model == "ising" ? c.h : 0.0;
  j["m"] = c.model == "ising" ? c.m : 0.0;
  j["p"] = c.method == Method::kIdeal ? 0.0 : c.noise.p;
  j["scope"] = c.method == Method::kIdeal ? "none" : to_string(c.noise.scope);
  j["method"] = to_string(c.method);
  j["n_traj"] = r.n_traj;
  j["p_epr"] = r.p_epr;
  j["p_err"] = r.p_err;
  j["f_epr"] = r.f_epr;
  j["f_err"] = r.f_err;
  j["seed"] = c.noise.seed;
  j["Kt"] = c.model == "ym" ? c.K * r.t : r.t;
  if (r.diagnostics) {
    j["s2_r"] = r.diagnostics->s2_r;
    j["s2_bd"] = r.diagnostics->s2_bd;
    j["s2_rbd"] = r.diagnostics->s2_rbd;
    j["i2"] = r.diagnostics->i2;
    j["delta"] = r.diagnostics->delta;
  } else {
    for (const char* k : {"s2_r", "s2_bd", "s2_rbd", "i2", "delta"}) j[k] = nullptr;
  }
  j["p_exact"] = row.p_exact ? nlohmann::ordered_json(*row.p_exact) : nlohmann::ordered_json(nullptr);
  j["f_exact"] = row.f_exact ? nlohmann::ordered_json(*row.f_exact) : nlohmann::ordered_json(nullptr);
  if (row.sweep_axis.empty()) {
    j["sweep_axis"] = nullptr;
    j["sweep_value"] = nullptr;
  } else {
    j["sweep_axis"] = row.sweep_axis;
    j["sweep_value"] = row.sweep_value;
  }
  return j;
}

inline std::string csv_cell(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return detail::fmt_double(v.get<double>());
  return v.dump();
}

inline std::string to_csv(const std::vector<nlohmann::ordered_json>& records,
                          const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  s += "\n";
  for (const auto& r : records) {
    for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + csv_cell(r.at(cols[i]));
    s += "\n";
  }
  return s;
}

inline std::vector<nlohmann::ordered_json> records_of(const ExperimentOutput& run) {
  std::vector<nlohmann::ordered_json> out;
  for (const auto& row : run.rows) out.push_back(row_record(run, row));
  return out;
}

inline std::vector<nlohmann::ordered_json> summary_records(const SweepOutput& s) {
  std::vector<nlohmann::ordered_json> out;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  auto num = [](double v) { return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v); };
  for (const auto& x : s.summary) {
    nlohmann::ordered_json j;
    j["sweep_axis"] = s.axis;
    j["sweep_value"] = x.value;
    j["t_final"] = x.t_final;
    j["p_final"] = x.p_final;
    j["f_final"] = x.f_final;
    j["p_window"] = num(x.p_window);
    j["f_window"] = num(x.f_window);
    j["n_window"] = x.n_window;
    j["p_exact_final"] = opt(x.p_exact_final);
    j["f_exact_final"] = opt(x.f_exact_final);
    out.push_back(j);
  }
  return out;
}

inline const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols = {"sweep_axis", "sweep_value", "t_final", "p_final",
                                                "f_final", "p_window", "f_window", "n_window",
                                                "p_exact_final", "f_exact_final"};
  return cols;
}

inline std::string format_records(const std::vector<nlohmann::ordered_json>& records,
                                  const std::vector<std::string>& cols, const std::string& format) {
  if (format == "json") {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : records) arr.push_back(r);
    return arr.dump(2) + "\n";
  }
  return to_csv(records, cols);
}

inline std::string format_experiment(const ExperimentOutput& run, const std::string& format) {
  return format_records(records_of(run), result_columns(), format);
}

inline std::string format_sweep(const SweepOutput& s, const std::string& format) {
  std::vector<nlohmann::ordered_json> rows;
  for (const auto& run : s.runs)
    for (auto& r : records_of(run)) rows.push_back(std::move(r));
  if (format == "json") {
    nlohmann::ordered_json j;
    j["points"] = rows;
    j["summary"] = summary_records(s);
    return j.dump(2) + "\n";
  }
  return to_csv(rows, result_columns());
}

inline std::string format_sweep_summary(const SweepOutput& s) {
  return to_csv(summary_records(s), summary_columns());
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

// ---------------------------------------------------------------------------
// Fast invariant suite.

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline std::vector<CheckResult> validate_suite(const ExperimentConfig& c) {
  std::vector<CheckResult> out;
  auto record = [&](std::string name, bool pass, std::string detail) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      record(name, false, std::string("exception: ") + e.what());
    }
  };
  const ProtocolLayout L = layout_of(c);
  const double dA2 = static_cast<double>(L.d_A() * L.d_A());

  guarded("identity_anchor", [&] {
    const HpResult r = run_hp_ideal(L, Circuit(c.N));
    const bool ok = std::abs(r.p_epr - 1.0) < 1e-12 && std::abs(r.f_epr - 1.0 / dA2) < 1e-12;
    record("identity_anchor", ok, "p=" + detail::fmt_double(r.p_epr) + " f=" + detail::fmt_double(r.f_epr));
  });

  if (c.model != "haar") {
    guarded("ideal_identity", [&] {
      const auto rs = run_hp_ideal_series(L, model_step(c, c.dt), {1, 5, 10}, c.dt);
      double worst = 0, bound_gap = 0;
      const double bound = std::max(1.0 / dA2, 1.0 / static_cast<double>(L.d_D() * L.d_D()));
      for (const auto& r : rs) {
        worst = std::max(worst, std::abs(r.f_epr * r.p_epr * dA2 - 1.0));
        bound_gap = std::min(bound_gap, r.p_epr - bound);
      }
      record("ideal_identity", worst < 1e-9 && bound_gap > -1e-9,
             "max|f p d_A^2 - 1|=" + detail::fmt_double(worst) + " min(p - bound)=" + detail::fmt_double(bound_gap));
    });
    guarded("cnot_count", [&] {
      const auto n = model_step(c, c.dt).cnot_count();
      std::size_t want = 0;
      if (c.model == "ising") want = static_cast<std::size_t>(2 * (c.N - 1));
      else want = c.N == 1 ? 0 : static_cast<std::size_t>(10 * c.N - 14);
      if (c.model == "ym" && c.K == 0.0) want = static_cast<std::size_t>(2 * (c.N - 1));
      record("cnot_count", n == want, std::to_string(n) + " per step, expected " + std::to_string(want));
    });
    guarded("circuit_text_roundtrip", [&] {
      const Circuit s = model_step(c, c.dt);
      record("circuit_text_roundtrip", Circuit::from_text(s.to_text(), c.N) == s, s.label());
    });
  }

  guarded("epr_prep_cnots", [&] {
    const auto pairs = L.prep_pairs();
    const auto n = build_epr_prep(pairs, L.total_qubits()).cnot_count();
    record("epr_prep_cnots", n == pairs.size(), std::to_string(n) + " CNOTs for " + std::to_string(pairs.size()) + " pairs");
  });

  guarded("haar_closed_form", [&] {
    const HaarBaselines h = haar_baselines(L);
    const bool ok = std::abs(h.p_exact * h.f_exact * dA2 - 1.0) < 1e-12 && h.p_exact > 0 && h.p_exact <= 1 &&
                    h.purity_rd_exact > 0;
    record("haar_closed_form", ok,
           "p=" + h.p_exact_fraction + " (" + detail::fmt_double(h.p_exact) + ") f=" + detail::fmt_double(h.f_exact));
  });

  if (c.model == "ym") {
    guarded("gauge_oracle", [&] {
      const int n = std::min(c.N, 6);
      const Eigen::MatrixXd a = gauge::ym_constructive_dense(n, c.K);
      const Eigen::MatrixXd b = gauge::ym_ising_closed_form(n, c.K).dense().real();
      const double err = (a - b).cwiseAbs().maxCoeff();
      record("gauge_oracle", err < 1e-12, "N=" + std::to_string(n) + " max error " + detail::fmt_double(err));
    });
  }
  return out;
}

}  // namespace hps
