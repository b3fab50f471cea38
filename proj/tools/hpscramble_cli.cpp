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


#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hpscramble/hpscramble.hpp"

namespace {

using nlohmann::json;

struct Flags {
  std::string config_path;
  std::optional<std::string> model, placement, scope, out, format, dump_circuit, dump_hamiltonian;
  std::optional<int> N, N_A, N_D, every, M;
  std::optional<double> h, m, K, dt, t_max, p;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_traj, n_bootstrap, haar_samples;
  std::vector<int> a_sites, d_sites;
  std::vector<double> times;
  bool exact_reference = false;
  bool diagnostics = false;

  std::optional<std::string> axis, window_in;
  std::vector<double> values, window;
};

void add_common(CLI::App* app, Flags& f, bool noise) {
  app->add_option("--config", f.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  app->add_option("--model", f.model, "ising | ym | haar");
  app->add_option("--N", f.N, "system qubits");
  app->add_option("--N-A", f.N_A, "input qubits");
  app->add_option("--N-D", f.N_D, "output qubits");
  app->add_option("--placement", f.placement, "ising_default | ym_default | explicit");
  app->add_option("--a-sites", f.a_sites, "explicit A sites");
  app->add_option("--d-sites", f.d_sites, "explicit D sites");
  app->add_option("--h", f.h, "Ising transverse field");
  app->add_option("--m", f.m, "Ising longitudinal field");
  app->add_option("--K", f.K, "YM plaquette coupling");
  app->add_option("--dt", f.dt, "Trotter step");
  app->add_option("--t-max", f.t_max, "final time");
  app->add_option("--every", f.every, "record every k steps");
  app->add_option("--M", f.M, "number of steps to t-max (sets dt)");
  app->add_option("--times", f.times, "explicit record times");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--haar-samples", f.haar_samples, "Haar samples for the haar model");
  app->add_option("--out", f.out, "output file (stdout if omitted)");
  app->add_option("--format", f.format, "csv | json");
  app->add_flag("--exact-reference", f.exact_reference, "add exact-evolution columns");
  app->add_option("--dump-circuit", f.dump_circuit, "write one Trotter step as text ('-' for stdout)");
  app->add_option("--dump-hamiltonian", f.dump_hamiltonian, "write the Pauli Hamiltonian as text ('-' for stdout)");
  if (noise) {
    app->add_option("--p", f.p, "error probability");
    app->add_option("--scope", f.scope, "all_cnots | evolution_only | whole_unitary");
    app->add_option("--n-traj", f.n_traj, "trajectory count");
    app->add_option("--n-bootstrap", f.n_bootstrap, "bootstrap resamples");
    app->add_flag("--diagnostics", f.diagnostics, "channel runs: Renyi-2 diagnostics");
  }
}

template <typename T>
void put(json& j, const std::optional<T>& v, std::initializer_list<const char*> path) {
  if (!v) return;
  json* node = &j;
  const char* const* it = path.begin();
  for (; it + 1 != path.end(); ++it) node = &(*node)[*it];
  (*node)[*it] = *v;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw hps::ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
}

hps::ExperimentConfig build_config(const Flags& f, const std::string& method) {
  json j = f.config_path.empty() ? json::object() : read_json_file(f.config_path);
  json patch = json::object();
  put(patch, f.model, {"model"});
  put(patch, f.N, {"N"});
  put(patch, f.N_A, {"N_A"});
  put(patch, f.N_D, {"N_D"});
  put(patch, f.placement, {"placement"});
  if (!f.a_sites.empty()) patch["a_sites"] = f.a_sites;
  if (!f.d_sites.empty()) patch["d_sites"] = f.d_sites;
  put(patch, f.h, {"ising", "h"});
  put(patch, f.m, {"ising", "m"});
  put(patch, f.K, {"ym", "K"});
  put(patch, f.haar_samples, {"haar", "n_samples"});
  put(patch, f.dt, {"trotter", "dt"});
  put(patch, f.t_max, {"trotter", "t_max"});
  put(patch, f.every, {"trotter", "every"});
  put(patch, f.M, {"trotter", "M"});
  if (!f.times.empty()) patch["trotter"]["times"] = f.times;
  put(patch, f.seed, {"seed"});
  put(patch, f.p, {"noise", "p"});
  put(patch, f.scope, {"noise", "scope"});
  put(patch, f.n_traj, {"noise", "n_traj"});
  put(patch, f.n_bootstrap, {"noise", "n_bootstrap"});
  put(patch, f.out, {"output", "path"});
  put(patch, f.format, {"output", "format"});
  if (f.exact_reference) patch["exact_reference"] = true;
  if (f.diagnostics) patch["diagnostics"] = true;
  put(patch, f.axis, {"sweep", "axis"});
  put(patch, f.window_in, {"sweep", "window_in"});
  if (!f.values.empty()) patch["sweep"]["values"] = f.values;
  if (!f.window.empty()) patch["sweep"]["window"] = f.window;
  if (!method.empty()) patch["method"] = method;
  j.merge_patch(patch);
  return hps::parse_config(j);
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    hps::write_text_file(path, text);
  }
}

void dumps(const Flags& f, const hps::ExperimentConfig& c) {
  if (c.model == "haar") return;
  if (f.dump_circuit) emit(*f.dump_circuit, hps::model_step(c, c.dt).to_text());
  if (f.dump_hamiltonian) emit(*f.dump_hamiltonian, hps::model_hamiltonian(c).to_text());
}

/// Evolution to t_max for single-unitary subcommands.
hps::DenseUnitary model_unitary(const hps::ExperimentConfig& c) {
  if (c.model == "haar") {
    hps::RngStream rng(c.noise.seed, 0);
    return hps::sample_haar_unitary(hps::pow2(c.N), rng);
  }
  const int steps = static_cast<int>(std::lround(c.t_max / c.dt));
  return hps::circuit_unitary(hps::repeat_circuit(hps::model_step(c, c.dt), steps, c.model));
}

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int run_experiment_cmd(const Flags& f, const std::string& method) {
  const auto c = build_config(f, method);
  dumps(f, c);
  const auto run = hps::run_experiment(c);
  emit(c.output_path, hps::format_experiment(run, c.output_format));
  return 0;
}

int run_sweep_cmd(const Flags& f, const std::string& method, const std::string& summary_path) {
  const auto c = build_config(f, method);
  dumps(f, c);
  const auto s = hps::run_sweep(c);
  emit(c.output_path, hps::format_sweep(s, c.output_format));
  if (!summary_path.empty()) emit(summary_path, hps::format_sweep_summary(s));
  return 0;
}

int run_teleport_cmd(const Flags& f, const std::vector<double>& psi_flat, std::size_t samples) {
  const auto c = build_config(f, "");
  const auto L = hps::layout_of(c);
  const hps::StateTeleporter tp(L, model_unitary(c));
  const double p_ideal = hps::run_hp_ideal(L, model_unitary(c)).p_epr;
  const double dA = static_cast<double>(L.d_A());
  if (!psi_flat.empty()) {
    if (psi_flat.size() != 2 * L.d_A()) throw hps::ConfigError("psi", "needs 2 d_A numbers (re im pairs)");
    std::vector<hps::Complex> psi;
    for (std::size_t k = 0; k < psi_flat.size(); k += 2) psi.emplace_back(psi_flat[k], psi_flat[k + 1]);
    const auto [p, fid] = tp.evaluate(psi);
    std::cout << "p_psi,f_psi\n" << g17(p) << "," << g17(fid) << "\n";
    return 0;
  }
  std::vector<double> pf;
  for (std::size_t k = 0; k < samples; ++k) {
    hps::RngStream rng(c.noise.seed, k);
    const auto s = hps::sample_haar_state(c.N_A, rng);
    const auto [p, fid] = tp.evaluate(std::vector<hps::Complex>(s.amplitudes()));
    pf.push_back(p * fid);
  }
  std::cout << "samples,mean_pf,err_pf,p_epr,predicted\n"
            << samples << "," << g17(hps::detail::mean_of(pf)) << "," << g17(hps::detail::stderr_of(pf)) << ","
            << g17(p_ideal) << "," << g17((p_ideal + 1.0 / dA) / (dA + 1.0)) << "\n";
  return 0;
}

int run_otoc_cmd(const Flags& f, std::size_t samples) {
  const auto c = build_config(f, "");
  const auto L = hps::layout_of(c);
  const auto u = model_unitary(c);
  const auto est = hps::averaged_otoc_mc(L, u, samples, c.noise.seed);
  const auto r = hps::run_hp_ideal(L, u);
  std::cout << "t,samples,otoc,otoc_err,p_epr\n"
            << g17(c.model == "haar" ? 0.0 : c.t_max) << "," << samples << "," << g17(est.mean) << ","
            << g17(est.err) << "," << g17(r.p_epr) << "\n";
  return 0;
}

int run_ym_build_cmd(int N, double K, int twice_jmax, bool basis, const std::string& ham) {
  if (N < 1) throw hps::ConfigError("N", "must be at least 1");
  if (twice_jmax < 1) throw hps::ConfigError("twice-j-max", "must be at least 1");
  const auto jmax = hps::gauge::HalfInt::from_twice(twice_jmax);
  if (basis) {
    const auto states = hps::gauge::enumerate_physical_basis(N, jmax);
    std::cout << "# " << states.size() << " physical states\n";
    for (std::size_t k = 0; k < states.size(); ++k) {
      std::cout << k << " " << states[k].str();
      if (twice_jmax == 1) std::cout << " dual=" << hps::gauge::dual_spin_map(states[k]);
      std::cout << "\n";
    }
  }
  if (ham == "pauli" || ham == "both") {
    if (twice_jmax != 1) throw hps::ConfigError("twice-j-max", "the Pauli form exists only for j_max = 1/2");
    std::cout << hps::gauge::ym_ising_closed_form(N, K).to_text();
  }
  if (ham == "sparse" || ham == "both") {
    const auto states = hps::gauge::enumerate_physical_basis(N, jmax);
    const auto hm = hps::gauge::electric_matrix(states) + hps::gauge::magnetic_matrix(states, K, jmax);
    std::cout << hm.to_text();
  }
  return 0;
}

int run_validate_cmd(const Flags& f) {
  const auto c = build_config(f, "");
  const auto checks = hps::validate_suite(c);
  bool ok = true;
  for (const auto& ch : checks) {
    std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << ": " << ch.detail << "\n";
    ok = ok && ch.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hayden-Preskill scrambling experiments on Ising and Yang-Mills chains"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  Flags ideal_f, noisy_f, channel_f, tele_f, otoc_f, sweep_f, validate_f;
  auto* ideal = app.add_subcommand("hp-ideal", "noiseless protocol over a time grid");
  add_common(ideal, ideal_f, false);
  auto* noisy = app.add_subcommand("hp-noisy", "per-CNOT noise by quantum trajectories");
  add_common(noisy, noisy_f, true);
  auto* channel = app.add_subcommand("hp-channel", "exact density-operator evolution with noise");
  add_common(channel, channel_f, true);

  auto* tele = app.add_subcommand("teleport-state", "teleport a single state (no reference qubits)");
  add_common(tele, tele_f, false);
  std::vector<double> psi;
  std::size_t tele_samples = 500;
  tele->add_option("--psi", psi, "amplitudes as re im pairs");
  tele->add_option("--samples", tele_samples, "random states when --psi is absent");

  auto* otoc = app.add_subcommand("otoc-mc", "Pauli-averaged OTOC by sampling");
  add_common(otoc, otoc_f, false);
  std::size_t otoc_samples = 2000;
  otoc->add_option("--samples", otoc_samples, "Pauli pairs");

  auto* ym = app.add_subcommand("ym-build", "dump the truncated gauge basis and Hamiltonians");
  int ym_N = 4, twice_jmax = 1;
  double ym_K = 2.0;
  bool ym_basis = false;
  std::string ym_ham;
  ym->add_option("--N", ym_N, "plaquettes");
  ym->add_option("--K", ym_K, "plaquette coupling");
  ym->add_option("--twice-j-max", twice_jmax, "2 j_max");
  ym->add_flag("--dump-basis", ym_basis, "list physical states");
  ym->add_option("--dump-hamiltonian", ym_ham, "pauli | sparse | both")
      ->check(CLI::IsMember({"pauli", "sparse", "both"}));

  auto* sweep = app.add_subcommand("sweep", "scan one parameter and aggregate late-time values");
  add_common(sweep, sweep_f, true);
  std::string sweep_method, summary_path;
  sweep->add_option("--axis", sweep_f.axis, "t | K | p | N | M");
  sweep->add_option("--values", sweep_f.values, "axis values");
  sweep->add_option("--window", sweep_f.window, "averaging window lo hi")->expected(2);
  sweep->add_option("--window-in", sweep_f.window_in, "t | Kt");
  sweep->add_option("--method", sweep_method, "ideal | trajectories | channel");
  sweep->add_option("--summary", summary_path, "write per-value aggregates here");

  auto* validate = app.add_subcommand("validate", "check a configuration and run fast invariants");
  add_common(validate, validate_f, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ideal) return run_experiment_cmd(ideal_f, "ideal");
    if (*noisy) return run_experiment_cmd(noisy_f, "trajectories");
    if (*channel) return run_experiment_cmd(channel_f, "channel");
    if (*tele) return run_teleport_cmd(tele_f, psi, tele_samples);
    if (*otoc) return run_otoc_cmd(otoc_f, otoc_samples);
    if (*ym) return run_ym_build_cmd(ym_N, ym_K, twice_jmax, ym_basis, ym_ham);
    if (*sweep) return run_sweep_cmd(sweep_f, sweep_method, summary_path);
    if (*validate) return run_validate_cmd(validate_f);
  } catch (const hps::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
