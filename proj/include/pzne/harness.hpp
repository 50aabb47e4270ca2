// Copyright 2026 The pzne Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pzne/bounds.hpp"
#include "pzne/circuit.hpp"
#include "pzne/config.hpp"
#include "pzne/density.hpp"
#include "pzne/error.hpp"
#include "pzne/measurement.hpp"
#include "pzne/mitigation.hpp"
#include "pzne/noise.hpp"
#include "pzne/pauli.hpp"
#include "pzne/rng.hpp"

namespace pzne {

enum class TwirlMode { Off, WholeCircuit, PerLayerSampled };

inline const char* to_string(TwirlMode m) {
  switch (m) {
    case TwirlMode::Off: return "off";
    case TwirlMode::WholeCircuit: return "whole";
    case TwirlMode::PerLayerSampled: return "per_layer";
  }
  return "?";
}

inline TwirlMode twirl_mode_from_string(const std::string& s) {
  if (s == "off") return TwirlMode::Off;
  if (s == "whole") return TwirlMode::WholeCircuit;
  if (s == "per_layer") return TwirlMode::PerLayerSampled;
  throw InvalidArgument("unknown twirl mode '" + s + "' (off, whole, per_layer)");
}

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Depolarizing: return "depolarizing";
    case ErrorKind::Table: return "table";
    case ErrorKind::SampledPauli: return "sampled";
  }
  return "?";
}

inline ErrorKind error_kind_from_string(const std::string& s) {
  if (s == "depolarizing") return ErrorKind::Depolarizing;
  if (s == "table") return ErrorKind::Table;
  if (s == "sampled") return ErrorKind::SampledPauli;
  throw InvalidArgument("unknown error model '" + s + "' (depolarizing, table, sampled)");
}

/// "ZI", "0.5*ZI + 0.5*IZ", "ZI - IZ". The first letter acts on qubit 0.
inline std::vector<std::pair<PauliString, double>> parse_observable(const std::string& text, int num_qubits) {
  std::vector<std::pair<PauliString, double>> terms;
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  if (s.empty()) throw InvalidArgument("empty observable");
  std::size_t p = 0;
  while (p < s.size()) {
    double sign = 1.0;
    if (s[p] == '+' || s[p] == '-') {
      sign = s[p] == '-' ? -1.0 : 1.0;
      ++p;
    } else if (!terms.empty()) {
      throw InvalidArgument("observable terms must be joined by + or -");
    }
    // a sign after 'e' belongs to an exponent
    std::size_t stop = p + 1;
    while (stop < s.size() && !((s[stop] == '+' || s[stop] == '-') && s[stop - 1] != 'e' && s[stop - 1] != 'E')) ++stop;
    const std::string tok = s.substr(p, stop - p);
    double coeff = 1.0;
    std::string letters = tok;
    const auto star = tok.find('*');
    if (star != std::string::npos) {
      try {
        std::size_t used = 0;
        coeff = std::stod(tok.substr(0, star), &used);
        if (used != star) throw InvalidArgument("");
      } catch (const std::exception&) {
        throw InvalidArgument("bad coefficient in observable term '" + tok + "'");
      }
      letters = tok.substr(star + 1);
    }
    if (static_cast<int>(letters.size()) != num_qubits) {
      throw InvalidArgument("observable term '" + letters + "' must have " + std::to_string(num_qubits) + " letters");
    }
    terms.emplace_back(PauliString::from_letters(letters), sign * coeff);
    p = stop;
  }
  // merge repeated strings
  std::map<std::uint64_t, double> merged;
  for (const auto& [ps, c] : terms) merged[ps.index()] += c;
  std::vector<std::pair<PauliString, double>> out;
  for (const auto& [i, c] : merged) {
    if (c != 0.0) out.emplace_back(PauliString(num_qubits, i), c);
  }
  if (out.empty()) throw InvalidArgument("observable is zero");
  return out;
}

struct ExperimentConfig {
  std::string name = "experiment";
  int num_qubits = 2;
  int layer_min = 1;
  int layer_max = 20;
  std::vector<int> folds{1, 2, 3};  // n: 2n - 1 passes per layer
  int repetitions = 10;
  std::uint64_t shots_per_setting = 2000;
  bool exact = false;
  ErrorModelSpec error_model;
  int channels = 1;
  TwirlMode twirl = TwirlMode::Off;
  int twirl_samples = 16;
  std::vector<std::pair<double, double>> readout;  // empty: perfect readout
  bool mitigate_readout = true;
  bool purity_bias_corrected = false;
  std::string initial_state = "00";  // qubit 0 first
  std::string observable = "ZI";
  std::vector<Method> targets = all_methods();
  std::uint64_t master_seed = 20240101;

  void validate() const {
    if (num_qubits != 2) throw InvalidArgument("the CNOT-chain experiment runs on 2 qubits");
    if (layer_min < 0 || layer_max < layer_min) throw InvalidArgument("layers must satisfy 0 <= min <= max");
    if (folds.empty()) throw InvalidArgument("folds must not be empty");
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (folds[i] < 1 || (i > 0 && folds[i] <= folds[i - 1])) {
        throw InvalidArgument("folds must be >= 1 and strictly increasing");
      }
    }
    for (Method m : targets) {
      if (m != Method::Raw && m != Method::ModifiedPurification && m != Method::VdEsd && folds.size() < 3) {
        throw InvalidArgument(std::string("method ") + to_string(m) + " needs at least 3 folds");
      }
    }
    if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
    if (!exact && shots_per_setting < 1) throw InvalidArgument("shots_per_setting must be >= 1 in shot mode");
    if (channels < 1) throw InvalidArgument("channels must be >= 1");
    if (twirl == TwirlMode::PerLayerSampled && twirl_samples < 1) throw InvalidArgument("twirl samples must be >= 1");
    if (!readout.empty() && static_cast<int>(readout.size()) != num_qubits) {
      throw InvalidArgument("readout needs one (F0, F1) pair per qubit");
    }
    if (static_cast<int>(initial_state.size()) != num_qubits ||
        initial_state.find_first_not_of("01") != std::string::npos) {
      throw InvalidArgument("initial_state must be a bitstring of length num_qubits");
    }
    if (targets.empty()) throw InvalidArgument("targets must not be empty");
    error_model.validate();
    parse_observable(observable, num_qubits);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["num_qubits"] = num_qubits;
    j["layers"] = {layer_min, layer_max};
    j["folds"] = folds;
    j["repetitions"] = repetitions;
    j["shots_per_setting"] = shots_per_setting;
    j["exact"] = exact;
    j["channels"] = channels;
    j["master_seed"] = master_seed;
    j["observable"] = observable;
    j["initial_state"] = initial_state;
    std::vector<std::string> t;
    for (Method m : targets) t.emplace_back(to_string(m));
    j["targets"] = t;
    j["purity_bias_corrected"] = purity_bias_corrected;
    auto& e = j["error_model"];
    e["kind"] = to_string(error_model.kind);
    e["rate"] = error_model.rate;
    e["q_lambda"] = error_model.q_lambda;
    e["probabilities"] = error_model.probabilities;
    e["backward_mode"] = to_string(error_model.backward);
    e["lambda"] = error_model.lambda;
    e["omega_scale"] = error_model.omega_scale;
    e["omega"] = error_model.omega;
    j["twirl"] = {{"mode", to_string(twirl)}, {"samples", twirl_samples}};
    nlohmann::json r = nlohmann::json::array();
    for (const auto& [f0, f1] : readout) r.push_back({f0, f1});
    j["readout"] = {{"fidelities", r}, {"mitigate", mitigate_readout}};
    return j;
  }

  /// FNV-1a of the canonical JSON snapshot.
  std::string digest() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  static ExperimentConfig from_document(const ConfigDocument& d) {
    static const std::vector<std::string> known{
        "name", "num_qubits", "layers", "folds", "repetitions", "shots_per_setting", "exact", "channels",
        "master_seed", "observable", "initial_state", "targets", "purity_bias_corrected",
        "error_model.kind", "error_model.rate", "error_model.q_lambda", "error_model.probabilities",
        "error_model.backward_mode", "error_model.lambda", "error_model.omega_scale", "error_model.omega",
        "twirl.mode", "twirl.samples", "readout.fidelities", "readout.mitigate"};
    for (const auto& [k, v] : d.values()) {
      if (k.rfind("bounds.", 0) == 0) continue;
      if (std::find(known.begin(), known.end(), k) == known.end()) throw InvalidArgument("unknown config key '" + k + "'");
    }
    ExperimentConfig c;
    c.name = d.string("name", c.name);
    c.num_qubits = static_cast<int>(d.integer("num_qubits", c.num_qubits));
    if (d.has("layers")) {
      const auto l = d.numbers("layers", {});
      if (l.size() != 2) throw InvalidArgument("layers must be [min, max]");
      c.layer_min = static_cast<int>(l[0]);
      c.layer_max = static_cast<int>(l[1]);
      if (l[0] != c.layer_min || l[1] != c.layer_max) throw InvalidArgument("layers must be integers");
    }
    if (d.has("folds")) {
      c.folds.clear();
      for (double f : d.numbers("folds", {})) {
        if (f != std::floor(f)) throw InvalidArgument("folds must be integers");
        c.folds.push_back(static_cast<int>(f));
      }
    }
    c.repetitions = static_cast<int>(d.integer("repetitions", c.repetitions));
    c.shots_per_setting = d.unsigned_integer("shots_per_setting", c.shots_per_setting);
    c.exact = d.boolean("exact", c.exact);
    c.channels = static_cast<int>(d.integer("channels", c.channels));
    c.master_seed = d.unsigned_integer("master_seed", c.master_seed);
    c.observable = d.string("observable", c.observable);
    c.initial_state = d.string("initial_state", c.initial_state);
    if (d.has("targets")) {
      c.targets.clear();
      for (const auto& s : d.strings("targets", {})) c.targets.push_back(method_from_string(s));
    }
    c.purity_bias_corrected = d.boolean("purity_bias_corrected", c.purity_bias_corrected);
    auto& e = c.error_model;
    e.kind = error_kind_from_string(d.string("error_model.kind", to_string(e.kind)));
    e.rate = d.number("error_model.rate", e.rate);
    e.q_lambda = d.number("error_model.q_lambda", e.q_lambda);
    e.probabilities = d.numbers("error_model.probabilities", {});
    e.backward = backward_mode_from_string(d.string("error_model.backward_mode", to_string(e.backward)));
    e.lambda = d.number("error_model.lambda", e.lambda);
    e.omega_scale = d.number("error_model.omega_scale", e.omega_scale);
    e.omega = d.numbers("error_model.omega", {});
    c.twirl = twirl_mode_from_string(d.string("twirl.mode", to_string(c.twirl)));
    c.twirl_samples = static_cast<int>(d.integer("twirl.samples", c.twirl_samples));
    if (d.has("readout.fidelities")) {
      for (const auto& row : d.number_rows("readout.fidelities")) {
        if (row.size() != 2) throw InvalidArgument("readout fidelities must be [F0, F1] pairs");
        c.readout.emplace_back(row[0], row[1]);
      }
    }
    c.mitigate_readout = d.boolean("readout.mitigate", c.mitigate_readout);
    c.validate();
    return c;
  }
};

/// Built-in presets: depolarizing chain and the sampled-channel ensemble.
inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "depolarizing") {
    c.name = "depolarizing_chain";
    c.layer_max = 20;
    c.shots_per_setting = 2000;
    c.error_model.kind = ErrorKind::Depolarizing;
    c.error_model.rate = 0.05;
  } else if (name == "measured") {
    c.name = "measured_channel";
    c.layer_max = 18;
    c.shots_per_setting = 2000;
    c.error_model.kind = ErrorKind::Table;
    c.error_model.backward = BackwardMode::OmegaPerturbed;
    c.error_model.lambda = 0.2;
    c.error_model.omega_scale = 0.5;
  } else if (name == "ensemble") {
    c.name = "sampled_ensemble";
    c.layer_max = 18;
    c.channels = 10;
    c.shots_per_setting = 2000;
    c.error_model.kind = ErrorKind::SampledPauli;
    c.error_model.q_lambda = 0.05;
    c.error_model.backward = BackwardMode::OmegaPerturbed;
    c.error_model.lambda = 0.2;
    c.error_model.omega_scale = 0.5;
  } else {
    throw InvalidArgument("unknown preset '" + name + "' (depolarizing, measured, ensemble)");
  }
  c.validate();
  return c;
}

struct CellRow {
  int channel = 0, layer = 0, fold = 0, rep = 0;
  std::uint64_t seed = 0;
  double observable = 0.0;
  double observable_se = 0.0;
  double purity = 0.0;
  double purity_se = 0.0;
  std::vector<double> expectations;  // every Pauli, index order
};

struct RecordRow {
  int channel = 0, layer = 0, rep = 0;
  std::uint64_t seed = 0;
  MitigationRecord record;
};

/// Over repetitions, per (channel, layer, fold): raw data and the exact state values.
struct FoldAggregate {
  int channel = 0, layer = 0, fold = 0;
  double observable_mean = 0.0, observable_std = 0.0;
  double purity_mean = 0.0, purity_std = 0.0;
  double exact_observable = 0.0, exact_purity = 0.0;
};

/// Over repetitions, per (channel, layer, method). std uses n - 1.
struct MethodAggregate {
  int channel = 0, layer = 0;
  Method method = Method::Raw;
  double ideal = 0.0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();
  int ok = 0, failed = 0;
  double bias() const { return mean - ideal; }
};

struct EnsembleRow {
  int layer = 0;
  Method method = Method::Raw;
  double delta1 = std::numeric_limits<double>::quiet_NaN();
  double delta2 = std::numeric_limits<double>::quiet_NaN();
  int channels_used = 0;
};

struct ChannelInfo {
  int channel = 0;
  bool ok = false;
  std::string error;
  std::uint64_t seed = 0;
  std::optional<ForwardBackwardPair> pair;
  double sigma = 0.0;  // forward spectrum, uniform weights
};

struct ResultsTable {
  ExperimentConfig config;
  std::string config_digest;
  std::vector<ChannelInfo> channels;
  std::vector<CellRow> cells;
  std::vector<RecordRow> records;
  std::vector<FoldAggregate> folds;
  std::vector<MethodAggregate> methods;
  std::vector<EnsembleRow> ensemble;
  std::vector<std::string> log;

  const MethodAggregate* find(int channel, int layer, Method m) const {
    for (const auto& a : methods) {
      if (a.channel == channel && a.layer == layer && a.method == m) return &a;
    }
    return nullptr;
  }

  const EnsembleRow* find_ensemble(int layer, Method m) const {
    for (const auto& e : ensemble) {
      if (e.layer == layer && e.method == m) return &e;
    }
    return nullptr;
  }
};

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

// task-index spaces for derived rng streams
inline constexpr std::uint64_t kChannelStream = 1ull << 62;
inline constexpr std::uint64_t kTwirlStream = 2ull << 62;

inline std::uint64_t cell_index(const ExperimentConfig& c, int channel, int layer, int rep, std::size_t fold) {
  const std::uint64_t lspan = static_cast<std::uint64_t>(c.layer_max) + 1;
  const std::uint64_t reps = static_cast<std::uint64_t>(c.repetitions);
  return ((static_cast<std::uint64_t>(channel) * lspan + static_cast<std::uint64_t>(layer)) * reps +
          static_cast<std::uint64_t>(rep)) * c.folds.size() + fold;
}

inline DensityMatrix initial_state(const ExperimentConfig& c) {
  std::uint64_t bits = 0;
  for (int q = 0; q < c.num_qubits; ++q) {
    if (c.initial_state[static_cast<std::size_t>(q)] == '1') bits |= 1ull << q;
  }
  return DensityMatrix::basis_state(c.num_qubits, bits);
}

inline double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// State after the folded chain, averaged over twirl instances when enabled.
inline DensityMatrix folded_state(const ExperimentConfig& cfg, const NoisyCircuit& folded, const DensityMatrix& rho0,
                                  std::uint64_t twirl_task) {
  if (cfg.twirl == TwirlMode::Off || folded.size() == 0) return simulate(folded, rho0);
  std::vector<TwirlInstance> inst;
  TwirlScope scope = TwirlScope::WholeCircuit;
  if (cfg.twirl == TwirlMode::WholeCircuit) {
    inst = twirl_instances(folded, TwirlScope::WholeCircuit);
  } else {
    scope = TwirlScope::PerLayer;
    Rng rng = make_rng(cfg.master_seed, kTwirlStream + twirl_task);
    inst = twirl_instances(folded, TwirlScope::PerLayer, &rng, static_cast<std::size_t>(cfg.twirl_samples));
  }
  Matrix acc = Matrix::Zero(rho0.dim(), rho0.dim());
  for (const auto& t : inst) acc += simulate_twirled(folded, rho0, t, scope).matrix();
  acc /= static_cast<double>(inst.size());
  return DensityMatrix(DensityMatrix::Unchecked{}, rho0.num_qubits(), std::move(acc));
}

inline PauliExpectations measure(const ExperimentConfig& cfg, const DensityMatrix& rho, Rng& rng) {
  if (cfg.exact) return exact_expectations(rho);
  std::optional<ReadoutModel> readout;
  if (!cfg.readout.empty()) readout = ReadoutModel(cfg.readout);
  std::vector<SettingData> data;
  for (const auto& s : all_settings(cfg.num_qubits)) {
    const ShotTable t = sample_shots(rho, s, cfg.shots_per_setting, rng, readout);
    auto f = frequencies(t);
    if (readout && cfg.mitigate_readout) f = mitigate_readout(f, *readout);
    data.push_back({t.setting, std::move(f), static_cast<double>(t.shots)});
  }
  return expectations_from_distributions(data);
}

}  // namespace detail

/// Forward/backward pair for one ensemble member, from its own rng stream.
inline ForwardBackwardPair make_channel_pair(const ExperimentConfig& cfg, int channel) {
  const std::uint64_t task = detail::kChannelStream + static_cast<std::uint64_t>(channel);
  const std::uint64_t seed = derive_seed(cfg.master_seed, task);
  Rng rng(seed);
  const PauliChannel f = make_forward(cfg.error_model, cfg.num_qubits, rng, seed);
  return make_pair(cfg.error_model, f, rng, seed);
}

/// Runs the folded CNOT-chain pipeline for every channel, layer, repetition and fold.
/// `injected` replaces the configured error model with explicit channel pairs.
inline ResultsTable run_experiment(const ExperimentConfig& cfg,
                                   const std::vector<ForwardBackwardPair>& injected = {},
                                   const ProgressFn& progress = {}) {
  cfg.validate();
  ResultsTable table;
  table.config = cfg;
  table.config_digest = cfg.digest();
  const auto terms = parse_observable(cfg.observable, cfg.num_qubits);
  const DensityMatrix rho0 = detail::initial_state(cfg);
  const int num_channels = injected.empty() ? cfg.channels : static_cast<int>(injected.size());
  const std::vector<double> fold_axis(cfg.folds.begin(), cfg.folds.end());
  const auto ident = PauliChannel::identity(cfg.num_qubits);
  auto observable_of = [&](const std::vector<double>& e) {
    double v = 0.0;
    for (const auto& [p, c] : terms) v += c * e.at(p.index());
    return v;
  };

  // ideal value per layer
  std::map<int, double> ideal;
  for (int layer = cfg.layer_min; layer <= cfg.layer_max; ++layer) {
    const auto st = simulate(cnot_chain(layer, ident, ident), rho0);
    double v = 0.0;
    for (const auto& [p, c] : terms) v += c * expectation(st, p);
    ideal[layer] = v;
  }

  for (int ch = 0; ch < num_channels; ++ch) {
    ChannelInfo info;
    info.channel = ch;
    info.seed = derive_seed(cfg.master_seed, detail::kChannelStream + static_cast<std::uint64_t>(ch));
    try {
      info.pair = injected.empty() ? make_channel_pair(cfg, ch) : injected[static_cast<std::size_t>(ch)];
      info.ok = true;
      info.sigma = spectrum_stats(channel_eigenvalues(info.pair->forward)).sigma;
    } catch (const std::exception& e) {
      info.error = e.what();
      table.log.push_back("channel " + std::to_string(ch) + " (seed " + std::to_string(info.seed) + "): " + e.what());
    }
    table.channels.push_back(info);
    if (!info.ok) continue;
    const auto& pair = *info.pair;

    for (int layer = cfg.layer_min; layer <= cfg.layer_max; ++layer) {
      if (progress) {
        progress("channel " + std::to_string(ch + 1) + "/" + std::to_string(num_channels) + " layer " +
                 std::to_string(layer) + "/" + std::to_string(cfg.layer_max));
      }
      const NoisyCircuit base = cnot_chain(layer, pair.forward, pair.backward);
      std::vector<DensityMatrix> states;
      for (std::size_t f = 0; f < cfg.folds.size(); ++f) {
        const std::uint64_t twirl_task =
            (static_cast<std::uint64_t>(ch) * (static_cast<std::uint64_t>(cfg.layer_max) + 1) +
             static_cast<std::uint64_t>(layer)) * cfg.folds.size() + f;
        states.push_back(detail::folded_state(cfg, fold_layers(base, cfg.folds[f] - 1), rho0, twirl_task));
      }

      std::vector<std::vector<double>> obs_by_fold(cfg.folds.size()), pur_by_fold(cfg.folds.size());
      std::map<Method, std::vector<double>> estimates;
      std::map<Method, int> failures;

      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        FoldSeries series;
        series.num_qubits = cfg.num_qubits;
        series.folds = fold_axis;
        std::uint64_t rep_seed = 0;
        for (std::size_t f = 0; f < cfg.folds.size(); ++f) {
          const std::uint64_t seed = derive_seed(cfg.master_seed, detail::cell_index(cfg, ch, layer, rep, f));
          if (f == 0) rep_seed = seed;
          Rng rng(seed);
          const PauliExpectations e = detail::measure(cfg, states[f], rng);
          const Estimate p = qst_purity(e, cfg.purity_bias_corrected);
          CellRow row;
          row.channel = ch;
          row.layer = layer;
          row.fold = cfg.folds[f];
          row.rep = rep;
          row.seed = seed;
          row.expectations = e.value;
          row.observable = observable_of(e.value);
          double var = 0.0;
          for (const auto& [ps, c] : terms) var += c * c * e.std_error[ps.index()] * e.std_error[ps.index()];
          row.observable_se = std::sqrt(var);
          row.purity = p.value;
          row.purity_se = p.std_error;
          obs_by_fold[f].push_back(row.observable);
          pur_by_fold[f].push_back(row.purity);
          series.expectations.push_back(e.value);
          series.expectation_spread.push_back(e.std_error);
          series.purities.push_back(p.value);
          series.purity_spread.push_back(p.std_error);
          table.cells.push_back(std::move(row));
        }

        // one record per method, recombined over the observable's Pauli terms
        std::map<Method, std::vector<std::pair<double, MitigationRecord>>> per_method;
        std::string series_error;
        try {
          for (const auto& [ps, c] : terms) {
            for (auto& r : mitigate_all(series, ps.index())) per_method[r.method].emplace_back(c, std::move(r));
          }
        } catch (const std::exception& e) {
          series_error = e.what();
        }
        for (Method m : cfg.targets) {
          MitigationRecord rec;
          if (!series_error.empty()) {
            rec.method = m;
            rec.pauli = cfg.observable;
            rec.failed = true;
            rec.flags = series_error;
          } else {
            const auto& t = per_method.at(m);
            rec = (t.size() == 1 && t.front().first == 1.0) ? t.front().second : recombine(t);
          }
          if (rec.failed || !std::isfinite(rec.estimate)) {
            ++failures[m];
          } else {
            estimates[m].push_back(rec.estimate);
          }
          table.records.push_back(RecordRow{ch, layer, rep, rep_seed, std::move(rec)});
        }
      }

      for (std::size_t f = 0; f < cfg.folds.size(); ++f) {
        FoldAggregate a;
        a.channel = ch;
        a.layer = layer;
        a.fold = cfg.folds[f];
        a.observable_mean = detail::mean_of(obs_by_fold[f]);
        a.observable_std = detail::sample_std(obs_by_fold[f], a.observable_mean);
        a.purity_mean = detail::mean_of(pur_by_fold[f]);
        a.purity_std = detail::sample_std(pur_by_fold[f], a.purity_mean);
        a.exact_observable = 0.0;
        for (const auto& [p, c] : terms) a.exact_observable += c * expectation(states[f], p);
        a.exact_purity = purity(states[f]);
        table.folds.push_back(a);
      }
      for (Method m : cfg.targets) {
        MethodAggregate a;
        a.channel = ch;
        a.layer = layer;
        a.method = m;
        a.ideal = ideal[layer];
        const auto& v = estimates[m];
        a.ok = static_cast<int>(v.size());
        a.failed = failures[m];
        if (!v.empty()) {
          a.mean = detail::mean_of(v);
          a.stddev = detail::sample_std(v, a.mean);
        }
        table.methods.push_back(a);
      }
    }
  }

  // ensemble metrics over channels. A spread needs two successful repetitions,
  // so channels with fewer are left out (one success would report std 0).
  const int min_ok = std::min(2, cfg.repetitions);
  for (int layer = cfg.layer_min; layer <= cfg.layer_max; ++layer) {
    for (Method m : cfg.targets) {
      std::vector<double> est, var;
      for (const auto& a : table.methods) {
        if (a.layer != layer || a.method != m || a.ok < min_ok) continue;
        est.push_back(a.mean);
        var.push_back(a.stddev * a.stddev);
      }
      EnsembleRow r;
      r.layer = layer;
      r.method = m;
      r.channels_used = static_cast<int>(est.size());
      if (!est.empty()) {
        const auto d = delta_metrics(est, var, ideal[layer]);
        r.delta1 = d.delta1;
        r.delta2 = d.delta2;
      }
      table.ensemble.push_back(r);
    }
  }

  // grid completeness
  std::size_t ok_channels = 0;
  for (const auto& c : table.channels) ok_channels += c.ok ? 1 : 0;
  const std::size_t expect_cells = ok_channels * static_cast<std::size_t>(cfg.layer_max - cfg.layer_min + 1) *
                                   static_cast<std::size_t>(cfg.repetitions) * cfg.folds.size();
  if (table.cells.size() != expect_cells) {
    throw InvalidArgument("incomplete grid: " + std::to_string(table.cells.size()) + " of " +
                          std::to_string(expect_cells) + " cells");
  }
  return table;
}

inline ResultsTable run_depolarizing_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  if (cfg.error_model.kind != ErrorKind::Depolarizing) {
    throw InvalidArgument("run_depolarizing_experiment needs the depolarizing error model");
  }
  return run_experiment(cfg, {}, progress);
}

inline ResultsTable run_pauli_ensemble_experiment(const ExperimentConfig& cfg, int num_channels,
                                                  const ProgressFn& progress = {}) {
  if (cfg.error_model.kind != ErrorKind::SampledPauli) {
    throw InvalidArgument("run_pauli_ensemble_experiment needs the sampled Pauli error model");
  }
  ExperimentConfig c = cfg;
  c.channels = num_channels;
  return run_experiment(c, {}, progress);
}

/// <O> per fold from the Pauli-transfer picture: coefficients are permuted by
/// each Clifford layer and scaled by the channel eigenvalues.
inline PauliCoefficients pauli_transfer_simulate(const NoisyCircuit& c, const PauliCoefficients& in) {
  const int n = c.num_qubits();
  const auto size = num_paulis(n);
  std::vector<double> coeffs = in.coeffs;
  for (const auto& l : c.layers()) {
    const Matrix u = l.ideal();
    std::vector<std::pair<std::uint64_t, int>> table;
    for (std::uint64_t i = 0; i < size; ++i) {
      const auto [q, s] = clifford_conjugate_pauli(u, PauliString(n, i));
      table.emplace_back(q.index(), s);
    }
    auto conj = [&](const std::vector<double>& v) {
      std::vector<double> out(size, 0.0);
      for (std::uint64_t i = 0; i < size; ++i) out[table[i].first] += table[i].second * v[i];
      return out;
    };
    if (l.direction == Direction::Forward) {
      if (!l.forward_kraus.empty()) throw InvalidArgument("pauli_transfer_simulate needs Pauli channels");
      coeffs = conj(coeffs);
      const auto chi = channel_eigenvalues(l.forward);
      for (std::uint64_t i = 0; i < size; ++i) coeffs[i] *= chi[i];
    } else {
      const auto chi = channel_eigenvalues(l.backward);
      for (std::uint64_t i = 0; i < size; ++i) coeffs[i] *= chi[i];
      coeffs = conj(coeffs);
    }
  }
  return PauliCoefficients{n, std::move(coeffs)};
}

struct BoundValidationConfig {
  std::vector<double> q_lambdas{0.02, 0.05};
  int channels = 500;
  int num_qubits = 2;
  std::vector<double> eps_multipliers{1.0, 1.5, 2.0, 2.5, 3.0};  // times the median sigma
  double delta = 0.05;
  double safety_factor = 2.0;
  std::uint64_t master_seed = 20240101;

  static BoundValidationConfig from_document(const ConfigDocument& d) {
    BoundValidationConfig b;
    b.q_lambdas = d.numbers("bounds.q_lambdas", b.q_lambdas);
    b.channels = static_cast<int>(d.integer("bounds.channels", b.channels));
    b.num_qubits = static_cast<int>(d.integer("bounds.num_qubits", b.num_qubits));
    b.eps_multipliers = d.numbers("bounds.eps_multipliers", b.eps_multipliers);
    b.delta = d.number("bounds.delta", b.delta);
    b.safety_factor = d.number("bounds.safety_factor", b.safety_factor);
    b.master_seed = d.unsigned_integer("master_seed", b.master_seed);
    b.validate();
    return b;
  }

  void validate() const {
    if (q_lambdas.empty() || channels < 1) throw InvalidArgument("bound validation needs q values and channels");
    for (double q : q_lambdas) {
      if (!(q > 0.0 && q < 0.5)) throw InvalidArgument("bound validation q_lambda must lie in (0, 0.5)");
    }
    if (eps_multipliers.empty()) throw InvalidArgument("empty eps grid");
    check_qubit_count(num_qubits);
  }
};

struct BoundRow {
  double q_lambda = 0.0;
  int channels = 0;
  double median_sigma = 0.0;
  double max_sigma = 0.0;
  double sigma_bound = 0.0;
  double fraction_under_sigma_bound = 0.0;
  double eps = 0.0;
  double bound_mean = 0.0;       // mean over channels of the printed bound at their own sigma
  double bound_at_median = 0.0;
  double empirical_mean = 0.0;   // mean over channels of the deviating fraction
  double empirical_q90 = 0.0;    // 90th percentile of the per-channel fraction
  double tolerant_eps = 0.0;     // tolerant_error(delta, median sigma)
  bool pass = false;             // empirical_mean <= safety * bound_mean
};

inline std::vector<BoundRow> run_bound_validation(const BoundValidationConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  std::vector<BoundRow> rows;
  for (std::size_t qi = 0; qi < cfg.q_lambdas.size(); ++qi) {
    const double q = cfg.q_lambdas[qi];
    if (progress) progress("bounds q_lambda = " + format_double(q));
    std::vector<std::vector<double>> spectra;
    std::vector<double> sigmas;
    for (int c = 0; c < cfg.channels; ++c) {
      const std::uint64_t task = (static_cast<std::uint64_t>(qi) << 32) + static_cast<std::uint64_t>(c);
      const std::uint64_t seed = derive_seed(cfg.master_seed, detail::kChannelStream + task);
      Rng rng(seed);
      auto chi = channel_eigenvalues(sample_pauli_channel(cfg.num_qubits, q, rng, seed));
      sigmas.push_back(spectrum_stats(chi).sigma);
      spectra.push_back(std::move(chi));
    }
    std::vector<double> sorted = sigmas;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted.size() % 2 ? sorted[sorted.size() / 2]
                                            : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    const double sb = sigma_bound_from_error_probability(q, cfg.delta).sigma;
    const double under = static_cast<double>(std::count_if(sigmas.begin(), sigmas.end(),
                                                           [sb](double s) { return s <= sb; })) /
                         static_cast<double>(sigmas.size());
    for (double mult : cfg.eps_multipliers) {
      BoundRow r;
      r.q_lambda = q;
      r.channels = cfg.channels;
      r.median_sigma = median;
      r.max_sigma = sorted.back();
      r.sigma_bound = sb;
      r.fraction_under_sigma_bound = under;
      r.eps = mult * median;
      std::vector<double> frac;
      double bsum = 0.0;
      for (std::size_t c = 0; c < spectra.size(); ++c) {
        frac.push_back(empirical_failing_fraction(spectra[c], r.eps));
        bsum += failing_probability_bound(r.eps, sigmas[c]);
      }
      r.bound_mean = bsum / static_cast<double>(spectra.size());
      r.bound_at_median = failing_probability_bound(r.eps, median);
      r.empirical_mean = detail::mean_of(frac);
      std::sort(frac.begin(), frac.end());
      r.empirical_q90 = frac[static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(frac.size() - 1)))];
      r.tolerant_eps = tolerant_error(cfg.delta, median);
      r.pass = r.empirical_mean <= cfg.safety_factor * r.bound_mean;
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace pzne
