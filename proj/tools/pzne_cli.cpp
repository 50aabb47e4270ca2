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


// pzne command-line driver.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "pzne/pzne.hpp"

namespace fs = std::filesystem;
using namespace pzne;

namespace {

ExperimentConfig load_experiment(const std::string& config, const std::string& preset_name) {
  if (!config.empty()) return ExperimentConfig::from_document(ConfigDocument::load(config));
  return preset(preset_name.empty() ? "depolarizing" : preset_name);
}

ProgressFn progress_printer(bool quiet) {
  if (quiet) return {};
  return [](const std::string& msg) { std::cerr << "\r" << msg << "          " << std::flush; };
}

int cmd_simulate(const std::string& config, const std::string& preset_name, bool exact,
                 std::optional<std::uint64_t> seed, std::optional<int> channels, std::optional<int> reps,
                 const std::string& out, bool no_svg, bool quiet) {
  ExperimentConfig c = load_experiment(config, preset_name);
  if (exact) c.exact = true;
  if (seed) c.master_seed = *seed;
  if (channels) c.channels = *channels;
  if (reps) c.repetitions = *reps;
  c.validate();
  const auto table = run_experiment(c, {}, progress_printer(quiet));
  if (!quiet) std::cerr << "\n";
  for (const auto& line : table.log) std::cerr << "warning: " << line << "\n";
  for (const auto& p : emit_report(table, out, !no_svg)) std::cout << p.string() << "\n";
  return 0;
}

int cmd_sample_errors(const std::string& config, const std::string& preset_name, std::optional<int> count,
                      std::optional<std::uint64_t> seed, const std::string& out) {
  ExperimentConfig c = load_experiment(config, preset_name.empty() && config.empty() ? "ensemble" : preset_name);
  if (seed) c.master_seed = *seed;
  if (count) c.channels = *count;
  c.validate();
  fs::create_directories(out);
  int failed = 0;
  for (int ch = 0; ch < c.channels; ++ch) {
    nlohmann::json j;
    j["channel"] = ch;
    j["master_seed"] = c.master_seed;
    j["config_digest"] = c.digest();
    try {
      const auto pair = make_channel_pair(c, ch);
      j["forward"] = pair.forward;
      j["backward"] = pair.backward;
      j["lambda"] = pair.lambda;
      j["omega"] = pair.omega;
      const auto st = spectrum_stats(channel_eigenvalues(pair.forward));
      j["sigma"] = st.sigma;
      j["chi_bar"] = st.chi_bar;
    } catch (const std::exception& e) {
      j["error"] = e.what();
      std::cerr << "channel " << ch << ": " << e.what() << "\n";
      ++failed;
    }
    const auto p = fs::path(out) / ("channel_" + std::to_string(ch) + ".json");
    std::ofstream(p) << j.dump(2) << "\n";
    std::cout << p.string() << "\n";
  }
  return failed == 0 ? 0 : 1;
}

int cmd_twirl(int layers, int samples, std::uint64_t seed) {
  const auto cnot = Gate::named("CNOT", {0, 1}, 2).unitary;
  const auto inst = block_twirl_instances(cnot, 2);
  std::cout << "pre  post  sign\n";
  for (const auto& t : inst) {
    std::cout << t.pre[0].str() << "   " << t.post[0].str() << "    " << (t.sign > 0 ? "+" : "-") << "\n";
  }
  const auto bad = check_cnot_twirl_table(inst);
  for (const auto& b : bad) std::cout << "MISMATCH " << b << "\n";
  std::cout << (bad.empty() ? "CNOT table: 16/16 match\n" : "CNOT table: mismatch\n");
  if (layers > 0) {
    const auto id = PauliChannel::identity(2);
    const auto chain = cnot_chain(layers, id, id);
    Rng rng(seed);
    std::cout << "\nper-layer samples, " << layers << " layers\n";
    for (const auto& t : twirl_instances(chain, TwirlScope::PerLayer, &rng, static_cast<std::size_t>(samples))) {
      for (std::size_t k = 0; k < t.pre.size(); ++k) {
        std::cout << (k ? " | " : "") << t.pre[k].str() << ">" << t.post[k].str();
      }
      std::cout << "  " << (t.sign > 0 ? "+" : "-") << "\n";
    }
  }
  return bad.empty() ? 0 : 1;
}

int cmd_bounds(const std::string& config, std::optional<int> channels, std::optional<std::uint64_t> seed,
               const std::string& out, bool quiet) {
  BoundValidationConfig b =
      config.empty() ? BoundValidationConfig{} : BoundValidationConfig::from_document(ConfigDocument::load(config));
  if (channels) b.channels = *channels;
  if (seed) b.master_seed = *seed;
  b.validate();
  const auto rows = run_bound_validation(b, progress_printer(quiet));
  if (!quiet) std::cerr << "\n";
  if (out.empty() || out == "-") {
    write_bounds_csv(std::cout, rows);
  } else {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    std::ofstream f(out);
    write_bounds_csv(f, rows);
    std::cout << out << "\n";
  }
  bool pass = true;
  for (const auto& r : rows) pass = pass && r.pass;
  return pass ? 0 : 1;
}

int cmd_report(const std::string& dir, const std::string& name, const std::string& title) {
  for (const auto& p : render_report(dir, name, title.empty() ? name : title)) std::cout << p.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Purity-assisted zero-noise extrapolation on simulated noisy CNOT circuits"};
  app.require_subcommand(1);

  std::string config, preset_name, out = "out";
  bool exact = false, no_svg = false, quiet = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> channels, reps;

  auto* sim = app.add_subcommand("simulate", "Run an experiment and write CSV/JSON/SVG output");
  sim->add_option("-c,--config", config, "TOML config file");
  sim->add_option("-p,--preset", preset_name, "Built-in preset: depolarizing, measured, ensemble");
  sim->add_flag("--exact", exact, "Exact expectations instead of shots");
  sim->add_option("--seed", seed, "Override master_seed");
  sim->add_option("--channels", channels, "Override the channel count");
  sim->add_option("--repetitions", reps, "Override repetitions");
  sim->add_option("-o,--out", out, "Output directory");
  sim->add_flag("--no-svg", no_svg, "Skip plots");
  sim->add_flag("-q,--quiet", quiet, "No progress output");

  std::optional<int> count;
  std::string errors_out = "channels";
  auto* se = app.add_subcommand("sample-errors", "Sample forward/backward channel pairs as JSON");
  se->add_option("-c,--config", config, "TOML config file");
  se->add_option("-p,--preset", preset_name, "Built-in preset (default ensemble)");
  se->add_option("-n,--count", count, "Number of channels");
  se->add_option("--seed", seed, "Override master_seed");
  se->add_option("-o,--out", errors_out, "Output directory");

  int layers = 0, samples = 8;
  std::uint64_t twirl_seed = 1;
  auto* tw = app.add_subcommand("twirl", "Print CNOT twirl instances and check them against the reference table");
  tw->add_option("--layers", layers, "Also sample per-layer instances for a chain of this depth");
  tw->add_option("--samples", samples, "Per-layer samples to print")->check(CLI::PositiveNumber);
  tw->add_option("--seed", twirl_seed, "Seed for per-layer sampling");

  std::string bounds_out;
  auto* bd = app.add_subcommand("bounds", "Compare the failing-probability bound with sampled spectra");
  bd->add_option("-c,--config", config, "TOML config with a [bounds] section");
  bd->add_option("--channels", channels, "Channels per q_lambda");
  bd->add_option("--seed", seed, "Override master_seed");
  bd->add_option("-o,--out", bounds_out, "CSV path (default stdout)");
  bd->add_flag("-q,--quiet", quiet, "No progress output");

  std::string dir, name, title;
  auto* rp = app.add_subcommand("report", "Re-render SVG plots from saved CSV tables");
  rp->add_option("-d,--dir", dir, "Directory with the CSV tables")->required();
  rp->add_option("-n,--name", name, "Experiment name (file prefix)")->required();
  rp->add_option("-t,--title", title, "Plot title");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) {
      if (!config.empty() && !preset_name.empty()) throw InvalidArgument("give --config or --preset, not both");
      return cmd_simulate(config, preset_name, exact, seed, channels, reps, out, no_svg, quiet);
    }
    if (*se) return cmd_sample_errors(config, preset_name, count, seed, errors_out);
    if (*tw) return cmd_twirl(layers, samples, twirl_seed);
    if (*bd) return cmd_bounds(config, channels, seed, bounds_out, quiet);
    if (*rp) return cmd_report(dir, name, title);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
