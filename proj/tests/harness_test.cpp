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


#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pzne/pzne.hpp"

namespace pzne {
namespace {

ExperimentConfig small_exact(ErrorKind kind) {
  ExperimentConfig c;
  c.name = "t";
  c.layer_min = 1;
  c.layer_max = 4;
  c.repetitions = 1;
  c.exact = true;
  c.error_model.kind = kind;
  c.error_model.rate = 0.05;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream o;
  o << f.rdbuf();
  return o.str();
}

TEST(Observable, ParsesWeightedSums) {
  const auto t = parse_observable("0.5*ZI + IZ - 0.25*XX", 2);
  ASSERT_EQ(t.size(), 3u);
  double zi = 0, iz = 0, xx = 0;
  for (const auto& [p, c] : t) {
    if (p.str() == "ZI") zi = c;
    if (p.str() == "IZ") iz = c;
    if (p.str() == "XX") xx = c;
  }
  EXPECT_DOUBLE_EQ(zi, 0.5);
  EXPECT_DOUBLE_EQ(iz, 1.0);
  EXPECT_DOUBLE_EQ(xx, -0.25);
}

TEST(Observable, MergesDuplicatesAndKeepsExponents) {
  const auto t = parse_observable("1e-1*ZI + 2.5E+0*ZI", 2);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_NEAR(t.front().second, 2.6, 1e-12);
}

TEST(Observable, RejectsBadInput) {
  EXPECT_THROW(parse_observable("", 2), InvalidArgument);
  EXPECT_THROW(parse_observable("ZI - ZI", 2), InvalidArgument);
  EXPECT_THROW(parse_observable("ZZZ", 2), InvalidArgument);
  EXPECT_THROW(parse_observable("QI", 2), InvalidArgument);
}

TEST(Config, DocumentRoundTrip) {
  const auto d = ConfigDocument::parse(R"(
name = "demo"
layers = [0, 3]
folds = [1, 2, 3]
exact = true
master_seed = 18446744073709551615
[error_model]
kind = "table"
backward_mode = "OmegaPerturbed"
lambda = 0.2
[readout]
fidelities = [[0.98, 0.95],
              [0.97, 0.96]]
)");
  const auto c = ExperimentConfig::from_document(d);
  EXPECT_EQ(c.name, "demo");
  EXPECT_EQ(c.layer_min, 0);
  EXPECT_EQ(c.layer_max, 3);
  EXPECT_TRUE(c.exact);
  EXPECT_EQ(c.master_seed, 18446744073709551615ull);
  EXPECT_EQ(c.error_model.kind, ErrorKind::Table);
  EXPECT_EQ(c.error_model.backward, BackwardMode::OmegaPerturbed);
  ASSERT_EQ(c.readout.size(), 2u);
  EXPECT_DOUBLE_EQ(c.readout[1].first, 0.97);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ExperimentConfig::from_document(ConfigDocument::parse("colour = 1\n")), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::from_document(ConfigDocument::parse("folds = [1, 1, 2]\n")), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::from_document(ConfigDocument::parse("layers = [3, 1]\n")), InvalidArgument);
  EXPECT_THROW(ExperimentConfig::from_document(ConfigDocument::parse("repetitions = 1.5\n")), InvalidArgument);
  EXPECT_THROW(ConfigDocument::parse("x = [1, 2\n"), InvalidArgument);
}

TEST(Config, PresetsValidateAndDigestsDiffer) {
  const auto a = preset("depolarizing"), b = preset("measured"), e = preset("ensemble");
  EXPECT_EQ(e.channels, 10);
  EXPECT_EQ(b.error_model.backward, BackwardMode::OmegaPerturbed);
  EXPECT_NE(a.digest(), b.digest());
  EXPECT_NE(b.digest(), e.digest());
  EXPECT_EQ(a.digest(), preset("depolarizing").digest());
  EXPECT_THROW(preset("nope"), InvalidArgument);
}

TEST(Config, PresetFilesMatchBuiltins) {
  const std::filesystem::path dir = PZNE_SOURCE_DIR "/configs";
  for (const char* n : {"depolarizing", "measured", "ensemble"}) {
    const auto c = ExperimentConfig::from_document(ConfigDocument::load((dir / (std::string(n) + ".toml")).string()));
    EXPECT_EQ(c.digest(), preset(n).digest()) << n;
  }
}

TEST(Harness, ZeroLayersGiveIdealRaw) {
  auto c = small_exact(ErrorKind::Depolarizing);
  c.layer_min = 0;
  c.layer_max = 0;
  const auto t = run_experiment(c);
  const auto* raw = t.find(0, 0, Method::Raw);
  ASSERT_NE(raw, nullptr);
  EXPECT_NEAR(raw->mean, 1.0, 1e-12);
  EXPECT_NEAR(raw->ideal, 1.0, 1e-12);
}

TEST(Harness, ExactDepolarizingIsRecovered) {
  const auto t = run_experiment(small_exact(ErrorKind::Depolarizing));
  for (int layer = 1; layer <= 4; ++layer) {
    for (Method m : {Method::ZNE, Method::PzneFoldHalf, Method::PzneZero, Method::PzneFit,
                     Method::ModifiedPurification}) {
      const auto* a = t.find(0, layer, m);
      ASSERT_NE(a, nullptr);
      EXPECT_NEAR(a->bias(), 0.0, 1e-8) << to_string(m) << " layer " << layer;
    }
    EXPECT_LT(t.find(0, layer, Method::Raw)->mean, 1.0);
  }
}

TEST(Harness, ExactFoldsMatchPauliTransfer) {
  auto c = small_exact(ErrorKind::Table);
  c.error_model.backward = BackwardMode::OmegaPerturbed;
  c.error_model.lambda = 0.2;
  c.error_model.omega_scale = 0.5;
  const auto t = run_experiment(c);
  ASSERT_TRUE(t.channels.at(0).ok);
  const auto& pair = *t.channels[0].pair;
  const auto rho0 = detail::initial_state(c);
  for (const auto& f : t.folds) {
    const auto circ = fold_layers(cnot_chain(f.layer, pair.forward, pair.backward), f.fold - 1);
    const auto out = pauli_transfer_simulate(circ, pauli_decompose(rho0));
    EXPECT_NEAR(f.exact_observable, out.coeffs[PauliString::from_letters("ZI").index()], 1e-8);
    EXPECT_NEAR(f.exact_purity, out.purity(), 1e-8);
    EXPECT_NEAR(f.observable_mean, f.exact_observable, 1e-12);
  }
}

TEST(Harness, InjectedChannelIsUsed) {
  auto c = small_exact(ErrorKind::Table);
  const auto pair = ForwardBackwardPair{measured_cnot_channel(), measured_cnot_channel(), 0.0,
                                        std::vector<double>(16, 0.0)};
  const auto a = run_experiment(c, {pair});
  const auto b = run_experiment(c);
  ASSERT_EQ(a.methods.size(), b.methods.size());
  for (std::size_t i = 0; i < a.methods.size(); ++i) EXPECT_EQ(a.methods[i].mean, b.methods[i].mean);
}

TEST(Harness, ShotRunsAreDeterministic) {
  auto c = small_exact(ErrorKind::SampledPauli);
  c.exact = false;
  c.repetitions = 3;
  c.shots_per_setting = 200;
  c.channels = 2;
  c.layer_max = 2;
  c.readout = {{0.98, 0.95}, {0.97, 0.96}};
  std::ostringstream x, y;
  write_cells_csv(x, run_experiment(c));
  write_cells_csv(y, run_experiment(c));
  EXPECT_EQ(x.str(), y.str());
  c.master_seed += 1;
  std::ostringstream z;
  write_cells_csv(z, run_experiment(c));
  EXPECT_NE(x.str(), z.str());
}

TEST(Harness, GridIsComplete) {
  auto c = small_exact(ErrorKind::SampledPauli);
  c.channels = 3;
  c.repetitions = 2;
  const auto t = run_experiment(c);
  EXPECT_EQ(t.cells.size(), 3u * 4u * 2u * 3u);
  EXPECT_EQ(t.records.size(), 3u * 4u * 2u * all_methods().size());
  EXPECT_EQ(t.ensemble.size(), 4u * all_methods().size());
  for (const auto& e : t.ensemble) EXPECT_EQ(e.channels_used, 3);
}

TEST(Harness, SingleChannelEnsembleHasNoSpreadAcrossChannels) {
  auto c = small_exact(ErrorKind::SampledPauli);
  const auto t = run_pauli_ensemble_experiment(c, 1);
  for (const auto& e : t.ensemble) {
    const auto* a = t.find(0, e.layer, e.method);
    if (a->ok == 0) continue;
    EXPECT_NEAR(e.delta1, std::abs(a->bias()), 1e-12);
  }
}

TEST(Harness, WrongModelForEntryPointThrows) {
  EXPECT_THROW(run_depolarizing_experiment(small_exact(ErrorKind::Table)), InvalidArgument);
  EXPECT_THROW(run_pauli_ensemble_experiment(small_exact(ErrorKind::Depolarizing), 2), InvalidArgument);
}

TEST(Harness, TwirledDepolarizingMatchesUntwirled) {
  auto c = small_exact(ErrorKind::Depolarizing);
  c.layer_max = 2;
  const auto plain = run_experiment(c);
  c.twirl = TwirlMode::WholeCircuit;
  const auto tw = run_experiment(c);
  for (std::size_t i = 0; i < plain.folds.size(); ++i) {
    EXPECT_NEAR(plain.folds[i].exact_observable, tw.folds[i].exact_observable, 1e-10);
  }
}

TEST(Bounds, ValidationRowsAreSane) {
  BoundValidationConfig b;
  b.channels = 40;
  const auto rows = run_bound_validation(b);
  ASSERT_EQ(rows.size(), b.q_lambdas.size() * b.eps_multipliers.size());
  for (const auto& r : rows) {
    EXPECT_GT(r.median_sigma, 0.0);
    EXPECT_GE(r.bound_mean, 0.0);
    EXPECT_LE(r.bound_mean, 1.0);
    EXPECT_GE(r.empirical_mean, 0.0);
    EXPECT_LE(r.empirical_mean, 1.0);
  }
  // smaller q, narrower spectrum
  EXPECT_LT(rows.front().median_sigma, rows.back().median_sigma);
}

TEST(Report, WritesAllFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "pzne_report_test";
  std::filesystem::remove_all(dir);
  auto c = small_exact(ErrorKind::SampledPauli);
  c.channels = 2;
  const auto t = run_experiment(c);
  const auto files = emit_report(t, dir);
  for (const char* s : {"_cells.csv", "_records.csv", "_folds.csv", "_summary.csv", "_ensemble.csv",
                        "_channels.json", "_config.json", "_mitigated.svg", "_ensemble_delta1.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / ("t" + std::string(s)))) << s;
  }
  const auto summary = read_csv_file(dir / "t_summary.csv");
  EXPECT_EQ(summary.rows.size(), t.methods.size());
  const auto cfg = nlohmann::json::parse(slurp(dir / "t_config.json"));
  EXPECT_EQ(cfg["digest"], t.config_digest);
  std::filesystem::remove_all(dir);
}

TEST(Report, EmptyTableGivesHeaders) {
  ResultsTable t;
  std::ostringstream o;
  write_summary_csv(o, t);
  EXPECT_EQ(o.str(), std::string(kSummaryHeader) + "\n");
  std::ostringstream b;
  write_bounds_csv(b, {});
  EXPECT_EQ(b.str(), std::string(kBoundsHeader) + "\n");
}

TEST(Report, SvgIsWellFormed) {
  LinePlot p;
  p.title = "a < b";
  p.series.push_back(PlotSeries{"s", {1, 2, 3}, {0.1, 0.2, std::nan("")}, {}});
  const auto svg = render_svg(p);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("a &lt; b"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

}  // namespace
}  // namespace pzne
