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
#include <sstream>

#include "pzne/measurement.hpp"
#include "pzne/noise.hpp"

namespace pzne {
namespace {

DensityMatrix plus_state() {
  return apply_unitary(DensityMatrix::basis_state(1, 0), Gate::named("H", {0}, 1).unitary);
}

DensityMatrix noisy_bell(double q) {
  const Matrix u = Gate::named("CNOT", {0, 1}, 2).unitary * Gate::named("H", {0}, 2).unitary;
  return apply_pauli_channel(apply_unitary(DensityMatrix::basis_state(2, 0), u), depolarizing_channel(2, q));
}

TEST(Settings, EnumerateAllFullWeight) {
  const auto s = all_settings(2);
  ASSERT_EQ(s.size(), 9u);
  for (const auto& m : s) EXPECT_EQ(m.basis.weight(), 2);
  EXPECT_THROW(MeasurementSetting(PauliString::from_letters("XI")), InvalidArgument);
}

TEST(SampleShots, Examples) {
  auto rng = make_rng(1, 0);
  const MeasurementSetting z(PauliString::from_letters("Z"));
  const auto t0 = sample_shots(DensityMatrix::basis_state(1, 0), z, 1000, rng);
  EXPECT_EQ(t0.counts[0], 1000u);
  const auto tp = sample_shots(plus_state(), z, 10000, rng);
  EXPECT_LT(std::abs(static_cast<double>(tp.counts[0]) / 1e4 - 0.5), 5.0 * std::sqrt(0.25 / 1e4));
  const ReadoutModel ro({{0.9524, 0.9025}});
  const auto tr = sample_shots(DensityMatrix::basis_state(1, 0), z, 10000, rng, ro);
  EXPECT_LT(std::abs(static_cast<double>(tr.counts[0]) / 1e4 - 0.9524), 5.0 * std::sqrt(0.9524 * 0.0476 / 1e4));
  EXPECT_EQ(tr.counts[0] + tr.counts[1], 10000u);
  EXPECT_THROW(sample_shots(plus_state(), z, 0, rng), InvalidArgument);
}

TEST(SampleShots, RotatedBasis) {
  auto rng = make_rng(2, 0);
  const auto t = sample_shots(plus_state(), MeasurementSetting(PauliString::from_letters("X")), 500, rng);
  EXPECT_EQ(t.counts[0], 500u);
  // |+i> measured in Y
  const auto yplus = apply_unitary(plus_state(), Gate::named("S", {0}, 1).unitary);
  const auto ty = sample_shots(yplus, MeasurementSetting(PauliString::from_letters("Y")), 500, rng);
  EXPECT_EQ(ty.counts[0], 500u);
}

TEST(ReadoutModel, ColumnStochastic) {
  const ReadoutModel ro({{0.9524, 0.9025}, {0.9109, 0.8647}});
  const auto r = ro.matrix();
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(r.col(c).sum(), 1.0, 1e-12);
  EXPECT_NEAR(r(0, 0), 0.9524 * 0.9109, 1e-15);
  EXPECT_NEAR(r(1, 0), (1 - 0.9524) * 0.9109, 1e-15);  // qubit 0 flipped 0 -> 1
  EXPECT_NEAR(r(0, 1), (1 - 0.9025) * 0.9109, 1e-15);
  EXPECT_GE(r.minCoeff(), 0.0);
  EXPECT_THROW(ReadoutModel({{1.2, 0.9}}), InvalidArgument);
}

TEST(Expectations, ExactTablesMatchSimulator) {
  const auto rho = noisy_bell(0.2);
  const auto rho2 = apply_unitary(rho, Gate::named("S", {0}, 2).unitary * Gate::named("H", {1}, 2).unitary);
  for (const auto& r : {rho, rho2}) {
    const auto e = exact_expectations(r);
    for (std::uint64_t i = 0; i < 16; ++i) {
      EXPECT_TRUE(e.covered[i]);
      EXPECT_NEAR(e.value[i], expectation(r, PauliString(2, i)), 1e-12) << PauliString(2, i).str();
    }
  }
}

TEST(Expectations, PoolsCoveringSettings) {
  auto rng = make_rng(3, 0);
  const auto rho = noisy_bell(0.1);
  std::vector<ShotTable> tables;
  for (const char* s : {"ZZ", "ZX", "ZY"}) {
    tables.push_back(sample_shots(rho, MeasurementSetting(PauliString::from_letters(s)), 1000, rng));
  }
  const auto e = expectations_from_shots(tables);
  const auto z0 = PauliString::from_letters("ZI");
  EXPECT_DOUBLE_EQ(e.shots[z0.index()], 3000.0);
  EXPECT_DOUBLE_EQ(e.shots[PauliString::from_letters("ZX").index()], 1000.0);
  EXPECT_FALSE(e.covered[PauliString::from_letters("XI").index()]);
  EXPECT_THROW(e.at(PauliString::from_letters("XI")), InvalidArgument);
  EXPECT_THROW(qst_purity(e), InvalidArgument);
}

TEST(Expectations, WeightVarianceScaling) {
  // Var[weight 1] / Var[weight 2] ~ 1/3 at equal per-setting shots
  const auto rho = noisy_bell(0.3);
  const auto x0 = PauliString::from_letters("XI"), xx = PauliString::from_letters("XX");
  std::vector<double> a, b;
  for (int rep = 0; rep < 300; ++rep) {
    auto rng = make_rng(4, static_cast<std::uint64_t>(rep));
    std::vector<ShotTable> tables;
    for (const auto& s : all_settings(2)) tables.push_back(sample_shots(rho, s, 10000, rng));
    const auto e = expectations_from_shots(tables);
    a.push_back(e.value[x0.index()]);
    b.push_back(e.value[xx.index()]);
  }
  auto var = [](const std::vector<double>& v) {
    double m = 0, s = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  // <X0> = 0 and <XX> = 1 - q = 0.7 give per-shot variances 1 and 1 - 0.775^2
  const double expected = (1.0 / 3.0) / (1.0 - std::pow(0.7, 2));
  EXPECT_NEAR(var(a) / var(b) / expected, 1.0, 0.2);
}

TEST(QstPurity, ExactInputs) {
  EXPECT_NEAR(qst_purity(exact_expectations(noisy_bell(0.0))).value, 1.0, 1e-12);
  EXPECT_NEAR(qst_purity(exact_expectations(DensityMatrix::maximally_mixed(2))).value, 0.25, 1e-12);
  const auto rho = noisy_bell(0.25);
  EXPECT_NEAR(qst_purity(exact_expectations(rho)).value, purity(rho), 1e-12);
}

TEST(QstPurity, FiniteShotsWithinErrorBars) {
  const auto rho = noisy_bell(0.15);
  auto rng = make_rng(5, 0);
  std::vector<ShotTable> tables;
  for (const auto& s : all_settings(2)) tables.push_back(sample_shots(rho, s, 20000, rng));
  const auto e = expectations_from_shots(tables);
  const auto est = qst_purity(e);
  EXPECT_GT(est.std_error, 0.0);
  EXPECT_LT(std::abs(est.value - purity(rho)), 5.0 * est.std_error);
  const auto corrected = qst_purity(e, true);
  EXPECT_LT(corrected.value, est.value);
}

TEST(QstPurity, BiasCorrectionRemovesShotBias) {
  const auto rho = noisy_bell(0.5);
  double plain = 0, fixed = 0;
  constexpr int kReps = 200;
  for (int rep = 0; rep < kReps; ++rep) {
    auto rng = make_rng(6, static_cast<std::uint64_t>(rep));
    std::vector<ShotTable> tables;
    for (const auto& s : all_settings(2)) tables.push_back(sample_shots(rho, s, 200, rng));
    const auto e = expectations_from_shots(tables);
    plain += qst_purity(e).value / kReps;
    fixed += qst_purity(e, true).value / kReps;
  }
  EXPECT_LT(std::abs(fixed - purity(rho)), std::abs(plain - purity(rho)));
}

TEST(SwapTest, Examples) {
  auto rng = make_rng(7, 0);
  const auto pure = swap_test_purity(DensityMatrix::basis_state(2, 1), 10000, rng);
  EXPECT_NEAR(pure.value, 1.0, 1e-12);
  const auto mixed = DensityMatrix::maximally_mixed(1);
  const auto est = swap_test_purity(mixed, 10000, rng);
  EXPECT_LT(std::abs(est.value - 0.5), 5.0 * std::sqrt((1 - 0.25) / 1e4));
  EXPECT_THROW(swap_test_purity(DensityMatrix::maximally_mixed(3), 10, rng), InvalidArgument);
}

TEST(SwapTest, UnbiasedWithPredictedVariance) {
  const auto rho = noisy_bell(0.3);
  const double p = purity(rho);
  constexpr int kReps = 200;
  constexpr std::uint64_t kShots = 4000;
  double sum = 0, sumsq = 0, se2 = 0;
  for (int rep = 0; rep < kReps; ++rep) {
    auto rng = make_rng(8, static_cast<std::uint64_t>(rep));
    const auto e = swap_test_purity(rho, kShots, rng);
    sum += e.value;
    sumsq += e.value * e.value;
    se2 += e.std_error * e.std_error;
  }
  const double mean = sum / kReps;
  const double pooled = std::sqrt(se2 / kReps / kReps);
  EXPECT_LT(std::abs(mean - p), 4.0 * pooled);
  const double var = (sumsq - kReps * mean * mean) / (kReps - 1);
  EXPECT_NEAR(var / ((1 - p * p) / kShots), 1.0, 0.25);
}

TEST(SwapTest, SwapTraceIsPurity) {
  const auto rho = noisy_bell(0.4);
  const double tr = (swap_operator(2) * tensor(rho, rho).matrix()).trace().real();
  EXPECT_NEAR(tr, purity(rho), 1e-12);
}

TEST(BellBasis, Identities) {
  const auto b = bell_basis_transform();
  EXPECT_LT((b * b.transpose() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-15);
  // copy 1 on the high bit: index = 2 c1 + c2
  Eigen::Matrix4d swap = Eigen::Matrix4d::Zero();
  swap(0, 0) = swap(3, 3) = swap(1, 2) = swap(2, 1) = 1;
  const Eigen::Matrix4d s = b.transpose() * swap * b;
  EXPECT_LT((s - Eigen::Vector4d(1, 1, -1, 1).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::Vector4d z1(1, 1, -1, -1), z2(1, -1, 1, -1);
  const Eigen::Vector4d target = (Eigen::Vector4d::Ones() + z1 - z2 + z1.cwiseProduct(z2)) / 2.0;
  EXPECT_LT((s.diagonal() - target).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::Matrix4d zbar = ((z1 + z2) / 2.0).asDiagonal();
  EXPECT_LT((b.transpose() * zbar * b - zbar).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((zbar * s - zbar).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(StateVerificationEcho, Examples) {
  const auto id = PauliChannel::identity(2);
  const auto rho = noisy_bell(0.0);
  EXPECT_NEAR(state_verification_echo(cnot_chain(2, id, id), 2, rho), 1.0, 1e-12);

  const auto d = measured_cnot_channel();
  const auto c = cnot_chain(2, d, d);
  for (int n = 1; n <= 3; ++n) {
    const auto rn = simulate(fold_circuit(c, n), rho);
    EXPECT_NEAR(state_verification_echo(c, n, rho), purity(rn), 1e-12);
  }
}

TEST(StateVerificationEcho, DivergesForAsymmetricErrors) {
  auto rng = make_rng(9, 0);
  const auto rho = apply_unitary(DensityMatrix::basis_state(2, 0), Gate::named("H", {0}, 2).unitary);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = sample_pauli_channel(2, 0.1, rng);
    const auto b = sample_pauli_channel(2, 0.1, rng);
    const auto c = cnot_chain(1, f, b);
    const double echo = state_verification_echo(c, 2, rho);
    const double p = purity(simulate(fold_circuit(c, 2), rho));
    worst = std::max(worst, std::abs(echo - p));
  }
  EXPECT_GT(worst, 1e-4);
}

TEST(MitigateReadout, Examples) {
  const std::vector<double> q{0.1, 0.2, 0.3, 0.4};
  const auto same = mitigate_readout(q, ReadoutModel::ideal(2));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(same[i], q[i], 1e-15);
  const ReadoutModel ro({{0.9524, 0.9025}, {0.9109, 0.8647}});
  const auto noisy = apply_readout(q, ro);
  const auto back = mitigate_readout(noisy, ro);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(back[i], q[i], 1e-10);
  EXPECT_THROW(mitigate_readout({0.5, 0.5}, ReadoutModel({{0.5, 0.5}})), InvalidArgument);
  EXPECT_THROW(mitigate_readout({0.5, 0.6}, ReadoutModel({{0.9, 0.9}})), InvalidArgument);
}

TEST(MitigateReadout, ProjectsOntoSimplexWithMinimalResidual) {
  const ReadoutModel ro({{0.9, 0.8}});
  const auto r = ro.matrix();
  // q outside the image cone: more mass on 0 than F0 allows
  const std::vector<double> q{0.97, 0.03};
  const auto p = mitigate_readout(q, ro);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-10);
  EXPECT_GE(std::min(p[0], p[1]), 0.0);
  auto residual = [&](double p0) {
    const Eigen::Vector2d v = r * Eigen::Vector2d(p0, 1 - p0) - Eigen::Vector2d(q[0], q[1]);
    return v.norm();
  };
  double best = 1e9;
  for (int k = 0; k <= 100000; ++k) best = std::min(best, residual(k / 100000.0));
  EXPECT_LE(residual(p[0]), best + 1e-9);
}

TEST(MitigateReadout, AlwaysValidDistribution) {
  auto rng = make_rng(10, 0);
  const ReadoutModel ro({{0.9524, 0.9025}, {0.9109, 0.8647}});
  const auto rho = noisy_bell(0.05);
  for (int rep = 0; rep < 100; ++rep) {
    const auto t = sample_shots(rho, MeasurementSetting(PauliString::from_letters("ZZ")), 50, rng, ro);
    const auto p = mitigate_readout(frequencies(t), ro);
    double s = 0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-10);
  }
}

TEST(ShotTableCsv, RoundTrip) {
  auto rng = make_rng(11, 0);
  std::vector<ShotTable> tables;
  for (const auto& s : all_settings(2)) tables.push_back(sample_shots(noisy_bell(0.1), s, 100, rng));
  std::stringstream ss;
  write_shot_tables_csv(ss, tables);
  const auto back = read_shot_tables_csv(ss);
  ASSERT_EQ(back.size(), tables.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].setting, tables[i].setting);
    EXPECT_EQ(back[i].counts, tables[i].counts);
    EXPECT_EQ(back[i].shots, 100u);
  }
}

}  // namespace
}  // namespace pzne
