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

#include "pzne/circuit.hpp"
#include "pzne/mitigation.hpp"
#include "pzne/noise.hpp"

namespace pzne {
namespace {

const std::uint64_t kZ0 = PauliString::from_letters("ZI").index();

/// Layer-folded CNOT chain on |00>, exact states at folds 1, 2, 3.
FoldSeries chain_series(const PauliChannel& f, const PauliChannel& b, int layers) {
  std::vector<DensityMatrix> states;
  for (int n = 1; n <= 3; ++n) {
    states.push_back(simulate(fold_layers(cnot_chain(layers, f, b), n - 1), DensityMatrix::basis_state(2, 0)));
  }
  return FoldSeries::from_states(states, {1, 2, 3});
}

FoldSeries synthetic(const std::vector<double>& o, const std::vector<double>& p) {
  FoldSeries s;
  for (std::size_t f = 0; f < o.size(); ++f) {
    std::vector<double> e(16, 0.0);
    e[0] = 1.0;
    e[kZ0] = o[f];
    s.expectations.push_back(e);
  }
  s.purities = p;
  return s;
}

TEST(PerFold, Examples) {
  EXPECT_DOUBLE_EQ(pzne_per_fold_estimator(0.7, 1.0, 4), 0.7);
  EXPECT_NEAR(pzne_per_fold_estimator(0.9, 0.85, 4), 1.00623, 1e-5);
  EXPECT_THROW(pzne_per_fold_estimator(0.1, 0.25, 4), PurityFloor);
}

TEST(VdEsd, Examples) {
  EXPECT_DOUBLE_EQ(vd_esd_estimate(0.8, 1.0).estimate, 0.8);
  EXPECT_NEAR(vd_esd_estimate(0.9, 0.85).estimate, 1.05882, 1e-5);
  EXPECT_THROW(vd_esd_estimate(0.9, 0.0), InvalidArgument);
  // concentrated spectrum at purity 1/2, D = 4: chi^2 = 1/3
  const double chi = std::sqrt(1.0 / 3.0);
  const double p = (1.0 + 3.0 * chi * chi) / 4.0;
  EXPECT_NEAR(std::abs(vd_esd_estimate(chi, p).estimate - 1.0), 0.1547, 1e-4);
}

TEST(ModifiedPurification, Examples) {
  EXPECT_DOUBLE_EQ(modified_purification_estimate(0.6, 1.0, 4).estimate, 0.6);
  EXPECT_NEAR(modified_purification_estimate(0.9, 0.85, 4).estimate, 1.00623, 1e-5);
  EXPECT_THROW(modified_purification_estimate(0.9, 0.25, 4), PurityFloor);
  const auto d = depolarizing_channel(2, 0.05);
  for (int layers : {1, 4, 9, 15}) {
    const auto s = chain_series(d, d, layers);
    EXPECT_NEAR(modified_purification_estimate(s.expectations[0][kZ0], s.purities[0], 4).estimate, 1.0, 1e-10);
  }
}

TEST(ModifiedPurification, MatchesPerFoldWithDefaults) {
  for (double p : {0.4, 0.7, 0.95}) {
    EXPECT_NEAR(modified_purification_estimate(0.5, p, 4).estimate, pzne_per_fold_estimator(0.5, p, 4), 1e-15);
  }
}

TEST(Zne, ExactUnderSymmetricErrors) {
  for (double chi : {0.3, 0.7, 0.95, 0.999}) {
    for (double rho : {1.0, -0.4}) {
      std::vector<double> o, p;
      for (int n = 1; n <= 3; ++n) {
        o.push_back(std::pow(chi, 2 * n - 1) * rho);
        p.push_back(0.9);
      }
      const auto r = zne_estimate(synthetic(o, p), kZ0);
      ASSERT_FALSE(r.failed) << r.flags;
      EXPECT_NEAR(r.estimate, rho, 1e-6) << chi;
    }
  }
}

TEST(Zne, IdealCircuitReturnsRaw) {
  const auto s = synthetic({0.8, 0.8, 0.8}, {1, 1, 1});
  EXPECT_DOUBLE_EQ(zne_estimate(s, kZ0).estimate, 0.8);
  for (auto t : {PzneTarget::FoldHalf, PzneTarget::PurityZero, PzneTarget::PurityFit}) {
    EXPECT_NEAR(pzne_estimate(s, kZ0, t).estimate, 0.8, 1e-12);
  }
}

TEST(Zne, AsymmetricBiasMatchesClosedForm) {
  const double lambda = 0.3, chi = 0.9;
  for (double omega : {-1.0, 0.5, 1.0}) {
    std::vector<double> o;
    for (int n = 1; n <= 3; ++n) {
      o.push_back(std::pow(chi, n) * std::pow(chi * std::exp(lambda * lambda * omega), n - 1));
    }
    const auto r = zne_estimate(synthetic(o, {0.9, 0.8, 0.7}), kZ0);
    EXPECT_NEAR(std::abs(r.estimate - 1.0), std::abs(std::exp(-lambda * lambda * omega / 2) - 1.0), 1e-8);
  }
}

TEST(Pzne, DepolarizingAllTargetsExact) {
  const auto d = depolarizing_channel(2, 0.05);
  for (int layers : {1, 5, 11, 18}) {
    const auto s = chain_series(d, d, layers);
    for (auto t : {PzneTarget::FoldHalf, PzneTarget::PurityZero, PzneTarget::PurityFit}) {
      const auto r = pzne_estimate(s, kZ0, t);
      ASSERT_FALSE(r.failed) << r.flags;
      EXPECT_NEAR(r.estimate, 1.0, 1e-6) << to_string(r.method) << " layers " << layers;
    }
    for (int f = 0; f < 3; ++f) {
      EXPECT_NEAR(pzne_per_fold_estimator(s.expectations[f][kZ0], s.purities[f], 4), 1.0, 1e-10);
    }
  }
}

TEST(Pzne, TableOneChannel) {
  const auto t = measured_cnot_channel();
  const auto s = chain_series(t, t, 5);
  const auto r = pzne_estimate(s, kZ0, PzneTarget::PurityFit);
  ASSERT_FALSE(r.failed) << r.flags;
  EXPECT_LT(std::abs(r.estimate - 1.0), 0.05);
  EXPECT_LT(std::abs(r.estimate - 1.0), std::abs(s.expectations[0][kZ0] - 1.0));
  EXPECT_EQ(r.fit_params.size(), 3u);
}

TEST(Pzne, PurityFloorGivesFailedRecord) {
  const auto s = synthetic({0.5, 0.2, 0.1}, {0.6, 0.3, 0.25});
  const auto r = pzne_estimate(s, kZ0, PzneTarget::FoldHalf);
  EXPECT_TRUE(r.failed);
  EXPECT_TRUE(std::isnan(r.estimate));
}

TEST(Pzne, NeedsThreeFolds) {
  auto s = synthetic({0.5, 0.2}, {0.6, 0.3});
  s.folds = {1, 2};
  EXPECT_THROW(pzne_estimate(s, kZ0, PzneTarget::PurityFit), InvalidArgument);
  EXPECT_THROW(zne_estimate(s, kZ0), InvalidArgument);
}

TEST(Ordering, ModifiedBeatsVdAtSmallError) {
  auto rng = make_rng(21, 0);
  int wins = 0;
  for (int c = 0; c < 100; ++c) {
    const auto f = sample_pauli_channel(2, 0.05, rng);
    const auto s = chain_series(f, f, 1);  // one noisy gate: error probability 0.05
    const double o = s.expectations[0][kZ0], p = s.purities[0];
    const double mod = std::abs(modified_purification_estimate(o, p, 4).estimate - 1.0);
    const double vd = std::abs(vd_esd_estimate(o, p).estimate - 1.0);
    wins += mod <= vd;
  }
  EXPECT_GE(wins, 90);
}

TEST(Ordering, PerFoldBiasGrowsWithFold) {
  auto rng = make_rng(22, 0);
  int ok = 0;
  for (int c = 0; c < 100; ++c) {
    const auto f = sample_pauli_channel(2, 0.05, rng);
    const auto s = chain_series(f, f, 3);
    double prev = -1.0;
    bool mono = true;
    for (int n = 0; n < 3; ++n) {
      const double b = std::abs(pzne_per_fold_estimator(s.expectations[n][kZ0], s.purities[n], 4) - 1.0);
      if (b < prev - 1e-15) mono = false;
      prev = b;
    }
    ok += mono;
  }
  EXPECT_GE(ok, 90);
}

TEST(Spread, PropagatesPerFoldUncertainty) {
  auto s = synthetic({0.9, 0.73, 0.59}, {0.9, 0.7, 0.55});
  s.expectation_spread.assign(3, std::vector<double>(16, 0.01));
  s.purity_spread.assign(3, 0.005);
  const auto zne = zne_estimate(s, kZ0);
  EXPECT_GT(zne.spread, 0.01);
  const auto fit = pzne_estimate(s, kZ0, PzneTarget::PurityFit);
  EXPECT_GT(fit.spread, 0.0);
  EXPECT_TRUE(std::isfinite(fit.spread));
  const auto vd = vd_esd_estimate(0.9, 0.8, 0.01, 0.02);
  EXPECT_NEAR(vd.spread, std::hypot(0.01 / 0.8, 0.9 * 0.02 / 0.64), 1e-15);
}

TEST(TaskDecompose, Examples) {
  const auto z0 = pauli_matrix(PauliString::from_letters("ZI"));
  const auto t1 = task_decompose(z0);
  ASSERT_EQ(t1.size(), 1u);
  EXPECT_EQ(t1[0].first.str(), "ZI");
  EXPECT_DOUBLE_EQ(t1[0].second, 1.0);
  const auto t2 = task_decompose((z0 + pauli_matrix(PauliString::from_letters("IX"))) / 2.0);
  ASSERT_EQ(t2.size(), 2u);
  for (const auto& [p, c] : t2) EXPECT_DOUBLE_EQ(c, 0.5);
  Matrix bad = Matrix::Zero(4, 4);
  bad(0, 1) = 1.0;
  EXPECT_THROW(task_decompose(bad), InvalidArgument);
}

TEST(TaskDecompose, RandomHermitianRoundTrip) {
  auto rng = make_rng(23, 0);
  std::normal_distribution<double> g;
  Matrix a(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) a(i, j) = Complex(g(rng), g(rng));
  }
  const Matrix h = (a + a.adjoint()) / 2.0;
  Matrix back = Matrix::Zero(4, 4);
  for (const auto& [p, c] : task_decompose(h)) back += c * pauli_matrix(p);
  EXPECT_LT((back - h).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Recombine, Examples) {
  MitigationRecord a;
  a.method = Method::ZNE;
  a.estimate = 1.0;
  a.spread = 0.1;
  a.pauli = "ZI";
  EXPECT_DOUBLE_EQ(recombine({{1.0, a}}).estimate, 1.0);
  MitigationRecord b = a;
  b.estimate = -1.0;
  EXPECT_DOUBLE_EQ(recombine({{0.5, a}, {0.5, b}}).estimate, 0.0);
  MitigationRecord c = a;
  c.spread = 0.2;
  const auto r = recombine({{1.0, a}, {2.0, b}, {-1.0, c}});
  EXPECT_NEAR(r.spread, std::sqrt(0.01 + 4 * 0.01 + 0.04), 1e-15);
  c.failed = true;
  EXPECT_TRUE(recombine({{1.0, a}, {1.0, c}}).failed);
  MitigationRecord d = a;
  d.method = Method::VdEsd;
  EXPECT_THROW(recombine({{1.0, a}, {1.0, d}}), InvalidArgument);
}

TEST(Recombine, LinearityWithExactInputs) {
  // two Pauli terms of one observable, mitigated separately, equal the
  // mitigation of the combined expectation for a linear method
  const auto d = depolarizing_channel(2, 0.05);
  std::vector<DensityMatrix> states;
  const auto prep = apply_unitary(DensityMatrix::basis_state(2, 0), Gate::named("H", {1}, 2).unitary);
  for (int n = 1; n <= 3; ++n) states.push_back(simulate(fold_layers(cnot_chain(3, d, d), n - 1), prep));
  const auto s = FoldSeries::from_states(states, {1, 2, 3});
  const Matrix o = 0.3 * pauli_matrix(PauliString::from_letters("ZI")) + 0.7 * pauli_matrix(PauliString::from_letters("IX"));
  std::vector<std::pair<double, MitigationRecord>> terms;
  double combined = 0.0;
  for (const auto& [p, c] : task_decompose(o)) {
    terms.emplace_back(c, modified_purification_estimate(s.expectations[0][p.index()], s.purities[0], 4));
    combined += c * s.expectations[0][p.index()];
  }
  EXPECT_NEAR(recombine(terms).estimate, modified_purification_estimate(combined, s.purities[0], 4).estimate, 1e-14);
}

TEST(MitigateAll, RecordsEveryMethod) {
  const auto t = measured_cnot_channel();
  const auto recs = mitigate_all(chain_series(t, t, 4), kZ0);
  ASSERT_EQ(recs.size(), all_methods().size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].method, all_methods()[i]);
    EXPECT_FALSE(recs[i].failed) << recs[i].flags;
    EXPECT_EQ(recs[i].pauli, "ZI");
  }
  std::ostringstream os;
  write_records_csv_header(os);
  for (const auto& r : recs) write_record_csv(os, r);
  EXPECT_NE(os.str().find("pZNE-purityfit,ZI,"), std::string::npos);
}

TEST(FoldSeriesValidation, RejectsBadInput) {
  auto s = synthetic({0.9, 0.8, 0.7}, {0.9, 0.8, 0.7});
  s.folds = {1, 1, 2};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = synthetic({0.9, 0.8, 0.7}, {0.9, 0.8, 1.5});
  EXPECT_THROW(s.validate(), InvalidArgument);
}

}  // namespace
}  // namespace pzne
