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
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pzne/error.hpp"

namespace pzne {

// moments of the nontrivial spectrum, weighted by rho_i^2
struct SpectrumStats {
  double chi_bar = 1.0;
  double chi_sq_bar = 1.0;
  double delta_chi_sq = 0.0;
  double sigma = 0.0;
  std::size_t count = 0;  // indices that entered the moments
};

// eigenvalues that sit at 1 (to this slack) are symmetry-protected and skipped
inline constexpr double kTrivialEigenvalueSlack = 1e-12;

inline SpectrumStats spectrum_stats(std::span<const double> chi, std::span<const double> weights = {}) {
  if (!weights.empty() && weights.size() != chi.size())
    throw InvalidArgument("spectrum_stats: weights length mismatch");
  double wsum = 0.0, m1 = 0.0, m2 = 0.0;
  SpectrumStats s;
  for (std::size_t i = 1; i < chi.size(); ++i) {
    if (!(chi[i] < 1.0 - kTrivialEigenvalueSlack)) continue;
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w < 0.0 || !std::isfinite(w)) throw InvalidArgument("spectrum_stats: weights must be non-negative");
    if (w == 0.0) continue;
    wsum += w;
    m1 += w * chi[i];
    m2 += w * chi[i] * chi[i];
    ++s.count;
  }
  if (wsum <= 0.0) {
    // nothing nontrivial: the noiseless spectrum
    if (weights.empty()) return s;
    throw InvalidArgument("spectrum_stats: all weights are zero");
  }
  s.chi_bar = m1 / wsum;
  s.chi_sq_bar = m2 / wsum;
  s.delta_chi_sq = s.chi_sq_bar - s.chi_bar * s.chi_bar;
  // equal eigenvalues should give sigma exactly 0, not a rounding residue
  double lo = 2.0, hi = -2.0;
  for (std::size_t i = 1; i < chi.size(); ++i) {
    if (!(chi[i] < 1.0 - kTrivialEigenvalueSlack)) continue;
    if (!weights.empty() && weights[i] == 0.0) continue;
    lo = std::min(lo, chi[i]);
    hi = std::max(hi, chi[i]);
  }
  if (hi - lo <= 1e-10) s.delta_chi_sq = 0.0;
  s.sigma = s.chi_sq_bar > 0.0 ? std::sqrt(std::max(0.0, s.delta_chi_sq) / s.chi_sq_bar) : 0.0;
  return s;
}

inline SpectrumStats spectrum_stats(const std::vector<double>& chi, const std::vector<double>& weights = {}) {
  return spectrum_stats(std::span<const double>(chi), std::span<const double>(weights));
}

inline double failing_probability_bound(double eps, double sigma) {
  if (!(eps >= 0.0)) throw InvalidArgument("failing_probability_bound: eps must be >= 0");
  if (sigma <= 0.0) return eps > 0.0 ? 0.0 : 1.0;
  if (std::isinf(eps)) return 0.0;
  const double e = -eps * eps / (2.0 * sigma * sigma);
  // 2 e^a cosh(b) = e^(a+b) + e^(a-b), keeps large eps finite
  const double b = 0.5 * eps;
  const double v = std::exp(e + b) + std::exp(e - b);
  return std::clamp(v, 0.0, 1.0);
}

inline double tolerant_error(double delta, double sigma) {
  if (!(delta > 0.0 && delta < 2.0)) throw InvalidArgument("tolerant_error: delta must lie in (0, 2)");
  if (sigma < 0.0) throw InvalidArgument("tolerant_error: sigma must be >= 0");
  if (sigma >= 2.0) throw MethodInapplicable("tolerant_error: sigma >= 2, spectrum too spread for extrapolation");
  return 2.0 * sigma * std::sqrt((2.0 - delta) / (4.0 - sigma * sigma));
}

struct SigmaBound {
  double sigma = 0.0;    // upper bound on sigma
  double epsilon = 0.0;  // rough bound on the tolerant error
};

inline SigmaBound sigma_bound_from_error_probability(double q_lambda, double delta = 0.05) {
  if (!(q_lambda >= 0.0)) throw InvalidArgument("sigma_bound: q_lambda must be >= 0");
  if (!(q_lambda < 0.5)) throw InvalidArgument("sigma_bound: q_lambda must be < 0.5");
  if (!(delta > 0.0 && delta < 2.0)) throw InvalidArgument("sigma_bound: delta must lie in (0, 2)");
  SigmaBound b;
  b.sigma = std::sqrt(2.0 * q_lambda / (1.0 - 2.0 * q_lambda));
  // the eps form goes singular at q = 0.4
  b.epsilon = q_lambda < 0.4 ? 2.0 * std::sqrt((2.0 - delta) * q_lambda / (2.0 - 5.0 * q_lambda))
                             : std::numeric_limits<double>::infinity();
  return b;
}

// fraction of nontrivial indices whose |chi_i / sqrt(chi_sq_bar) - 1| >= eps
inline double empirical_failing_fraction(std::span<const double> chi, double eps,
                                         std::span<const double> weights = {}) {
  const SpectrumStats s = spectrum_stats(chi, weights);
  if (s.count == 0) return 0.0;
  const double root = std::sqrt(s.chi_sq_bar);
  double wsum = 0.0, bad = 0.0;
  for (std::size_t i = 1; i < chi.size(); ++i) {
    if (!(chi[i] < 1.0 - kTrivialEigenvalueSlack)) continue;
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w == 0.0) continue;
    wsum += w;
    if (std::abs(chi[i] / root - 1.0) >= eps) bad += w;
  }
  return bad / wsum;
}

inline double vd_bias(double chi, double chi_sq_bar, double dim) {
  if (!(dim >= 2.0)) throw InvalidArgument("vd_bias: dimension must be >= 2");
  return std::abs(dim * chi / ((dim - 1.0) * chi_sq_bar + 1.0) - 1.0);
}

// zeros of vd_bias on (0, 1] when chi = chi_bar and chi_sq_bar = chi_bar^2
inline std::vector<double> concentrated_vd_bias_zeros(double dim, int grid = 20000, double tol = 1e-12) {
  if (!(dim >= 2.0)) throw InvalidArgument("vd_bias: dimension must be >= 2");
  auto f = [dim](double x) { return dim * x / ((dim - 1.0) * x * x + 1.0) - 1.0; };
  std::vector<double> zeros;
  double xa = 1.0 / grid, fa = f(xa);
  for (int k = 2; k <= grid; ++k) {
    const double xb = static_cast<double>(k) / grid, fb = f(xb);
    if (fb == 0.0) {
      zeros.push_back(xb);
    } else if (fa != 0.0 && (fa < 0.0) != (fb < 0.0)) {
      double lo = xa, hi = xb;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        ((f(mid) < 0.0) == (fa < 0.0) ? lo : hi) = mid;
      }
      zeros.push_back(0.5 * (lo + hi));
    }
    xa = xb;
    fa = fb;
  }
  // touching zero at the right edge (no sign change when D = 2)
  if (zeros.empty() || std::abs(zeros.back() - 1.0) > 1e-9) {
    if (std::abs(f(1.0)) < 1e-12) zeros.push_back(1.0);
  }
  return zeros;
}

inline double sum_abs(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

// K_A / K_B from the fit parameters at the noiseless point
struct KappaInputs {
  double k_a = 0.0;
  double k_b = 1.0;
};

inline double replica_overhead_bound(double p, double o, std::span<const double> partials, double zne_overhead,
                                     std::optional<KappaInputs> kappa = std::nullopt) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("replica_overhead_bound: purity must lie in (0, 1]");
  if (!(std::abs(o) <= 1.0)) throw InvalidArgument("replica_overhead_bound: |O| must be <= 1");
  if (!(zne_overhead >= 0.0)) throw InvalidArgument("replica_overhead_bound: overhead must be >= 0");
  const double s = sum_abs(partials);
  const double root = std::sqrt(zne_overhead);
  const double var_p = 1.0 - p * p;
  if (s == 0.0 || var_p == 0.0) return zne_overhead;
  const double var_o = 1.0 - o * o;
  if (var_o <= 1e-14) {
    if (!kappa) throw InvalidArgument("replica_overhead_bound: |O| = 1 needs K_A and K_B");
    if (kappa->k_b == 0.0) throw InvalidArgument("replica_overhead_bound: K_B must be nonzero");
    const double k = kappa->k_a / kappa->k_b;
    return std::pow(root + 2.0 * std::abs(k) * s, 2);
  }
  return std::pow(root + var_p / var_o * s, 2);
}

inline double replica_overhead_bound(double p, double o, const std::vector<double>& partials, double zne_overhead,
                                     std::optional<KappaInputs> kappa = std::nullopt) {
  return replica_overhead_bound(p, o, std::span<const double>(partials), zne_overhead, kappa);
}

struct QstOverhead {
  double bound = 0.0;
  double purity_factor = 0.0;     // (10^L - 1) / (4^(L-1) 3^l0)
  double rescaled_zne = 0.0;      // 3^-L Z C~, NaN when Z is not supplied
  bool purity_term_vanishes = false;  // l0 > L log3(5/2)
};

inline double qst_purity_factor(int L, int l0) {
  // logs keep large L finite
  const double log_num = L * std::log(10.0) + std::log1p(-std::pow(10.0, -L));
  const double log_den = (L - 1) * std::log(4.0) + l0 * std::log(3.0);
  return std::exp(log_num - log_den);
}

inline QstOverhead qst_overhead_bound(int L, int l0, std::span<const double> partials, double c_tilde,
                                      std::optional<double> z = std::nullopt) {
  if (L < 1) throw InvalidArgument("qst_overhead_bound: L must be >= 1");
  if (l0 < 1 || l0 > L) throw InvalidArgument("qst_overhead_bound: need 1 <= l0 <= L");
  if (!(c_tilde >= 0.0)) throw InvalidArgument("qst_overhead_bound: overhead must be >= 0");
  QstOverhead r;
  r.purity_factor = qst_purity_factor(L, l0);
  r.bound = std::pow(std::sqrt(c_tilde) + r.purity_factor * sum_abs(partials), 2);
  r.rescaled_zne = z ? std::pow(3.0, -L) * *z * c_tilde : std::numeric_limits<double>::quiet_NaN();
  r.purity_term_vanishes = l0 > L * std::log(2.5) / std::log(3.0);
  return r;
}

inline QstOverhead qst_overhead_bound(int L, int l0, const std::vector<double>& partials, double c_tilde,
                                      std::optional<double> z = std::nullopt) {
  return qst_overhead_bound(L, l0, std::span<const double>(partials), c_tilde, z);
}

struct DeltaMetrics {
  double delta1 = 0.0;
  double delta2 = 0.0;
  std::size_t count = 0;
};

inline DeltaMetrics delta_metrics(std::span<const double> estimates, std::span<const double> variances,
                                  double ideal) {
  if (estimates.empty()) throw InvalidArgument("delta_metrics: need at least one estimate");
  if (!variances.empty() && variances.size() != estimates.size())
    throw InvalidArgument("delta_metrics: variances length mismatch");
  DeltaMetrics d;
  d.count = estimates.size();
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = estimates[i] - ideal;
    s1 += e * e;
    if (!variances.empty()) s2 += variances[i];
  }
  const auto n = static_cast<double>(d.count);
  d.delta1 = std::sqrt(s1 / n);
  d.delta2 = std::sqrt(std::max(0.0, s2 / n));
  return d;
}

inline DeltaMetrics delta_metrics(const std::vector<double>& estimates, const std::vector<double>& variances,
                                  double ideal) {
  return delta_metrics(std::span<const double>(estimates), std::span<const double>(variances), ideal);
}

struct NoiseFreePoint {
  double n0 = 0.5;         // raw 1 - w/(lambda^2 dw^2), NaN if undefined
  double clamped = 0.5;
  double chosen = 0.5;
  bool clamped_flag = false;
  std::string note;
};

// pick between the effective point n0 and 1/2, whichever is closer to 1
inline NoiseFreePoint effective_noise_free_point(double omega_bar, double delta_omega_sq, double lambda) {
  NoiseFreePoint r;
  const double den = lambda * lambda * delta_omega_sq;
  if (!(den > 0.0)) {
    r.n0 = std::numeric_limits<double>::quiet_NaN();
    r.clamped_flag = true;
    r.note = "n0 undefined (zero spread), using 1/2";
    return r;
  }
  r.n0 = 1.0 - omega_bar / den;
  r.clamped = std::clamp(r.n0, 0.0, 1.0);
  if (r.clamped != r.n0) {
    r.clamped_flag = true;
    r.note = "n0 outside [0, 1], clamped";
  }
  r.chosen = std::abs(1.0 - r.clamped) < std::abs(1.0 - 0.5) ? r.clamped : 0.5;
  return r;
}

}  // namespace pzne
