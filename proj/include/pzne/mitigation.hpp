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
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pzne/density.hpp"
#include "pzne/error.hpp"
#include "pzne/fit.hpp"
#include "pzne/pauli.hpp"

namespace pzne {

enum class Method { Raw, ZNE, PzneFoldHalf, PzneZero, PzneFit, ModifiedPurification, VdEsd };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Raw: return "Raw";
    case Method::ZNE: return "ZNE";
    case Method::PzneFoldHalf: return "pZNE-n1/2";
    case Method::PzneZero: return "pZNE-s0";
    case Method::PzneFit: return "pZNE-purityfit";
    case Method::ModifiedPurification: return "ModifiedPurification";
    case Method::VdEsd: return "VDESD";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  for (Method m : {Method::Raw, Method::ZNE, Method::PzneFoldHalf, Method::PzneZero, Method::PzneFit,
                   Method::ModifiedPurification, Method::VdEsd}) {
    if (s == to_string(m)) return m;
  }
  throw InvalidArgument("unknown mitigation method '" + s + "'");
}

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> m{Method::Raw,     Method::ZNE,    Method::PzneFoldHalf,
                                     Method::PzneZero, Method::PzneFit, Method::ModifiedPurification,
                                     Method::VdEsd};
  return m;
}

enum class PzneTarget { FoldHalf, PurityZero, PurityFit };

/// Measured (or exact) data at each fold. expectations[f][i] is <P_i> at folds[f].
struct FoldSeries {
  int num_qubits = 2;
  std::vector<double> folds{1, 2, 3};
  std::vector<std::vector<double>> expectations;
  std::vector<std::vector<double>> expectation_spread;  // empty means zero
  std::vector<double> purities;
  std::vector<double> purity_spread;  // empty means zero
  double p0 = 1.0;
  double p_inf = -1.0;  // negative means 1/D
  double n_star = 0.5;

  static constexpr double kPuritySlack = 0.1;

  double stable_purity() const { return p_inf >= 0.0 ? p_inf : 1.0 / static_cast<double>(hilbert_dim(num_qubits)); }

  void validate() const {
    check_qubit_count(num_qubits);
    if (folds.empty()) throw InvalidArgument("fold series is empty");
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (folds[i] < 1.0 || (i > 0 && folds[i] <= folds[i - 1])) {
        throw InvalidArgument("folds must be >= 1 and strictly increasing");
      }
    }
    if (expectations.size() != folds.size() || purities.size() != folds.size()) {
      throw InvalidArgument("fold series needs one expectation vector and one purity per fold");
    }
    for (const auto& e : expectations) {
      if (e.size() != num_paulis(num_qubits)) throw InvalidArgument("expectation vector must have 4^L entries");
    }
    if (!expectation_spread.empty() && expectation_spread.size() != folds.size()) {
      throw InvalidArgument("expectation spreads do not match folds");
    }
    if (!purity_spread.empty() && purity_spread.size() != folds.size()) {
      throw InvalidArgument("purity spreads do not match folds");
    }
    const double lo = stable_purity() - kPuritySlack;
    for (double p : purities) {
      if (!(p > lo && p <= 1.0 + kPuritySlack)) {
        throw InvalidArgument("purity " + std::to_string(p) + " outside (p_inf - slack, 1 + slack]");
      }
    }
  }

  std::vector<double> values_of(std::uint64_t pauli) const {
    std::vector<double> v;
    for (const auto& e : expectations) v.push_back(e.at(pauli));
    return v;
  }

  std::vector<double> spreads_of(std::uint64_t pauli) const {
    std::vector<double> v(folds.size(), 0.0);
    if (!expectation_spread.empty()) {
      for (std::size_t f = 0; f < folds.size(); ++f) v[f] = expectation_spread[f].at(pauli);
    }
    return v;
  }

  std::vector<double> purity_spreads() const {
    return purity_spread.empty() ? std::vector<double>(folds.size(), 0.0) : purity_spread;
  }

  /// Exact series from simulated states, one per fold.
  static FoldSeries from_states(const std::vector<DensityMatrix>& states, std::vector<double> folds) {
    if (states.empty() || states.size() != folds.size()) throw InvalidArgument("one state per fold required");
    FoldSeries s;
    s.num_qubits = states.front().num_qubits();
    s.folds = std::move(folds);
    for (const auto& r : states) {
      s.expectations.push_back(pauli_decompose(r).coeffs);
      s.purities.push_back(purity(r));
    }
    return s;
  }
};

struct MitigationRecord {
  Method method = Method::Raw;
  std::string pauli;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double spread = 0.0;
  std::vector<double> fit_params;
  double residual = 0.0;
  bool failed = false;
  std::string flags;
  std::string inputs_digest;
};

namespace detail {

inline std::string digest_of(const std::vector<double>& a, const std::vector<double>& b) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mix = [&](const std::vector<double>& v) {
    for (double x : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
  };
  mix(a);
  mix(b);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Value of an estimator given (O_n, p_n). Throws on failure; fills params.
using EstimatorFn = std::function<double(const std::vector<double>&, const std::vector<double>&, FitResult*)>;

/// First-order propagation of per-fold spreads through the estimator by
/// central differences.
inline double propagated_spread(const EstimatorFn& est, const std::vector<double>& o, const std::vector<double>& p,
                                const std::vector<double>& so, const std::vector<double>& sp) {
  double var = 0.0;
  auto term = [&](std::vector<double> oo, std::vector<double> pp, bool vary_o, std::size_t j, double sigma) {
    if (!(sigma > 0.0)) return;
    const double h = std::max(sigma * 1e-2, 1e-7);
    auto& v = vary_o ? oo : pp;
    const double base = v[j];
    v[j] = base + h;
    const double up = est(oo, pp, nullptr);
    v[j] = base - h;
    const double dn = est(oo, pp, nullptr);
    const double d = (up - dn) / (2.0 * h);
    var += d * d * sigma * sigma;
  };
  for (std::size_t j = 0; j < o.size(); ++j) term(o, p, true, j, so[j]);
  for (std::size_t j = 0; j < p.size(); ++j) term(o, p, false, j, sp[j]);
  return std::sqrt(var);
}

inline MitigationRecord run_estimator(Method m, const std::string& pauli, const EstimatorFn& est,
                                      const std::vector<double>& o, const std::vector<double>& p,
                                      const std::vector<double>& so, const std::vector<double>& sp) {
  MitigationRecord r;
  r.method = m;
  r.pauli = pauli;
  r.inputs_digest = digest_of(o, p);
  FitResult fit;
  try {
    r.estimate = est(o, p, &fit);
    r.fit_params = fit.params;
    r.residual = fit.residual;
    if (!fit.message.empty()) r.flags = fit.message;
  } catch (const std::exception& e) {
    r.failed = true;
    r.flags = e.what();
    return r;
  }
  if (!std::isfinite(r.estimate)) {
    r.failed = true;
    if (r.flags.empty()) r.flags = "non-finite estimate";
    return r;
  }
  try {
    r.spread = propagated_spread(est, o, p, so, sp);
  } catch (const std::exception&) {
    r.spread = std::numeric_limits<double>::quiet_NaN();
    r.flags += r.flags.empty() ? "spread unavailable" : "; spread unavailable";
  }
  return r;
}

}  // namespace detail

/// <P>_n sqrt((p0 - p_inf)/(p_n - p_inf)).
inline double pzne_per_fold_estimator(double expectation, double purity_n, double p0, double p_inf) {
  if (!(p0 > p_inf)) throw InvalidArgument("p0 must exceed p_inf");
  if (purity_n <= p_inf + 1e-6) {
    throw PurityFloor("purity " + std::to_string(purity_n) + " is at the stable-state floor " + std::to_string(p_inf));
  }
  return expectation * std::sqrt((p0 - p_inf) / (purity_n - p_inf));
}

inline double pzne_per_fold_estimator(double expectation, double purity_n, int dim) {
  return pzne_per_fold_estimator(expectation, purity_n, 1.0, 1.0 / dim);
}

namespace detail {

inline double require_converged(const FitResult& f) {
  if (!f.converged) throw InvalidArgument("fit did not converge (residual " + std::to_string(f.residual) + ")");
  return 0.0;
}

inline double zne_value(const std::vector<double>& folds, const std::vector<double>& o, double n_star,
                        FitResult* out) {
  const FitResult f = fit_exponential(folds, o);
  if (out) *out = f;
  require_converged(f);
  return f.evaluate(n_star);
}

inline double fold_half_value(const std::vector<double>& folds, const std::vector<double>& o,
                              const std::vector<double>& p, double p0, double pinf, double n_star, FitResult* out) {
  std::vector<double> est(o.size());
  for (std::size_t i = 0; i < o.size(); ++i) est[i] = pzne_per_fold_estimator(o[i], p[i], p0, pinf);
  const FitResult f = fit_exponential(folds, est);
  if (out) *out = f;
  require_converged(f);
  return f.evaluate(n_star);
}

inline double purity_zero_value(const std::vector<double>& o, const std::vector<double>& p, double p0, double pinf,
                                FitResult* out) {
  std::vector<double> s(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= pinf + 1e-6) throw PurityFloor("purity at the stable-state floor");
    s[i] = -std::log((p[i] - pinf) / (p0 - pinf));
  }
  if (*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()) < 1e-12) {
    double mean = 0.0;
    for (double v : o) mean += v;
    if (out) {
      *out = FitResult{};
      out->message = "equal error rates";
    }
    return mean / static_cast<double>(o.size());
  }
  const FitResult f = fit_exponential(s, o);
  if (out) *out = f;
  require_converged(f);
  return f.evaluate(0.0);
}

inline double purity_fit_value(const std::vector<double>& o, const std::vector<double>& p, double p0,
                               FitResult* out) {
  const FitResult f = fit_purity_vs_expectation(o, p);
  if (out) *out = f;
  if (f.model == FitModel::Constant) return o.front();
  require_converged(f);
  const double a = f.params[0], k = f.params[1], c = f.params[2];
  const double base = (p0 - c) / a;
  if (!(base > 0.0) || k == 0.0) throw InvalidArgument("purity fit gives no real estimate ((p0 - C)/A <= 0)");
  const double mag = std::pow(base, 1.0 / k);
  return o.front() < 0.0 ? -mag : mag;
}

}  // namespace detail

inline MitigationRecord raw_record(const FoldSeries& s, std::uint64_t pauli) {
  s.validate();
  MitigationRecord r;
  r.method = Method::Raw;
  r.pauli = PauliString(s.num_qubits, pauli).str();
  r.estimate = s.expectations.front().at(pauli);
  r.spread = s.spreads_of(pauli).front();
  r.inputs_digest = detail::digest_of(s.values_of(pauli), s.purities);
  return r;
}

/// Exponential fit in the fold number, evaluated at n_star.
inline MitigationRecord zne_estimate(const FoldSeries& s, std::uint64_t pauli) {
  s.validate();
  if (s.folds.size() < 3) throw InvalidArgument("ZNE needs at least 3 folds");
  const auto folds = s.folds;
  const double n_star = s.n_star;
  return detail::run_estimator(
      Method::ZNE, PauliString(s.num_qubits, pauli).str(),
      [folds, n_star](const auto& o, const auto&, FitResult* f) { return detail::zne_value(folds, o, n_star, f); },
      s.values_of(pauli), s.purities, s.spreads_of(pauli), std::vector<double>(s.folds.size(), 0.0));
}

inline MitigationRecord pzne_estimate(const FoldSeries& s, std::uint64_t pauli, PzneTarget target) {
  s.validate();
  if (s.folds.size() < 3) throw InvalidArgument("pZNE needs at least 3 folds");
  const auto folds = s.folds;
  const double p0 = s.p0, pinf = s.stable_purity(), n_star = s.n_star;
  detail::EstimatorFn fn;
  Method m = Method::PzneFit;
  switch (target) {
    case PzneTarget::FoldHalf:
      m = Method::PzneFoldHalf;
      fn = [=](const auto& o, const auto& p, FitResult* f) {
        return detail::fold_half_value(folds, o, p, p0, pinf, n_star, f);
      };
      break;
    case PzneTarget::PurityZero:
      m = Method::PzneZero;
      fn = [=](const auto& o, const auto& p, FitResult* f) { return detail::purity_zero_value(o, p, p0, pinf, f); };
      break;
    case PzneTarget::PurityFit:
      m = Method::PzneFit;
      fn = [=](const auto& o, const auto& p, FitResult* f) { return detail::purity_fit_value(o, p, p0, f); };
      break;
  }
  return detail::run_estimator(m, PauliString(s.num_qubits, pauli).str(), fn, s.values_of(pauli), s.purities,
                               s.spreads_of(pauli), s.purity_spreads());
}

/// <P>/p. Tr[P rho^2] = Tr[P rho] is assumed, as for the experiment's observable.
inline MitigationRecord vd_esd_estimate(double expectation, double purity_value, double expectation_spread = 0.0,
                                        double purity_spread = 0.0) {
  if (!(purity_value > 0.0)) throw InvalidArgument("VD/ESD needs a positive purity");
  MitigationRecord r;
  r.method = Method::VdEsd;
  r.estimate = expectation / purity_value;
  r.spread = std::hypot(expectation_spread / purity_value,
                        expectation * purity_spread / (purity_value * purity_value));
  r.inputs_digest = detail::digest_of({expectation}, {purity_value});
  return r;
}

/// <P> sqrt((D - 1)/(D p - 1)).
inline MitigationRecord modified_purification_estimate(double expectation, double purity_value, int dim,
                                                       double expectation_spread = 0.0, double purity_spread = 0.0) {
  if (dim < 2) throw InvalidArgument("dimension must be >= 2");
  const double d = static_cast<double>(dim);
  if (!(purity_value > 1.0 / d)) throw PurityFloor("modified purification needs p > 1/D");
  MitigationRecord r;
  r.method = Method::ModifiedPurification;
  const double f = std::sqrt((d - 1.0) / (d * purity_value - 1.0));
  r.estimate = expectation * f;
  // d/dp of f = -(D/2) f / (D p - 1)
  const double dfdp = -0.5 * d * f / (d * purity_value - 1.0);
  r.spread = std::hypot(f * expectation_spread, expectation * dfdp * purity_spread);
  r.inputs_digest = detail::digest_of({expectation}, {purity_value});
  return r;
}

/// Every method on one Pauli. VD/ESD and modified purification use fold-1 data.
inline std::vector<MitigationRecord> mitigate_all(const FoldSeries& s, std::uint64_t pauli) {
  s.validate();
  const std::string name = PauliString(s.num_qubits, pauli).str();
  std::vector<MitigationRecord> out;
  out.push_back(raw_record(s, pauli));
  out.push_back(zne_estimate(s, pauli));
  out.push_back(pzne_estimate(s, pauli, PzneTarget::FoldHalf));
  out.push_back(pzne_estimate(s, pauli, PzneTarget::PurityZero));
  out.push_back(pzne_estimate(s, pauli, PzneTarget::PurityFit));
  const double o1 = s.expectations.front().at(pauli), p1 = s.purities.front();
  const double so = s.spreads_of(pauli).front(), sp = s.purity_spreads().front();
  auto scalar = [&](Method m, const std::function<MitigationRecord()>& f) {
    try {
      auto r = f();
      r.pauli = name;
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      MitigationRecord r;
      r.method = m;
      r.pauli = name;
      r.failed = true;
      r.flags = e.what();
      r.inputs_digest = detail::digest_of({o1}, {p1});
      out.push_back(std::move(r));
    }
  };
  scalar(Method::ModifiedPurification, [&] {
    return modified_purification_estimate(o1, p1, static_cast<int>(hilbert_dim(s.num_qubits)), so, sp);
  });
  scalar(Method::VdEsd, [&] { return vd_esd_estimate(o1, p1, so, sp); });
  return out;
}

/// O = sum_i O_i P_i with O_i = Tr(O P_i)/D; zero terms dropped.
inline std::vector<std::pair<PauliString, double>> task_decompose(const Matrix& o) {
  if (o.rows() != o.cols()) throw InvalidArgument("observable must be square");
  if ((o - o.adjoint()).cwiseAbs().maxCoeff() > 1e-10) throw InvalidArgument("observable must be Hermitian");
  int n = 0;
  while ((Eigen::Index{1} << n) < o.rows()) ++n;
  if ((Eigen::Index{1} << n) != o.rows()) throw InvalidArgument("observable dimension is not 2^L");
  check_qubit_count(n);
  std::vector<std::pair<PauliString, double>> terms;
  for (std::uint64_t i = 0; i < num_paulis(n); ++i) {
    const PauliString p(n, i);
    const double c = (pauli_matrix(p) * o).trace().real() / static_cast<double>(o.rows());
    if (std::abs(c) > 1e-14) terms.emplace_back(p, c);
  }
  return terms;
}

/// sum_i c_i estimate_i with spreads added in quadrature.
inline MitigationRecord recombine(const std::vector<std::pair<double, MitigationRecord>>& terms) {
  if (terms.empty()) throw InvalidArgument("nothing to recombine");
  MitigationRecord r;
  r.method = terms.front().second.method;
  r.estimate = 0.0;
  double var = 0.0;
  std::vector<double> coeffs, ests;
  for (const auto& [c, rec] : terms) {
    if (rec.method != r.method) throw InvalidArgument("recombine: records use different methods");
    if (!r.pauli.empty()) r.pauli += "+";
    r.pauli += rec.pauli;
    if (rec.failed) {
      r.failed = true;
      r.flags = "term " + rec.pauli + " failed: " + rec.flags;
    }
    r.estimate += c * rec.estimate;
    var += c * c * rec.spread * rec.spread;
    coeffs.push_back(c);
    ests.push_back(rec.estimate);
  }
  if (r.failed) r.estimate = std::numeric_limits<double>::quiet_NaN();
  r.spread = std::sqrt(var);
  r.inputs_digest = detail::digest_of(coeffs, ests);
  return r;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_records_csv_header(std::ostream& os) {
  os << "method,pauli,estimate,spread,fit_params,residual,failed,flags,digest\n";
}

inline void write_record_csv(std::ostream& os, const MitigationRecord& r) {
  std::string params;
  for (std::size_t i = 0; i < r.fit_params.size(); ++i) {
    if (i) params += ';';
    params += format_double(r.fit_params[i]);
  }
  std::string flags = r.flags;
  for (char& c : flags) {
    if (c == ',' || c == '\n' || c == '"') c = ' ';
  }
  os << to_string(r.method) << ',' << r.pauli << ',' << format_double(r.estimate) << ',' << format_double(r.spread)
     << ',' << params << ',' << format_double(r.residual) << ',' << (r.failed ? 1 : 0) << ',' << flags << ','
     << r.inputs_digest << '\n';
}

}  // namespace pzne
