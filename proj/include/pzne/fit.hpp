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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pzne/error.hpp"

namespace pzne {

enum class FitModel { Constant, Exponential, MultiExponential, PowerLaw };

inline const char* to_string(FitModel m) {
  switch (m) {
    case FitModel::Constant: return "constant";
    case FitModel::Exponential: return "exponential";
    case FitModel::MultiExponential: return "multi_exponential";
    case FitModel::PowerLaw: return "power_law";
  }
  return "?";
}

/// Parameter layouts:
///   Exponential       y = A exp(-k x) + B          -> {A, k, B}
///   MultiExponential  y = sum_i A_i exp(-k_i x) + C -> {A_1, k_1, ..., C}
///   PowerLaw          y = A |x|^k + C              -> {A, k, C}
///   Constant          y = C                        -> {0, 0, C}
struct FitResult {
  FitModel model = FitModel::Constant;
  std::vector<double> params;
  double residual = 0.0;  // ||model - data||_2
  bool converged = false;
  int iterations = 0;
  std::string message;

  double evaluate(double x) const {
    switch (model) {
      case FitModel::Constant: return params.back();
      case FitModel::Exponential: return params[0] * std::exp(-params[1] * x) + params[2];
      case FitModel::MultiExponential: {
        double y = params.back();
        for (std::size_t i = 0; i + 1 < params.size(); i += 2) y += params[i] * std::exp(-params[i + 1] * x);
        return y;
      }
      case FitModel::PowerLaw: return params[0] * std::pow(std::abs(x), params[1]) + params[2];
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

struct FitOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-10;
  double flat_tolerance = 1e-9;  // relative data range treated as constant
};

namespace detail {

/// f(params, x, grad) returns the model value and fills d/dparams.
using ModelFn = std::function<double(const Eigen::VectorXd&, double, Eigen::Ref<Eigen::VectorXd>)>;

struct LmOutcome {
  Eigen::VectorXd params;
  double sse = 0.0;
  bool converged = false;
  int iterations = 0;
};

inline double sum_squares(const ModelFn& f, const Eigen::VectorXd& p, std::span<const double> x,
                          std::span<const double> y) {
  Eigen::VectorXd g(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = f(p, x[i], g) - y[i];
    s += r * r;
  }
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt scaling).
inline LmOutcome levenberg_marquardt(const ModelFn& f, std::span<const double> x, std::span<const double> y,
                                     Eigen::VectorXd p, const FitOptions& opt) {
  const auto m = static_cast<Eigen::Index>(x.size());
  const Eigen::Index np = p.size();
  Eigen::MatrixXd jac(m, np);
  Eigen::VectorXd res(m), grad_row(np);
  auto linearize = [&](const Eigen::VectorXd& q) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      res(i) = f(q, x[i], grad_row) - y[i];
      jac.row(i) = grad_row.transpose();
      s += res(i) * res(i);
    }
    return s;
  };
  double sse = linearize(p);
  double mu = 1e-3;
  LmOutcome out{p, sse, false, 0};
  if (!std::isfinite(sse)) return out;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    out.iterations = it;
    const Eigen::VectorXd g = jac.transpose() * res;
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance || sse < 1e-30) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index k = 0; k < np; ++k) a(k, k) += mu * std::max(jtj(k, k), 1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      if (!step.allFinite()) {
        mu *= 4.0;
        continue;
      }
      const Eigen::VectorXd trial = p + step;
      const double s = sum_squares(f, trial, x, y);
      if (s < sse) {
        const double rel = step.norm() / (p.norm() + 1e-12);
        p = trial;
        const double prev = sse;
        sse = linearize(p);
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
        if (rel < 1e-15 || prev - sse <= 1e-30 * prev) {
          out.converged = true;
        }
      } else {
        mu *= 2.0;
      }
    }
    if (!accepted) {
      // no descent direction left: a stationary point up to rounding
      out.converged = (jac.transpose() * res).lpNorm<Eigen::Infinity>() < 1e-6;
      break;
    }
    if (out.converged) break;
  }
  out.params = p;
  out.sse = sse;
  return out;
}

/// Least squares for the linear coefficients of fixed basis columns.
inline Eigen::VectorXd linear_coefficients(const Eigen::MatrixXd& basis, std::span<const double> y) {
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  return basis.colPivHouseholderQr().solve(yv);
}

inline void check_points(std::span<const double> x, std::span<const double> y, std::size_t min_points) {
  if (x.size() != y.size()) throw InvalidArgument("fit: x and y lengths differ");
  if (x.size() < min_points) {
    throw InvalidArgument("fit needs at least " + std::to_string(min_points) + " points, got " +
                          std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw InvalidArgument("fit: non-finite data");
  }
}

inline bool is_flat(std::span<const double> y, double tol) {
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double scale = std::max(std::abs(*lo), std::abs(*hi));
  return *hi - *lo <= tol * std::max(scale, 1e-300);
}

inline FitResult constant_fit(std::span<const double> y) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double sse = 0.0;
  for (double v : y) sse += (v - mean) * (v - mean);
  FitResult r;
  r.model = FitModel::Constant;
  r.params = {0.0, 0.0, mean};
  r.residual = std::sqrt(sse);
  r.converged = true;
  r.message = "flat data";
  return r;
}

inline double exp_model(const Eigen::VectorXd& p, double x, Eigen::Ref<Eigen::VectorXd> g) {
  const double e = std::exp(-p(1) * x);
  g(0) = e;
  g(1) = -p(0) * x * e;
  g(2) = 1.0;
  return p(0) * e + p(2);
}

inline double power_model(const Eigen::VectorXd& p, double x, Eigen::Ref<Eigen::VectorXd> g) {
  const double ax = std::abs(x);
  const double e = std::pow(ax, p(1));
  g(0) = e;
  g(1) = p(0) * e * std::log(ax);
  g(2) = 1.0;
  return p(0) * e + p(2);
}

/// Multi-start: seed LM from the best linear-projection starts, keep the best.
inline FitResult best_of(const ModelFn& f, std::span<const double> x, std::span<const double> y,
                         std::vector<Eigen::VectorXd> starts, FitModel model, const FitOptions& opt) {
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (starts[i].allFinite()) ranked.emplace_back(sum_squares(f, starts[i], x, y), i);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  FitResult best;
  best.model = model;
  best.residual = std::numeric_limits<double>::infinity();
  const std::size_t tries = std::min<std::size_t>(ranked.size(), 4);
  for (std::size_t t = 0; t < tries; ++t) {
    const auto out = levenberg_marquardt(f, x, y, starts[ranked[t].second], opt);
    const double resid = std::sqrt(out.sse);
    if (resid < best.residual || (!best.converged && out.converged && resid <= best.residual * (1 + 1e-12))) {
      best.params.assign(out.params.data(), out.params.data() + out.params.size());
      best.residual = resid;
      best.converged = out.converged;
      best.iterations = out.iterations;
    }
  }
  if (!std::isfinite(best.residual)) {
    best.converged = false;
    best.message = "no finite start";
  }
  return best;
}

}  // namespace detail

/// y = A exp(-k x) + B.
inline FitResult fit_exponential(std::span<const double> x, std::span<const double> y, const FitOptions& opt = {}) {
  detail::check_points(x, y, 3);
  if (detail::is_flat(y, opt.flat_tolerance)) return detail::constant_fit(y);
  const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
  const double span = *xhi - *xlo;
  if (!(span > 0.0)) throw InvalidArgument("fit_exponential: all x equal");
  std::vector<Eigen::VectorXd> starts;
  // exact interpolation for three equally spaced points
  if (x.size() == 3 && std::abs((x[2] - x[1]) - (x[1] - x[0])) < 1e-12 * span) {
    const double d1 = y[1] - y[0], d2 = y[2] - y[1];
    if (d1 != 0.0 && d2 / d1 > 0.0 && std::abs(d2 / d1 - 1.0) > 1e-12) {
      const double h = x[1] - x[0];
      const double r = d2 / d1;
      const double k = -std::log(r) / h;
      const double a = d1 / (std::exp(-k * x[0]) * (r - 1.0));
      const double b = (y[0] * y[2] - y[1] * y[1]) / (y[0] + y[2] - 2.0 * y[1]);
      starts.push_back((Eigen::VectorXd(3) << a, k, b).finished());
    }
  }
  const double grid[] = {-2.0, -1.0, -0.3, 0.02, 0.1, 0.3, 0.6, 1.0, 1.5, 2.5, 4.0, 7.0, 12.0};
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(x.size()), 2);
  for (double g : grid) {
    const double k = g / span;
    for (std::size_t i = 0; i < x.size(); ++i) {
      basis(static_cast<Eigen::Index>(i), 0) = std::exp(-k * (x[i] - *xlo));
      basis(static_cast<Eigen::Index>(i), 1) = 1.0;
    }
    const Eigen::VectorXd c = detail::linear_coefficients(basis, y);
    starts.push_back((Eigen::VectorXd(3) << c(0) * std::exp(k * *xlo), k, c(1)).finished());
  }
  FitResult r = detail::best_of(detail::exp_model, x, y, std::move(starts), FitModel::Exponential, opt);
  if (r.converged && std::abs(r.params[1] * span) > 60.0) {
    r.converged = false;
    r.message = "degenerate decay rate";
  }
  return r;
}

/// y = sum_i A_i exp(-k_i x) + C with `terms` exponentials.
inline FitResult fit_multi_exponential(std::span<const double> x, std::span<const double> y, int terms,
                                       const FitOptions& opt = {}) {
  if (terms < 1) throw InvalidArgument("terms must be >= 1");
  if (x.size() < static_cast<std::size_t>(2 * terms + 1)) {
    throw InvalidArgument("multi-exponential fit with " + std::to_string(terms) + " terms needs at least " +
                          std::to_string(2 * terms + 1) + " points");
  }
  if (terms == 1) {
    FitResult r = fit_exponential(x, y, opt);
    if (r.model == FitModel::Exponential) r.model = FitModel::MultiExponential;
    return r;
  }
  detail::check_points(x, y, static_cast<std::size_t>(2 * terms + 1));
  if (detail::is_flat(y, opt.flat_tolerance)) return detail::constant_fit(y);
  const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
  const double span = *xhi - *xlo;
  const int np = 2 * terms + 1;
  detail::ModelFn f = [terms](const Eigen::VectorXd& p, double xv, Eigen::Ref<Eigen::VectorXd> g) {
    double v = p(2 * terms);
    for (int t = 0; t < terms; ++t) {
      const double e = std::exp(-p(2 * t + 1) * xv);
      g(2 * t) = e;
      g(2 * t + 1) = -p(2 * t) * xv * e;
      v += p(2 * t) * e;
    }
    g(2 * terms) = 1.0;
    return v;
  };
  const std::vector<double> grid = {0.05, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<Eigen::VectorXd> starts;
  std::vector<int> pick(static_cast<std::size_t>(terms), 0);
  // increasing index tuples over the grid
  std::function<void(int, int)> rec = [&](int depth, int from) {
    if (depth == terms) {
      Eigen::MatrixXd basis(static_cast<Eigen::Index>(x.size()), terms + 1);
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (int t = 0; t < terms; ++t) {
          basis(static_cast<Eigen::Index>(i), t) = std::exp(-grid[pick[t]] / span * (x[i] - *xlo));
        }
        basis(static_cast<Eigen::Index>(i), terms) = 1.0;
      }
      const Eigen::VectorXd c = detail::linear_coefficients(basis, y);
      Eigen::VectorXd p(np);
      for (int t = 0; t < terms; ++t) {
        const double k = grid[pick[t]] / span;
        p(2 * t) = c(t) * std::exp(k * *xlo);
        p(2 * t + 1) = k;
      }
      p(2 * terms) = c(terms);
      starts.push_back(p);
      return;
    }
    for (int i = from; i < static_cast<int>(grid.size()); ++i) {
      pick[static_cast<std::size_t>(depth)] = i;
      rec(depth + 1, i + 1);
    }
  };
  rec(0, 0);
  return detail::best_of(f, x, y, std::move(starts), FitModel::MultiExponential, opt);
}

/// p = A |O|^k + C. All O must be nonzero and share a sign.
inline FitResult fit_purity_vs_expectation(std::span<const double> o, std::span<const double> p,
                                           const FitOptions& opt = {}) {
  detail::check_points(o, p, 3);
  const bool positive = o[0] > 0.0;
  for (double v : o) {
    if (v == 0.0 || (v > 0.0) != positive) {
      throw InvalidArgument("purity fit needs nonzero expectations of one sign");
    }
  }
  if (detail::is_flat(p, opt.flat_tolerance)) return detail::constant_fit(p);
  std::vector<double> ao(o.size());
  for (std::size_t i = 0; i < o.size(); ++i) ao[i] = std::abs(o[i]);
  if (detail::is_flat(ao, opt.flat_tolerance)) {
    throw InvalidArgument("purity fit needs distinct expectation values");
  }
  const double grid[] = {0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0};
  std::vector<Eigen::VectorXd> starts;
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(o.size()), 2);
  for (double k : grid) {
    for (std::size_t i = 0; i < ao.size(); ++i) {
      basis(static_cast<Eigen::Index>(i), 0) = std::pow(ao[i], k);
      basis(static_cast<Eigen::Index>(i), 1) = 1.0;
    }
    const Eigen::VectorXd c = detail::linear_coefficients(basis, p);
    starts.push_back((Eigen::VectorXd(3) << c(0), k, c(1)).finished());
  }
  return detail::best_of(detail::power_model, ao, p, std::move(starts), FitModel::PowerLaw, opt);
}

}  // namespace pzne
