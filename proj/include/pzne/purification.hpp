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

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "pzne/density.hpp"
#include "pzne/error.hpp"
#include "pzne/pauli.hpp"

namespace pzne {

namespace detail {

inline Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline double top_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

}  // namespace detail

// 3 rho^2 - 2 rho^3. The trace drifts on mixed inputs, so the result is left
// unnormalized; mcweeny_purify renormalizes between steps.
inline DensityMatrix mcweeny_step(const DensityMatrix& rho) {
  const Matrix& r = rho.matrix();
  const Matrix r2 = r * r;
  const Matrix out = 3.0 * r2 - 2.0 * r2 * r;
  return DensityMatrix(DensityMatrix::Unchecked{}, rho.num_qubits(), detail::hermitize(out));
}

struct PurificationResult {
  DensityMatrix state;
  bool converged = false;
  int iterations = 0;
};

inline PurificationResult mcweeny_purify(const DensityMatrix& rho, int max_iter = 200, double tol = 1e-12) {
  if (max_iter < 1) throw InvalidArgument("mcweeny_purify: max_iter must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("mcweeny_purify: tol must be positive");
  auto idempotency_gap = [](const Matrix& m) { return (m * m - m).norm(); };
  if (idempotency_gap(rho.matrix()) < tol) return {rho, true, 0};
  // no eigenvalue above 1/2: the iteration flows to the mixed fixed point
  if (detail::top_eigenvalue(rho.matrix()) <= 0.5 + tol) return {rho, false, 0};

  Matrix cur = rho.matrix();
  for (int it = 1; it <= max_iter; ++it) {
    const Matrix c2 = cur * cur;
    Matrix next = detail::hermitize(3.0 * c2 - 2.0 * c2 * cur);
    const double tr = next.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) break;
    next /= tr;
    cur = std::move(next);
    if (idempotency_gap(cur) < tol) {
      return {DensityMatrix(DensityMatrix::Unchecked{}, rho.num_qubits(), cur), true, it};
    }
  }
  return {DensityMatrix(DensityMatrix::Unchecked{}, rho.num_qubits(), cur), false, max_iter};
}

// rho^M / Tr rho^M, through the eigendecomposition
inline DensityMatrix power_purify(const DensityMatrix& rho, int m) {
  if (m < 1) throw InvalidArgument("power_purify: M must be >= 1");
  if (m == 1) return rho;
  Eigen::SelfAdjointEigenSolver<Matrix> es(detail::hermitize(rho.matrix()));
  Eigen::VectorXd p = es.eigenvalues();
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std::pow(std::max(0.0, p(i)), m);
  const double z = p.sum();
  if (!(z > 0.0)) throw InvalidArgument("power_purify: rho^M has zero trace");
  const Matrix& v = es.eigenvectors();
  Matrix out = v * (p / z).cast<Complex>().asDiagonal() * v.adjoint();
  return DensityMatrix(DensityMatrix::Unchecked{}, rho.num_qubits(), detail::hermitize(out));
}

struct ClosestPureState {
  DensityMatrix state;
  Eigen::VectorXcd vector;
  double top_eigenvalue = 0.0;
  bool degenerate = false;
};

inline constexpr double kDegeneracyTol = 1e-10;

// projector onto the top eigenvector. In a degenerate top eigenspace the vector
// is the projection of the lowest-index basis state with nonzero overlap.
inline ClosestPureState closest_pure_state(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(detail::hermitize(rho.matrix()));
  const auto& ev = es.eigenvalues();
  const Eigen::Index n = ev.size();
  const double top = ev(n - 1);
  Eigen::Index first = n - 1;
  while (first > 0 && top - ev(first - 1) <= kDegeneracyTol) --first;
  const Eigen::Index mult = n - first;

  Eigen::VectorXcd psi;
  if (mult == 1) {
    psi = es.eigenvectors().col(n - 1);
  } else {
    const Matrix basis = es.eigenvectors().rightCols(mult);
    const Matrix proj = basis * basis.adjoint();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (proj.col(k).norm() > 1e-6) {
        psi = proj.col(k);
        break;
      }
    }
  }
  psi.normalize();
  // fix the global phase: largest-magnitude component real positive
  Eigen::Index arg = 0;
  psi.cwiseAbs().maxCoeff(&arg);
  psi *= std::conj(psi(arg)) / std::abs(psi(arg));
  ClosestPureState out{DensityMatrix::from_state_vector(psi), psi, top, mult > 1};
  return out;
}

// D^2(rho, psi) = Tr rho^2 + 1 - 2 <psi|rho|psi>
inline double pure_state_distance_sq(const DensityMatrix& rho, const Eigen::VectorXcd& psi) {
  if (psi.size() != rho.dim()) throw InvalidArgument("pure_state_distance_sq: dimension mismatch");
  const Eigen::VectorXcd u = psi.normalized();
  const double f = (u.adjoint() * rho.matrix() * u)(0, 0).real();
  return purity(rho) + 1.0 - 2.0 * f;
}

}  // namespace pzne
