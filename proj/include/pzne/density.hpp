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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pzne/error.hpp"
#include "pzne/pauli.hpp"

namespace pzne {

/// Dense 2^L x 2^L state. Construction checks shape, Hermiticity and unit
/// trace; positivity is checked only on request (validate_psd) since it
/// needs an eigendecomposition.
class DensityMatrix {
 public:
  static constexpr double kHermitianTolerance = 1e-10;
  static constexpr double kTraceTolerance = 1e-10;
  static constexpr double kPsdSlack = -1e-9;

  struct Unchecked {};

  DensityMatrix(int num_qubits, Matrix data) : num_qubits_(num_qubits), data_(std::move(data)) {
    check_qubit_count(num_qubits);
    check_shape();
    const double herm = (data_ - data_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > kHermitianTolerance) {
      throw InvalidArgument("density matrix not Hermitian (max deviation " + std::to_string(herm) + ")");
    }
    const Complex tr = data_.trace();
    if (std::abs(tr - Complex{1.0, 0.0}) > kTraceTolerance) {
      throw InvalidArgument("density matrix trace " + std::to_string(tr.real()) + " != 1");
    }
  }

  /// Skips validation; for results of operations that preserve the invariants.
  DensityMatrix(Unchecked, int num_qubits, Matrix data)
      : num_qubits_(num_qubits), data_(std::move(data)) {}

  static DensityMatrix basis_state(int num_qubits, std::uint64_t bits) {
    check_qubit_count(num_qubits);
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(num_qubits));
    if (bits >= static_cast<std::uint64_t>(dim)) throw InvalidArgument("basis state out of range");
    Matrix m = Matrix::Zero(dim, dim);
    m(static_cast<Eigen::Index>(bits), static_cast<Eigen::Index>(bits)) = 1.0;
    return DensityMatrix(Unchecked{}, num_qubits, std::move(m));
  }

  static DensityMatrix maximally_mixed(int num_qubits) {
    check_qubit_count(num_qubits);
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(num_qubits));
    return DensityMatrix(Unchecked{}, num_qubits,
                         Matrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  static DensityMatrix from_state_vector(const Eigen::VectorXcd& psi) {
    const double norm = psi.norm();
    if (norm == 0.0) throw InvalidArgument("zero state vector");
    int n = 0;
    while ((Eigen::Index{1} << n) < psi.size()) ++n;
    if ((Eigen::Index{1} << n) != psi.size()) throw InvalidArgument("state vector length not 2^L");
    const Eigen::VectorXcd v = psi / norm;
    return DensityMatrix(n, v * v.adjoint());
  }

  int num_qubits() const noexcept { return num_qubits_; }
  Eigen::Index dim() const noexcept { return data_.rows(); }
  const Matrix& matrix() const noexcept { return data_; }

  /// Smallest eigenvalue must be >= -1e-9.
  void validate_psd() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(data_, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo < kPsdSlack) {
      throw InvalidArgument("density matrix not positive semidefinite (eigenvalue " +
                            std::to_string(lo) + ")");
    }
  }

 private:
  void check_shape() const {
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(num_qubits_));
    if (data_.rows() != dim || data_.cols() != dim) {
      throw InvalidArgument("density matrix must be " + std::to_string(dim) + "x" + std::to_string(dim));
    }
  }

  int num_qubits_;
  Matrix data_;
};

/// rho = (1/D) sum_i coeffs[i] P_i with coeffs[i] = Tr(P_i rho).
struct PauliCoefficients {
  int num_qubits = 0;
  std::vector<double> coeffs;

  /// Tr rho^2 = (1/D) sum_i coeffs[i]^2.
  double purity() const {
    double s = 0.0;
    for (double c : coeffs) s += c * c;
    return s / static_cast<double>(hilbert_dim(num_qubits));
  }

  DensityMatrix reconstruct() const {
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(num_qubits));
    Matrix m = Matrix::Zero(dim, dim);
    for (std::uint64_t i = 0; i < coeffs.size(); ++i) {
      if (coeffs[i] != 0.0) m += coeffs[i] * pauli_matrix(PauliString(num_qubits, i));
    }
    return DensityMatrix(num_qubits, m / static_cast<double>(dim));
  }
};

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
  if (u.rows() != u.cols()) return false;
  const Matrix id = Matrix::Identity(u.rows(), u.cols());
  return (u.adjoint() * u - id).cwiseAbs().maxCoeff() <= tol;
}

inline DensityMatrix apply_unitary(const DensityMatrix& rho, const Matrix& u) {
  if (u.rows() != rho.dim() || u.cols() != rho.dim()) {
    throw InvalidArgument("unitary dimension does not match state");
  }
  if (!is_unitary(u)) throw InvalidArgument("matrix is not unitary within 1e-10");
  return DensityMatrix(DensityMatrix::Unchecked{}, rho.num_qubits(), u * rho.matrix() * u.adjoint());
}

/// P rho P for a Pauli string, by permuting entries with phases.
inline Matrix conjugate_by_pauli(const Matrix& m, const PauliString& p) {
  const Eigen::Index dim = m.rows();
  std::vector<std::uint64_t> target(static_cast<std::size_t>(dim));
  std::vector<Complex> phase(static_cast<std::size_t>(dim));
  for (Eigen::Index b = 0; b < dim; ++b) {
    const auto [t, ph] = pauli_apply_basis(p, static_cast<std::uint64_t>(b));
    target[b] = t;
    phase[b] = ph;
  }
  Matrix out(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    for (Eigen::Index b = 0; b < dim; ++b) {
      out(static_cast<Eigen::Index>(target[a]), static_cast<Eigen::Index>(target[b])) =
          phase[a] * m(a, b) * std::conj(phase[b]);
    }
  }
  return out;
}

inline DensityMatrix apply_pauli_channel(const DensityMatrix& rho, const PauliChannel& ch) {
  if (ch.num_qubits() != rho.num_qubits()) {
    throw InvalidArgument("channel acts on " + std::to_string(ch.num_qubits()) + " qubits, state has " +
                          std::to_string(rho.num_qubits()));
  }
  const auto q = ch.probabilities();
  Matrix out = Matrix::Zero(rho.dim(), rho.dim());
  for (std::uint64_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    out += q[i] * conjugate_by_pauli(rho.matrix(), PauliString(rho.num_qubits(), i));
  }
  return DensityMatrix(DensityMatrix::Unchecked{}, rho.num_qubits(), std::move(out));
}

/// Tr(P rho), computed from the nonzero pattern of P.
inline double expectation(const DensityMatrix& rho, const PauliString& p) {
  if (p.num_qubits() != rho.num_qubits()) throw InvalidArgument("Pauli length does not match state");
  Complex s{0.0, 0.0};
  for (Eigen::Index b = 0; b < rho.dim(); ++b) {
    const auto [t, ph] = pauli_apply_basis(p, static_cast<std::uint64_t>(b));
    // Tr(P rho) = sum_b <b|P rho|b> = sum_{b} sum_c P_{b c} rho_{c b}, P_{t,b} = ph
    s += ph * rho.matrix()(b, static_cast<Eigen::Index>(t));
  }
  return s.real();
}

inline double purity(const DensityMatrix& rho) {
  // Tr(rho^2) = sum_ab |rho_ab|^2 for Hermitian rho.
  return rho.matrix().cwiseAbs2().sum();
}

inline PauliCoefficients pauli_decompose(const DensityMatrix& rho) {
  PauliCoefficients out{rho.num_qubits(), std::vector<double>(num_paulis(rho.num_qubits()))};
  for (std::uint64_t i = 0; i < out.coeffs.size(); ++i) {
    out.coeffs[i] = expectation(rho, PauliString(rho.num_qubits(), i));
  }
  return out;
}

/// Re Tr(a b).
inline double overlap(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("overlap: dimension mismatch");
  return (a.matrix().transpose().cwiseProduct(b.matrix())).sum().real();
}

/// Reduced state on the listed qubits (kept in the given order: keep[0]
/// becomes qubit 0 of the result).
inline DensityMatrix reduced_state(const DensityMatrix& rho, const std::vector<int>& keep) {
  const int n = rho.num_qubits();
  const int k = static_cast<int>(keep.size());
  check_qubit_count(k);
  std::uint64_t keep_mask = 0;
  for (int q : keep) {
    if (q < 0 || q >= n || ((keep_mask >> q) & 1u)) throw InvalidArgument("reduced_state: bad qubit list");
    keep_mask |= std::uint64_t{1} << q;
  }
  const auto rdim = static_cast<Eigen::Index>(hilbert_dim(k));
  Matrix out = Matrix::Zero(rdim, rdim);
  auto local = [&](std::uint64_t b) {
    std::uint64_t r = 0;
    for (int i = 0; i < k; ++i) r |= ((b >> keep[i]) & 1u) << i;
    return static_cast<Eigen::Index>(r);
  };
  for (Eigen::Index a = 0; a < rho.dim(); ++a) {
    for (Eigen::Index b = 0; b < rho.dim(); ++b) {
      if ((static_cast<std::uint64_t>(a) & ~keep_mask) != (static_cast<std::uint64_t>(b) & ~keep_mask)) continue;
      out(local(a), local(b)) += rho.matrix()(a, b);
    }
  }
  return DensityMatrix(DensityMatrix::Unchecked{}, k, std::move(out));
}

/// Tensor product with `a` on the low qubits and `b` on the high qubits.
inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  check_qubit_count(a.num_qubits() + b.num_qubits());
  const Matrix& ma = a.matrix();
  const Matrix& mb = b.matrix();
  const Eigen::Index da = ma.rows();
  Matrix m(da * mb.rows(), da * mb.rows());
  for (Eigen::Index i = 0; i < mb.rows(); ++i) {
    for (Eigen::Index j = 0; j < mb.cols(); ++j) m.block(i * da, j * da, da, da) = mb(i, j) * ma;
  }
  return DensityMatrix(DensityMatrix::Unchecked{}, a.num_qubits() + b.num_qubits(), std::move(m));
}

}  // namespace pzne
