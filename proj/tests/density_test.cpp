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

#include <random>

#include "pzne/density.hpp"
#include "pzne/noise.hpp"

namespace pzne {
namespace {

DensityMatrix random_state(int n, std::mt19937_64& rng, int rank = 0) {
  std::normal_distribution<double> g(0.0, 1.0);
  const auto dim = static_cast<Eigen::Index>(hilbert_dim(n));
  const Eigen::Index r = rank > 0 ? rank : dim;
  Matrix a(dim, r);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) a(i, j) = Complex(g(rng), g(rng));
  }
  Matrix m = a * a.adjoint();
  m /= m.trace();
  m = (m + m.adjoint()) / 2.0;
  return DensityMatrix(n, m);
}

PauliChannel random_channel(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> q(num_paulis(n));
  double s = 0;
  for (auto& v : q) s += (v = u(rng));
  for (auto& v : q) v /= s;
  return PauliChannel(n, q);
}

Matrix bell_circuit() {
  const double r = 1.0 / std::sqrt(2.0);
  Matrix h(2, 2);
  h << r, r, r, -r;
  Matrix h0 = Matrix::Zero(4, 4);  // H on qubit 0 = kron(I, H) little-endian
  h0.block(0, 0, 2, 2) = h;
  h0.block(2, 2, 2, 2) = h;
  Matrix cnot = Matrix::Zero(4, 4);
  cnot(0, 0) = cnot(3, 1) = cnot(2, 2) = cnot(1, 3) = 1;
  return cnot * h0;
}

TEST(DensityMatrix, ValidatesInput) {
  EXPECT_THROW(DensityMatrix(1, Matrix::Identity(2, 2)), InvalidArgument);
  EXPECT_THROW(DensityMatrix(1, Matrix::Identity(4, 4) / 4.0), InvalidArgument);
  Matrix nh = Matrix::Identity(2, 2) / 2.0;
  nh(0, 1) = 0.1;
  EXPECT_THROW(DensityMatrix(1, nh), InvalidArgument);
  Matrix neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  const DensityMatrix d(1, neg);
  EXPECT_THROW(d.validate_psd(), InvalidArgument);
  EXPECT_NO_THROW(DensityMatrix::basis_state(2, 3).validate_psd());
  EXPECT_THROW(DensityMatrix::maximally_mixed(5), InvalidArgument);
}

TEST(ApplyUnitary, Examples) {
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  EXPECT_TRUE(apply_unitary(DensityMatrix::basis_state(1, 0), x).matrix().isApprox(DensityMatrix::basis_state(1, 1).matrix()));
  std::mt19937_64 rng(3);
  const Matrix any = Eigen::HouseholderQR<Matrix>(random_state(1, rng).matrix() + Matrix::Identity(2, 2)).householderQ();
  EXPECT_TRUE(apply_unitary(DensityMatrix::maximally_mixed(1), any).matrix().isApprox(Matrix::Identity(2, 2) / 2.0));
  const auto bell = apply_unitary(DensityMatrix::basis_state(2, 0), bell_circuit());
  Matrix expected = Matrix::Zero(4, 4);
  expected(0, 0) = expected(0, 3) = expected(3, 0) = expected(3, 3) = 0.5;
  EXPECT_LT((bell.matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(apply_unitary(DensityMatrix::basis_state(1, 0), Matrix::Identity(2, 2) * 2.0), InvalidArgument);
}

TEST(ApplyUnitary, PreservesPurity) {
  std::mt19937_64 rng(4);
  const auto rho = random_state(2, rng, 2);
  const Matrix u = bell_circuit();
  EXPECT_NEAR(purity(apply_unitary(rho, u)), purity(rho), 1e-10);
}

TEST(ApplyPauliChannel, DepolarizingOnZeroState) {
  const double e = 0.05 / 3;
  const PauliChannel ch(1, {0.95, e, e, e});
  const auto out = apply_pauli_channel(DensityMatrix::basis_state(1, 0), ch);
  EXPECT_NEAR(out.matrix()(0, 0).real(), 1 - 0.1 / 3, 1e-12);
  EXPECT_NEAR(out.matrix()(1, 1).real(), 0.1 / 3, 1e-12);
  EXPECT_NEAR(std::abs(out.matrix()(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(expectation(out, PauliString::from_letters("Z")), 0.933333, 1e-6);
  EXPECT_NEAR(purity(out), 0.935556, 1e-6);
  const auto same = apply_pauli_channel(DensityMatrix::basis_state(1, 0), PauliChannel::identity(1));
  EXPECT_TRUE(same.matrix().isApprox(DensityMatrix::basis_state(1, 0).matrix()));
  EXPECT_THROW(apply_pauli_channel(DensityMatrix::basis_state(2, 0), ch), InvalidArgument);
}

TEST(ApplyPauliChannel, MatchesKrausSum) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rho = random_state(2, rng);
    const auto ch = random_channel(2, rng);
    Matrix expected = Matrix::Zero(4, 4);
    for (std::uint64_t i = 0; i < 16; ++i) {
      const Matrix p = pauli_matrix(PauliString(2, i));
      expected += ch.probability(i) * p * rho.matrix() * p;
    }
    EXPECT_LT((apply_pauli_channel(rho, ch).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ApplyPauliChannel, DiagonalInPauliCoefficients) {
  std::mt19937_64 rng(6);
  for (int n = 1; n <= 2; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto rho = random_state(n, rng);
      const auto ch = random_channel(n, rng);
      const auto out = apply_pauli_channel(rho, ch);
      const auto before = pauli_decompose(rho);
      const auto after = pauli_decompose(out);
      const auto chi = channel_eigenvalues(ch);
      for (std::size_t i = 0; i < chi.size(); ++i) EXPECT_NEAR(after.coeffs[i], chi[i] * before.coeffs[i], 1e-10);
      EXPECT_LE(purity(out), purity(rho) + 1e-10);
      EXPECT_NEAR(out.matrix().trace().real(), 1.0, 1e-12);
      EXPECT_LT((out.matrix() - out.matrix().adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Expectation, Examples) {
  EXPECT_DOUBLE_EQ(expectation(DensityMatrix::basis_state(1, 0), PauliString::from_letters("Z")), 1.0);
  EXPECT_DOUBLE_EQ(expectation(DensityMatrix::maximally_mixed(1), PauliString::from_letters("Z")), 0.0);
  std::mt19937_64 rng(8);
  const auto rho = random_state(2, rng);
  for (std::uint64_t i = 0; i < 16; ++i) {
    const PauliString p(2, i);
    EXPECT_NEAR(expectation(rho, p), (pauli_matrix(p) * rho.matrix()).trace().real(), 1e-12);
  }
}

TEST(Purity, Examples) {
  EXPECT_NEAR(purity(DensityMatrix::basis_state(2, 1)), 1.0, 1e-15);
  EXPECT_NEAR(purity(DensityMatrix::maximally_mixed(2)), 0.25, 1e-15);
  std::mt19937_64 rng(9);
  for (int n = 1; n <= 3; ++n) {
    const auto rho = random_state(n, rng);
    EXPECT_NEAR(purity(rho), pauli_decompose(rho).purity(), 1e-10);
    EXPECT_NEAR(purity(rho), (rho.matrix() * rho.matrix()).trace().real(), 1e-12);
  }
}

TEST(PauliDecompose, Examples) {
  const auto zero = pauli_decompose(DensityMatrix::basis_state(1, 0));
  EXPECT_EQ(zero.coeffs, (std::vector<double>{1, 0, 0, 1}));
  const auto mixed = pauli_decompose(DensityMatrix::maximally_mixed(2));
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(mixed.coeffs[i], i == 0 ? 1.0 : 0.0, 1e-15);
  const auto bell = pauli_decompose(apply_unitary(DensityMatrix::basis_state(2, 0), bell_circuit()));
  for (std::size_t i = 0; i < 16; ++i) {
    const auto s = PauliString(2, i).str();
    const double expected = s == "II" || s == "XX" || s == "ZZ" ? 1.0 : s == "YY" ? -1.0 : 0.0;
    EXPECT_NEAR(bell.coeffs[i], expected, 1e-12) << s;
  }
}

TEST(PauliDecompose, ReconstructionIsExact) {
  std::mt19937_64 rng(10);
  for (int n = 1; n <= 3; ++n) {
    const auto rho = random_state(n, rng);
    const auto c = pauli_decompose(rho);
    EXPECT_NEAR(c.coeffs[0], 1.0, 1e-12);
    for (double v : c.coeffs) EXPECT_LE(std::abs(v), 1.0 + 1e-12);
    EXPECT_LT((c.reconstruct().matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ReducedState, ProductStateFactors) {
  std::mt19937_64 rng(11);
  const auto a = random_state(1, rng);
  const auto b = random_state(2, rng);
  const auto ab = tensor(a, b);
  EXPECT_EQ(ab.num_qubits(), 3);
  EXPECT_LT((reduced_state(ab, {0}).matrix() - a.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((reduced_state(ab, {1, 2}).matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  // little-endian: Z on qubit 0 of the product is Z on a
  EXPECT_NEAR(expectation(ab, PauliString::from_letters("ZII")), expectation(a, PauliString::from_letters("Z")), 1e-12);
}

}  // namespace
}  // namespace pzne
