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
#include <complex>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pzne/error.hpp"

namespace pzne {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// Largest register the dense routines accept. Two replicas of a 2-qubit
/// state fit; anything bigger is out of desk scale.
inline constexpr int kMaxQubits = 4;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline std::uint64_t num_paulis(int num_qubits) { return std::uint64_t{1} << (2 * num_qubits); }
inline std::uint64_t hilbert_dim(int num_qubits) { return std::uint64_t{1} << num_qubits; }

inline void check_qubit_count(int num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw InvalidArgument("qubit count " + std::to_string(num_qubits) + " outside [1, " +
                          std::to_string(kMaxQubits) + "]");
  }
}

/// A length-L word over {I, X, Y, Z}.
///
/// The index is the base-4 little-endian encoding with I=0, X=1, Y=2, Z=3
/// and qubit 0 in the least significant digit, so "ZI" (Z on qubit 0) is 3
/// and "IZ" is 12. Text form lists qubit 0 first.
class PauliString {
 public:
  PauliString() = default;

  PauliString(int num_qubits, std::uint64_t index) : num_qubits_(num_qubits), index_(index) {
    check_qubit_count(num_qubits);
    if (index >= num_paulis(num_qubits)) {
      throw InvalidArgument("Pauli index " + std::to_string(index) + " out of range for " +
                            std::to_string(num_qubits) + " qubits");
    }
  }

  static PauliString identity(int num_qubits) { return PauliString(num_qubits, 0); }

  static PauliString single(int num_qubits, int qubit, Pauli p) {
    return identity(num_qubits).with_letter(qubit, p);
  }

  /// Parses "XZI" style text (qubit 0 first); '_' is accepted for I.
  static PauliString from_letters(std::string_view letters) {
    const int n = static_cast<int>(letters.size());
    check_qubit_count(n);
    std::uint64_t index = 0;
    for (int q = 0; q < n; ++q) {
      std::uint64_t digit = 0;
      switch (letters[q]) {
        case 'I': case '_': digit = 0; break;
        case 'X': digit = 1; break;
        case 'Y': digit = 2; break;
        case 'Z': digit = 3; break;
        default:
          throw InvalidArgument("bad Pauli letter '" + std::string(1, letters[q]) + "' in \"" +
                                std::string(letters) + "\"");
      }
      index |= digit << (2 * q);
    }
    return PauliString(n, index);
  }

  int num_qubits() const noexcept { return num_qubits_; }
  std::uint64_t index() const noexcept { return index_; }

  Pauli letter(int qubit) const noexcept {
    return static_cast<Pauli>((index_ >> (2 * qubit)) & 3u);
  }

  PauliString with_letter(int qubit, Pauli p) const {
    if (qubit < 0 || qubit >= num_qubits_) throw InvalidArgument("qubit out of range");
    const std::uint64_t cleared = index_ & ~(std::uint64_t{3} << (2 * qubit));
    return PauliString(num_qubits_, cleared | (std::uint64_t(p) << (2 * qubit)));
  }

  int weight() const noexcept {
    int w = 0;
    for (int q = 0; q < num_qubits_; ++q) w += letter(q) != Pauli::I;
    return w;
  }

  bool is_identity() const noexcept { return index_ == 0; }

  /// Bit q set iff the letter on qubit q flips the computational basis (X or Y).
  std::uint64_t x_mask() const noexcept {
    std::uint64_t m = 0;
    for (int q = 0; q < num_qubits_; ++q) {
      const Pauli l = letter(q);
      if (l == Pauli::X || l == Pauli::Y) m |= std::uint64_t{1} << q;
    }
    return m;
  }

  /// Bit q set iff the letter on qubit q is not I.
  std::uint64_t support_mask() const noexcept {
    std::uint64_t m = 0;
    for (int q = 0; q < num_qubits_; ++q) {
      if (letter(q) != Pauli::I) m |= std::uint64_t{1} << q;
    }
    return m;
  }

  std::string str() const {
    std::string s(num_qubits_, 'I');
    for (int q = 0; q < num_qubits_; ++q) s[q] = "IXYZ"[static_cast<int>(letter(q))];
    return s;
  }

  friend auto operator<=>(const PauliString&, const PauliString&) = default;

 private:
  int num_qubits_ = 0;
  std::uint64_t index_ = 0;
};

/// Pauli product with the phase dropped. With the I/X/Y/Z = 0/1/2/3 digits
/// the product letter is the bitwise XOR of the factors.
inline PauliString operator*(const PauliString& a, const PauliString& b) {
  if (a.num_qubits() != b.num_qubits()) throw InvalidArgument("Pauli length mismatch");
  return PauliString(a.num_qubits(), a.index() ^ b.index());
}

inline int parity_of_indices(std::uint64_t a, std::uint64_t b, int num_qubits) noexcept {
  int sign = 1;
  for (int q = 0; q < num_qubits; ++q) {
    const auto la = (a >> (2 * q)) & 3u;
    const auto lb = (b >> (2 * q)) & 3u;
    if (la != 0 && lb != 0 && la != lb) sign = -sign;
  }
  return sign;
}

/// +1 if a and b commute, -1 if they anticommute.
inline int parity(const PauliString& a, const PauliString& b) {
  if (a.num_qubits() != b.num_qubits()) {
    throw InvalidArgument("parity: length mismatch (" + std::to_string(a.num_qubits()) + " vs " +
                          std::to_string(b.num_qubits()) + ")");
  }
  return parity_of_indices(a.index(), b.index(), a.num_qubits());
}

/// Action of a Pauli string on a computational basis state:
/// P|b> = phase * |b ^ x_mask>.
inline std::pair<std::uint64_t, Complex> pauli_apply_basis(const PauliString& p, std::uint64_t b) {
  Complex phase{1.0, 0.0};
  for (int q = 0; q < p.num_qubits(); ++q) {
    const bool bit = (b >> q) & 1u;
    switch (p.letter(q)) {
      case Pauli::I: case Pauli::X: break;
      case Pauli::Y: phase *= bit ? Complex{0.0, -1.0} : Complex{0.0, 1.0}; break;
      case Pauli::Z: if (bit) phase = -phase; break;
    }
  }
  return {b ^ p.x_mask(), phase};
}

inline Matrix pauli_matrix(const PauliString& p) {
  const auto dim = static_cast<Eigen::Index>(hilbert_dim(p.num_qubits()));
  Matrix m = Matrix::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    const auto [target, phase] = pauli_apply_basis(p, static_cast<std::uint64_t>(b));
    m(static_cast<Eigen::Index>(target), b) = phase;
  }
  return m;
}

/// Stochastic Pauli channel rho -> sum_i q_i P_i rho P_i.
class PauliChannel {
 public:
  static constexpr double kNormalizationTolerance = 1e-12;

  PauliChannel(int num_qubits, std::vector<double> probabilities)
      : num_qubits_(num_qubits), probabilities_(std::move(probabilities)) {
    check_qubit_count(num_qubits);
    if (probabilities_.size() != num_paulis(num_qubits)) {
      throw InvalidArgument("channel needs " + std::to_string(num_paulis(num_qubits)) +
                            " probabilities, got " + std::to_string(probabilities_.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < probabilities_.size(); ++i) {
      const double q = probabilities_[i];
      if (!(q >= 0.0) || !std::isfinite(q)) {
        throw NotAValidChannel("channel probability q_" + std::to_string(i) + " = " +
                                   std::to_string(q) + " is negative or not finite",
                               i);
      }
      total += q;
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      throw NotAValidChannel("channel probabilities sum to " + std::to_string(total), 0);
    }
  }

  static PauliChannel identity(int num_qubits) {
    std::vector<double> q(num_paulis(num_qubits), 0.0);
    q[0] = 1.0;
    return PauliChannel(num_qubits, std::move(q));
  }

  int num_qubits() const noexcept { return num_qubits_; }
  std::span<const double> probabilities() const noexcept { return probabilities_; }
  double probability(std::uint64_t i) const { return probabilities_.at(i); }

  /// q_lambda = sum of the non-identity probabilities.
  double error_probability() const noexcept {
    double s = 0.0;
    for (std::size_t i = 1; i < probabilities_.size(); ++i) s += probabilities_[i];
    return s;
  }

  friend bool operator==(const PauliChannel&, const PauliChannel&) = default;

 private:
  int num_qubits_;
  std::vector<double> probabilities_;
};

/// chi_i = sum_j parity(i, j) q_j, by direct summation.
inline std::vector<double> channel_eigenvalues(const PauliChannel& ch) {
  const int n = ch.num_qubits();
  const auto size = num_paulis(n);
  const auto q = ch.probabilities();
  std::vector<double> chi(size, 0.0);
  for (std::uint64_t i = 0; i < size; ++i) {
    double s = 0.0;
    for (std::uint64_t j = 0; j < size; ++j) s += parity_of_indices(i, j, n) * q[j];
    chi[i] = s;
  }
  return chi;
}

inline int qubits_for_pauli_count(std::size_t size) {
  for (int n = 1; n <= kMaxQubits; ++n) {
    if (num_paulis(n) == size) return n;
  }
  throw InvalidArgument("vector length " + std::to_string(size) + " is not 4^L for L in [1, " +
                        std::to_string(kMaxQubits) + "]");
}

/// Inverse transform q = parity * chi / 4^L, using sum_k parity(l, k) = 4^L [l = 0].
/// Components in [-1e-9, 0) are clamped to zero and the vector renormalized;
/// anything more negative means chi is not the spectrum of a Pauli channel.
inline PauliChannel eigenvalues_to_probabilities(std::span<const double> chi) {
  constexpr double kRealizabilityTolerance = 1e-9;
  const int n = qubits_for_pauli_count(chi.size());
  const auto size = chi.size();
  if (std::abs(chi[0] - 1.0) > 1e-12) {
    throw InvalidArgument("chi_0 must be 1 (trace preservation), got " + std::to_string(chi[0]));
  }
  std::vector<double> q(size, 0.0);
  double total = 0.0;
  for (std::uint64_t i = 0; i < size; ++i) {
    double s = 0.0;
    for (std::uint64_t k = 0; k < size; ++k) s += parity_of_indices(i, k, n) * chi[k];
    s /= static_cast<double>(size);
    if (s < -kRealizabilityTolerance) {
      throw NotAValidChannel("eigenvalues not realizable: q_" + std::to_string(i) + " (" +
                                 PauliString(n, i).str() + ") = " + std::to_string(s),
                             i);
    }
    q[i] = s < 0.0 ? 0.0 : s;
    total += q[i];
  }
  for (auto& v : q) v /= total;
  return PauliChannel(n, std::move(q));
}

inline void to_json(nlohmann::json& j, const PauliChannel& ch) {
  j = nlohmann::json{{"num_qubits", ch.num_qubits()},
                     {"probabilities", std::vector<double>(ch.probabilities().begin(),
                                                           ch.probabilities().end())}};
}

inline PauliChannel channel_from_json(const nlohmann::json& j) {
  if (!j.contains("num_qubits") || !j.contains("probabilities")) {
    throw InvalidArgument("channel JSON needs \"num_qubits\" and \"probabilities\"");
  }
  return PauliChannel(j.at("num_qubits").get<int>(), j.at("probabilities").get<std::vector<double>>());
}

}  // namespace pzne
