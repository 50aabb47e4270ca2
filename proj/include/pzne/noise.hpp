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

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pzne/error.hpp"
#include "pzne/pauli.hpp"
#include "pzne/rng.hpp"

namespace pzne {

/// (1 - q) rho + q I/D, i.e. q/4^L on every Pauli including the identity.
inline PauliChannel depolarizing_channel(int num_qubits, double q) {
  check_qubit_count(num_qubits);
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("depolarizing rate must lie in [0, 1]");
  const auto size = num_paulis(num_qubits);
  const double each = q / static_cast<double>(size);
  std::vector<double> probs(size, each);
  probs[0] = 1.0 - q + each;
  return PauliChannel(num_qubits, std::move(probs));
}

/// Measured two-qubit CNOT error. Row = letter on qubit 0, column = letter on qubit 1.
inline PauliChannel measured_cnot_channel() {
  static constexpr double kRows[4][4] = {
      {0.950, 6.24e-3, 5.87e-3, 3.61e-3},
      {3.22e-3, 1.64e-3, 5.19e-3, 3.80e-4},
      {4.15e-3, 6.89e-3, 4.01e-3, 4.00e-4},
      {7.50e-4, 2.04e-3, 3.47e-3, 2.14e-3},
  };
  std::vector<double> probs(16);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) probs[static_cast<std::size_t>(a + 4 * b)] = kRows[a][b];
  }
  double total = 0.0;
  for (double v : probs) total += v;
  for (double& v : probs) v /= total;  // entries sum to 1 only up to float rounding
  return PauliChannel(2, std::move(probs));
}

/// Uniform direction on the positive orthant of the (4^L - 2)-sphere,
/// drawn as |g|/||g|| for Gaussian g, then scaled to total q_lambda.
inline PauliChannel sample_pauli_channel(int num_qubits, double q_lambda, Rng& rng,
                                         std::uint64_t seed_for_errors = 0, int max_retries = 64) {
  check_qubit_count(num_qubits);
  if (!(q_lambda > 0.0 && q_lambda < 1.0)) throw InvalidArgument("q_lambda must lie in (0, 1)");
  const auto size = num_paulis(num_qubits);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<double> g(size, 0.0);
    double sum = 0.0;
    for (std::uint64_t i = 1; i < size; ++i) {
      g[i] = std::abs(normal(rng));
      sum += g[i];
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) continue;
    // direction |g|/||g||, then rescale so the entries sum to q_lambda
    std::vector<double> probs(size, 0.0);
    double acc = 0.0;
    for (std::uint64_t i = 1; i < size; ++i) {
      probs[i] = g[i] / sum * q_lambda;
      acc += probs[i];
    }
    probs[0] = 1.0 - acc;
    return PauliChannel(num_qubits, std::move(probs));
  }
  throw SamplerFailure("sample_pauli_channel: retry cap reached", seed_for_errors);
}

enum class BackwardMode { Symmetric, CnotConjugate, OmegaPerturbed };

inline const char* to_string(BackwardMode m) {
  switch (m) {
    case BackwardMode::Symmetric: return "Symmetric";
    case BackwardMode::CnotConjugate: return "CnotConjugate";
    case BackwardMode::OmegaPerturbed: return "OmegaPerturbed";
  }
  return "?";
}

inline BackwardMode backward_mode_from_string(const std::string& s) {
  if (s == "Symmetric") return BackwardMode::Symmetric;
  if (s == "CnotConjugate") return BackwardMode::CnotConjugate;
  if (s == "OmegaPerturbed") return BackwardMode::OmegaPerturbed;
  throw InvalidArgument("unknown backward mode '" + s + "'");
}

struct ForwardBackwardPair {
  PauliChannel forward;
  PauliChannel backward;
  double lambda = 0.0;
  std::vector<double> omega;
};

/// chi_b,i = chi_f,i * exp(lambda^2 omega_i), mapped back to probabilities.
inline ForwardBackwardPair backward_from_forward(const PauliChannel& forward, double lambda,
                                                 std::vector<double> omega) {
  const auto size = num_paulis(forward.num_qubits());
  if (omega.size() != size) throw InvalidArgument("omega must have 4^L entries");
  if (omega[0] != 0.0) throw InvalidArgument("omega_0 must be 0");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  auto chi = channel_eigenvalues(forward);
  const double l2 = lambda * lambda;
  bool trivial = true;
  for (std::uint64_t i = 0; i < size; ++i) {
    const double f = std::exp(l2 * omega[i]);
    if (f != 1.0) trivial = false;
    chi[i] *= f;
  }
  if (trivial) return {forward, forward, lambda, std::move(omega)};
  chi[0] = 1.0;
  return {forward, eigenvalues_to_probabilities(chi), lambda, std::move(omega)};
}

/// Draws omega_i ~ scale * U[-1, 1] (omega_0 = 0) until the backward channel is
/// realizable.
inline ForwardBackwardPair random_backward(const PauliChannel& forward, double lambda, double scale,
                                           Rng& rng, std::uint64_t seed_for_errors = 0,
                                           int max_retries = 10000) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto size = num_paulis(forward.num_qubits());
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<double> omega(size, 0.0);
    for (std::uint64_t i = 1; i < size; ++i) omega[i] = scale * u(rng);
    try {
      return backward_from_forward(forward, lambda, std::move(omega));
    } catch (const NotAValidChannel&) {
    }
  }
  throw SamplerFailure("random_backward: no realizable omega within retry cap", seed_for_errors);
}

/// Index of CNOT P CNOT^dagger (control qubit 0, target qubit 1), phase dropped.
inline std::uint64_t cnot_conjugate_index(std::uint64_t index) {
  auto xbit = [](std::uint64_t l) { return static_cast<unsigned>(l == 1 || l == 2); };
  auto zbit = [](std::uint64_t l) { return static_cast<unsigned>(l == 2 || l == 3); };
  auto letter = [](unsigned x, unsigned z) -> std::uint64_t { return x ? (z ? 2 : 1) : (z ? 3 : 0); };
  const std::uint64_t lc = index & 3u, lt = (index >> 2) & 3u;
  unsigned xc = xbit(lc), zc = zbit(lc), xt = xbit(lt), zt = zbit(lt);
  xt ^= xc;
  zc ^= zt;
  return letter(xc, zc) | (letter(xt, zt) << 2);
}

/// E_b = CNOT . E_f . CNOT^dagger: the mass on P moves to CNOT P CNOT.
inline PauliChannel cnot_conjugate_channel(const PauliChannel& ch) {
  if (ch.num_qubits() != 2) throw InvalidArgument("cnot_conjugate_channel needs L = 2");
  std::vector<double> out(16, 0.0);
  for (std::uint64_t i = 0; i < 16; ++i) out[cnot_conjugate_index(i)] = ch.probability(i);
  return PauliChannel(2, std::move(out));
}

enum class ErrorKind { Depolarizing, Table, SampledPauli };

/// Forward error description plus how the backward error is derived from it.
struct ErrorModelSpec {
  ErrorKind kind = ErrorKind::Depolarizing;
  double rate = 0.05;                  // Depolarizing
  std::vector<double> probabilities;   // Table; empty means the measured CNOT table
  double q_lambda = 0.05;              // SampledPauli
  BackwardMode backward = BackwardMode::Symmetric;
  double lambda = 0.0;                 // OmegaPerturbed
  double omega_scale = 1.0;
  std::vector<double> omega;           // explicit omega, otherwise drawn

  void validate() const {
    if (kind == ErrorKind::Depolarizing && !(rate >= 0.0 && rate <= 1.0)) {
      throw InvalidArgument("depolarizing rate must lie in [0, 1]");
    }
    if (kind == ErrorKind::SampledPauli && !(q_lambda > 0.0 && q_lambda < 1.0)) {
      throw InvalidArgument("q_lambda must lie in (0, 1)");
    }
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  }
};

inline PauliChannel make_forward(const ErrorModelSpec& spec, int num_qubits, Rng& rng,
                                 std::uint64_t seed_for_errors = 0) {
  spec.validate();
  switch (spec.kind) {
    case ErrorKind::Depolarizing: return depolarizing_channel(num_qubits, spec.rate);
    case ErrorKind::Table:
      if (spec.probabilities.empty()) {
        if (num_qubits != 2) throw InvalidArgument("the built-in table is a 2-qubit channel");
        return measured_cnot_channel();
      }
      return PauliChannel(num_qubits, spec.probabilities);
    case ErrorKind::SampledPauli: return sample_pauli_channel(num_qubits, spec.q_lambda, rng, seed_for_errors);
  }
  throw InvalidArgument("unknown error kind");
}

inline ForwardBackwardPair make_pair(const ErrorModelSpec& spec, const PauliChannel& forward, Rng& rng,
                                     std::uint64_t seed_for_errors = 0) {
  switch (spec.backward) {
    case BackwardMode::Symmetric: return {forward, forward, 0.0, std::vector<double>(forward.probabilities().size(), 0.0)};
    case BackwardMode::CnotConjugate:
      return {forward, cnot_conjugate_channel(forward), 0.0, std::vector<double>(forward.probabilities().size(), 0.0)};
    case BackwardMode::OmegaPerturbed:
      if (!spec.omega.empty()) return backward_from_forward(forward, spec.lambda, spec.omega);
      return random_backward(forward, spec.lambda, spec.omega_scale, rng, seed_for_errors);
  }
  throw InvalidArgument("unknown backward mode");
}

}  // namespace pzne
