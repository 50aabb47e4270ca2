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
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pzne/circuit.hpp"
#include "pzne/density.hpp"
#include "pzne/error.hpp"
#include "pzne/pauli.hpp"
#include "pzne/rng.hpp"

namespace pzne {

/// Full-weight measurement basis: every qubit measured in X, Y or Z.
struct MeasurementSetting {
  PauliString basis;

  explicit MeasurementSetting(PauliString b) : basis(b) {
    if (basis.weight() != basis.num_qubits()) {
      throw InvalidArgument("measurement setting " + basis.str() + " must have no identity letters");
    }
  }

  int num_qubits() const noexcept { return basis.num_qubits(); }

  /// True if measuring in this basis reveals the Pauli p.
  bool covers(const PauliString& p) const {
    for (int q = 0; q < p.num_qubits(); ++q) {
      if (p.letter(q) != Pauli::I && p.letter(q) != basis.letter(q)) return false;
    }
    return true;
  }
};

/// The 3^L settings, in order of increasing base-3 index (qubit 0 fastest).
inline std::vector<MeasurementSetting> all_settings(int num_qubits) {
  check_qubit_count(num_qubits);
  std::vector<MeasurementSetting> out;
  std::uint64_t total = 1;
  for (int q = 0; q < num_qubits; ++q) total *= 3;
  for (std::uint64_t k = 0; k < total; ++k) {
    PauliString p = PauliString::identity(num_qubits);
    std::uint64_t r = k;
    for (int q = 0; q < num_qubits; ++q) {
      p = p.with_letter(q, static_cast<Pauli>(1 + r % 3));
      r /= 3;
    }
    out.emplace_back(p);
  }
  return out;
}

struct ShotTable {
  PauliString setting;
  std::vector<std::uint64_t> counts;  // indexed by outcome bits, qubit q = bit q
  std::uint64_t shots = 0;
};

/// Per-qubit readout fidelities (F0, F1). R[obs][true], column-stochastic.
class ReadoutModel {
 public:
  explicit ReadoutModel(std::vector<std::pair<double, double>> fidelities) : fidelities_(std::move(fidelities)) {
    check_qubit_count(static_cast<int>(fidelities_.size()));
    for (const auto& [f0, f1] : fidelities_) {
      if (!(f0 >= 0.0 && f0 <= 1.0 && f1 >= 0.0 && f1 <= 1.0)) throw InvalidArgument("readout fidelity outside [0, 1]");
    }
  }

  static ReadoutModel ideal(int num_qubits) {
    return ReadoutModel(std::vector<std::pair<double, double>>(static_cast<std::size_t>(num_qubits), {1.0, 1.0}));
  }

  int num_qubits() const noexcept { return static_cast<int>(fidelities_.size()); }
  const std::vector<std::pair<double, double>>& fidelities() const noexcept { return fidelities_; }

  Eigen::MatrixXd matrix() const {
    const int n = num_qubits();
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(n));
    Eigen::MatrixXd r(dim, dim);
    for (Eigen::Index obs = 0; obs < dim; ++obs) {
      for (Eigen::Index tru = 0; tru < dim; ++tru) {
        double v = 1.0;
        for (int q = 0; q < n; ++q) {
          const bool o = (obs >> q) & 1, t = (tru >> q) & 1;
          const auto [f0, f1] = fidelities_[static_cast<std::size_t>(q)];
          v *= t ? (o ? f1 : 1.0 - f1) : (o ? 1.0 - f0 : f0);
        }
        r(obs, tru) = v;
      }
    }
    return r;
  }

 private:
  std::vector<std::pair<double, double>> fidelities_;
};

/// Basis change taking the setting's eigenbasis to the computational one.
inline Matrix setting_rotation(const MeasurementSetting& s) {
  const int n = s.num_qubits();
  const double r = 1.0 / std::sqrt(2.0);
  Matrix h(2, 2), hsd(2, 2);
  h << r, r, r, -r;
  hsd << r, Complex(0, -r), r, Complex(0, r);  // H S^dagger
  const auto dim = static_cast<Eigen::Index>(hilbert_dim(n));
  Matrix u = Matrix::Identity(dim, dim);
  for (int q = 0; q < n; ++q) {
    const Pauli l = s.basis.letter(q);
    if (l == Pauli::Z) continue;
    u = Gate::embed(l == Pauli::X ? h : hsd, {q}, n) * u;
  }
  return u;
}

/// Outcome probabilities in the setting's basis.
inline std::vector<double> born_probabilities(const DensityMatrix& rho, const MeasurementSetting& s) {
  if (rho.num_qubits() != s.num_qubits()) throw InvalidArgument("setting and state qubit counts differ");
  const Matrix u = setting_rotation(s);
  const Matrix rot = u * rho.matrix() * u.adjoint();
  std::vector<double> p(static_cast<std::size_t>(rho.dim()));
  double total = 0.0;
  for (Eigen::Index b = 0; b < rho.dim(); ++b) total += (p[b] = std::max(0.0, rot(b, b).real()));
  for (auto& v : p) v /= total;
  return p;
}

inline std::vector<double> apply_readout(const std::vector<double>& p, const ReadoutModel& model) {
  const Eigen::MatrixXd r = model.matrix();
  if (static_cast<Eigen::Index>(p.size()) != r.cols()) throw InvalidArgument("readout model size mismatch");
  const Eigen::VectorXd out = r * Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  return {out.data(), out.data() + out.size()};
}

/// Multinomial counts by a chain of conditional binomials.
inline std::vector<std::uint64_t> sample_multinomial(const std::vector<double>& p, std::uint64_t n, Rng& rng) {
  std::vector<std::uint64_t> counts(p.size(), 0);
  double rest = 1.0;
  std::uint64_t left = n;
  for (std::size_t i = 0; i + 1 < p.size() && left > 0; ++i) {
    const double pi = rest > 0.0 ? std::clamp(p[i] / rest, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::uint64_t> b(left, pi);
    counts[i] = b(rng);
    left -= counts[i];
    rest -= p[i];
  }
  counts.back() += left;
  return counts;
}

inline ShotTable sample_shots(const DensityMatrix& rho, const MeasurementSetting& s, std::uint64_t shots, Rng& rng,
                              const std::optional<ReadoutModel>& readout = std::nullopt) {
  if (shots < 1) throw InvalidArgument("shot count must be >= 1");
  auto p = born_probabilities(rho, s);
  if (readout) p = apply_readout(p, *readout);
  return ShotTable{s.basis, sample_multinomial(p, shots, rng), shots};
}

inline std::vector<double> frequencies(const ShotTable& t) {
  std::vector<double> f(t.counts.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(t.counts[i]) / static_cast<double>(t.shots);
  return f;
}

/// One entry per Pauli index; covered[0] is always true with value 1.
struct PauliExpectations {
  int num_qubits = 0;
  std::vector<double> value;
  std::vector<double> std_error;
  std::vector<double> shots;  // pooled shot count per Pauli (infinite for exact data)
  std::vector<bool> covered;

  double at(const PauliString& p) const {
    if (!covered.at(p.index())) throw InvalidArgument("Pauli " + p.str() + " is not covered by any setting");
    return value[p.index()];
  }
};

/// A distribution over outcomes of one setting, with the shot count behind it
/// (0 means exact probabilities).
struct SettingData {
  PauliString setting;
  std::vector<double> distribution;
  double shots = 0.0;
};

/// Every Pauli is estimated by pooling all settings that cover it.
inline PauliExpectations expectations_from_distributions(const std::vector<SettingData>& data) {
  if (data.empty()) throw InvalidArgument("no measurement data");
  const int n = data.front().setting.num_qubits();
  const auto size = num_paulis(n);
  PauliExpectations out{n, std::vector<double>(size, 0.0), std::vector<double>(size, 0.0),
                        std::vector<double>(size, 0.0), std::vector<bool>(size, false)};
  std::vector<double> weight(size, 0.0);
  std::vector<bool> exact(size, false);
  for (const auto& d : data) {
    const MeasurementSetting s(d.setting);
    if (d.distribution.size() != hilbert_dim(n)) throw InvalidArgument("distribution length mismatch");
    const double w = d.shots > 0.0 ? d.shots : 1.0;
    for (std::uint64_t i = 0; i < size; ++i) {
      const PauliString p(n, i);
      if (!s.covers(p)) continue;
      const std::uint64_t mask = p.support_mask();
      double e = 0.0;
      for (std::size_t b = 0; b < d.distribution.size(); ++b) {
        e += (std::popcount(b & mask) & 1 ? -1.0 : 1.0) * d.distribution[b];
      }
      out.value[i] += w * e;
      weight[i] += w;
      out.shots[i] += d.shots;
      if (d.shots <= 0.0) exact[i] = true;
      out.covered[i] = true;
    }
  }
  for (std::uint64_t i = 0; i < size; ++i) {
    if (!out.covered[i]) continue;
    out.value[i] /= weight[i];
    if (exact[i]) {
      out.shots[i] = std::numeric_limits<double>::infinity();
      out.std_error[i] = 0.0;
    } else {
      out.std_error[i] = i == 0 ? 0.0 : std::sqrt(std::max(0.0, 1.0 - out.value[i] * out.value[i]) / out.shots[i]);
    }
  }
  return out;
}

inline PauliExpectations expectations_from_shots(const std::vector<ShotTable>& tables) {
  std::vector<SettingData> data;
  for (const auto& t : tables) data.push_back({t.setting, frequencies(t), static_cast<double>(t.shots)});
  return expectations_from_distributions(data);
}

inline PauliExpectations exact_expectations(const DensityMatrix& rho) {
  std::vector<SettingData> data;
  for (const auto& s : all_settings(rho.num_qubits())) data.push_back({s.basis, born_probabilities(rho, s), 0.0});
  return expectations_from_distributions(data);
}

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// p = 2^-L (1 + sum_a <s_a>^2). With bias_corrected, each square is replaced
/// by the unbiased (N e^2 - 1)/(N - 1).
inline Estimate qst_purity(const PauliExpectations& e, bool bias_corrected = false) {
  const auto size = num_paulis(e.num_qubits);
  double s = 1.0, var = 0.0;
  for (std::uint64_t i = 1; i < size; ++i) {
    if (!e.covered[i]) throw InvalidArgument("purity needs every Pauli; " + PauliString(e.num_qubits, i).str() + " missing");
    const double v = e.value[i];
    double sq = v * v;
    if (bias_corrected && std::isfinite(e.shots[i]) && e.shots[i] > 1.0) {
      sq = (e.shots[i] * v * v - 1.0) / (e.shots[i] - 1.0);
    }
    s += sq;
    var += v * v * e.std_error[i] * e.std_error[i];
  }
  const double d = static_cast<double>(hilbert_dim(e.num_qubits));
  return {s / d, 2.0 * std::sqrt(var) / d};
}

/// Swap operator on two L-qubit copies; copy 1 on the low qubits.
inline Matrix swap_operator(int num_qubits) {
  check_qubit_count(2 * num_qubits);
  const auto d = static_cast<Eigen::Index>(hilbert_dim(num_qubits));
  Matrix s = Matrix::Zero(d * d, d * d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) s(b + d * a, a + d * b) = 1.0;
  }
  return s;
}

/// Hadamard-test coin flips with success probability (1 + Tr S rho(x)rho)/2.
inline Estimate swap_test_purity(const DensityMatrix& rho, std::uint64_t shots, Rng& rng) {
  if (2 * rho.num_qubits() > kMaxQubits) {
    throw InvalidArgument("swap test needs 2L <= " + std::to_string(kMaxQubits) + " qubits");
  }
  if (shots < 1) throw InvalidArgument("shot count must be >= 1");
  const DensityMatrix two = tensor(rho, rho);
  const double tr = (swap_operator(rho.num_qubits()) * two.matrix()).trace().real();
  const double success = std::clamp((1.0 + tr) / 2.0, 0.0, 1.0);
  std::binomial_distribution<std::uint64_t> coin(shots, success);
  const double f = static_cast<double>(coin(rng)) / static_cast<double>(shots);
  const double est = 2.0 * f - 1.0;
  return {est, std::sqrt(std::max(0.0, 1.0 - est * est) / static_cast<double>(shots))};
}

/// Singlet/triplet basis change for two copies of one qubit.
inline Eigen::Matrix4d bell_basis_transform() {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Matrix4d b;
  b << 1, 0, 0, 0,
       0, r, -r, 0,
       0, r, r, 0,
       0, 0, 0, 1;
  return b;
}

/// Tr[rho U_n^dagger U_n(rho)]: run the n-fold circuit, then its inverse, and
/// overlap with the input.
inline double state_verification_echo(const NoisyCircuit& c, int n, const DensityMatrix& rho_in) {
  const NoisyCircuit un = fold_circuit(c, n);
  const DensityMatrix back = simulate(un.inverse(), simulate(un, rho_in));
  return overlap(rho_in, back);
}

namespace detail {

/// Euclidean projection onto the probability simplex.
inline Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

/// min ||R_S x - q|| subject to sum x = 1, via the KKT system.
inline std::optional<Eigen::VectorXd> equality_solve(const Eigen::MatrixXd& r, const Eigen::VectorXd& q,
                                                     const std::vector<Eigen::Index>& support) {
  const auto k = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd rs(r.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) rs.col(j) = r.col(support[j]);
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = rs.transpose() * rs;
  kkt.block(0, k, k, 1).setOnes();
  kkt.block(k, 0, 1, k).setOnes();
  Eigen::VectorXd rhs(k + 1);
  rhs.head(k) = rs.transpose() * q;
  rhs(k) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::VectorXd x = lu.solve(rhs);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(r.cols());
  for (Eigen::Index j = 0; j < k; ++j) {
    if (x(j) < 0.0) return std::nullopt;
    full(support[j]) = x(j);
  }
  return full;
}

}  // namespace detail

/// R^-1 q; falls back to the simplex-constrained least squares when the
/// inverse leaves the simplex.
inline std::vector<double> mitigate_readout(const std::vector<double>& q, const ReadoutModel& model) {
  const Eigen::MatrixXd r = model.matrix();
  if (static_cast<Eigen::Index>(q.size()) != r.rows()) throw InvalidArgument("distribution length mismatch");
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("distribution must sum to 1");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(r);
  if (!lu.isInvertible()) throw InvalidArgument("readout matrix is singular");
  const Eigen::VectorXd qv = Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
  Eigen::VectorXd p = lu.solve(qv);
  if (p.minCoeff() >= 0.0) {
    p /= p.sum();
    return {p.data(), p.data() + p.size()};
  }
  // accelerated projected gradient (FISTA) on 1/2 ||R p - q||^2
  const Eigen::MatrixXd rtr = r.transpose() * r;
  const Eigen::VectorXd rtq = r.transpose() * qv;
  const double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(rtr).eigenvalues().maxCoeff();
  Eigen::VectorXd x = detail::project_simplex(p), y = x;
  double t = 1.0;
  for (int it = 0; it < 20000; ++it) {
    const Eigen::VectorXd xn = detail::project_simplex(y - (rtr * y - rtq) / lip);
    const double tn = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    y = xn + ((t - 1.0) / tn) * (xn - x);
    const double step = (xn - x).cwiseAbs().maxCoeff();
    x = xn;
    t = tn;
    if (step < 1e-15) break;
  }
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) > 1e-12) support.push_back(i);
  }
  if (auto polished = detail::equality_solve(r, qv, support)) {
    if ((r * *polished - qv).norm() <= (r * x - qv).norm() + 1e-15) x = *polished;
  }
  x = x.cwiseMax(0.0);
  x /= x.sum();
  return {x.data(), x.data() + x.size()};
}

/// CSV rows: setting,outcome,count. Outcome bitstring lists qubit 0 first.
inline void write_shot_tables_csv(std::ostream& os, const std::vector<ShotTable>& tables) {
  os << "setting,outcome,count\n";
  for (const auto& t : tables) {
    const int n = t.setting.num_qubits();
    for (std::size_t b = 0; b < t.counts.size(); ++b) {
      std::string bits;
      for (int q = 0; q < n; ++q) bits += ((b >> q) & 1) ? '1' : '0';
      os << t.setting.str() << ',' << bits << ',' << t.counts[b] << '\n';
    }
  }
}

inline std::vector<ShotTable> read_shot_tables_csv(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line != "setting,outcome,count") throw InvalidArgument("shot table CSV header mismatch");
  std::vector<ShotTable> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string setting, bits, count;
    if (!std::getline(ss, setting, ',') || !std::getline(ss, bits, ',') || !std::getline(ss, count)) {
      throw InvalidArgument("malformed shot table row: " + line);
    }
    const auto p = PauliString::from_letters(setting);
    if (out.empty() || out.back().setting != p) {
      out.push_back(ShotTable{p, std::vector<std::uint64_t>(hilbert_dim(p.num_qubits()), 0), 0});
    }
    if (bits.size() != static_cast<std::size_t>(p.num_qubits())) throw InvalidArgument("outcome length mismatch: " + line);
    std::uint64_t b = 0;
    for (std::size_t q = 0; q < bits.size(); ++q) {
      if (bits[q] == '1') b |= std::uint64_t{1} << q;
      else if (bits[q] != '0') throw InvalidArgument("bad outcome bitstring: " + bits);
    }
    const auto c = std::stoull(count);
    out.back().counts[b] += c;
    out.back().shots += c;
  }
  return out;
}

}  // namespace pzne
