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
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pzne/density.hpp"
#include "pzne/error.hpp"
#include "pzne/noise.hpp"
#include "pzne/pauli.hpp"
#include "pzne/rng.hpp"

namespace pzne {

/// A gate with its unitary embedded in the full 2^L register.
struct Gate {
  std::string name;
  std::vector<int> qubits;
  Matrix unitary;

  /// Local matrix for a named gate; qubits[0] is local bit 0.
  static Matrix local_matrix(const std::string& name) {
    const double r = 1.0 / std::sqrt(2.0);
    const Complex i{0.0, 1.0};
    Matrix m;
    if (name == "I") {
      m = Matrix::Identity(2, 2);
    } else if (name == "X") {
      m.resize(2, 2);
      m << 0, 1, 1, 0;
    } else if (name == "Y") {
      m.resize(2, 2);
      m << 0, -i, i, 0;
    } else if (name == "Z") {
      m.resize(2, 2);
      m << 1, 0, 0, -1;
    } else if (name == "H") {
      m.resize(2, 2);
      m << r, r, r, -r;
    } else if (name == "S") {
      m.resize(2, 2);
      m << 1, 0, 0, i;
    } else if (name == "CNOT") {
      // control = local bit 0, target = local bit 1
      m = Matrix::Zero(4, 4);
      m(0, 0) = 1;
      m(3, 1) = 1;
      m(2, 2) = 1;
      m(1, 3) = 1;
    } else if (name == "CZ") {
      m = Matrix::Identity(4, 4);
      m(3, 3) = -1;
    } else {
      throw InvalidArgument("unknown gate '" + name + "'");
    }
    return m;
  }

  static Matrix embed(const Matrix& local, const std::vector<int>& qubits, int num_qubits) {
    check_qubit_count(num_qubits);
    const int k = static_cast<int>(qubits.size());
    if (local.rows() != (Eigen::Index{1} << k) || local.cols() != local.rows()) {
      throw InvalidArgument("gate matrix does not match its qubit count");
    }
    std::uint64_t mask = 0;
    for (int q : qubits) {
      if (q < 0 || q >= num_qubits || ((mask >> q) & 1u)) throw InvalidArgument("bad gate qubit list");
      mask |= std::uint64_t{1} << q;
    }
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(num_qubits));
    Matrix full = Matrix::Zero(dim, dim);
    auto scatter = [&](std::uint64_t rest, std::uint64_t loc) {
      std::uint64_t b = rest;
      for (int j = 0; j < k; ++j) b |= ((loc >> j) & 1u) << qubits[j];
      return static_cast<Eigen::Index>(b);
    };
    for (std::uint64_t rest = 0; rest < static_cast<std::uint64_t>(dim); ++rest) {
      if (rest & mask) continue;
      for (Eigen::Index a = 0; a < local.rows(); ++a) {
        for (Eigen::Index b = 0; b < local.cols(); ++b) {
          full(scatter(rest, a), scatter(rest, b)) = local(a, b);
        }
      }
    }
    return full;
  }

  static Gate named(const std::string& name, std::vector<int> qubits, int num_qubits) {
    const Matrix local = local_matrix(name);
    if (local.rows() != (Eigen::Index{1} << qubits.size())) {
      throw InvalidArgument("gate '" + name + "' acts on " + std::to_string(local.rows() == 2 ? 1 : 2) +
                            " qubit(s)");
    }
    Matrix full = embed(local, qubits, num_qubits);
    return Gate{name, std::move(qubits), std::move(full)};
  }

  static Gate raw(Matrix unitary, std::string name = "U") {
    if (!is_unitary(unitary)) throw InvalidArgument("raw gate is not unitary within 1e-10");
    return Gate{std::move(name), {}, std::move(unitary)};
  }
};

enum class Direction { Forward, Backward };

/// Forward: rho -> E_f(U rho U^dagger). Backward: rho -> U^dagger E_b(rho) U.
/// A non-empty forward_kraus replaces the forward Pauli channel (raw,
/// non-Pauli noise, used to exercise twirling).
struct Layer {
  Gate gate;
  PauliChannel forward;
  PauliChannel backward;
  Direction direction = Direction::Forward;
  std::vector<Matrix> forward_kraus;

  Layer inverse() const {
    Layer l = *this;
    l.direction = direction == Direction::Forward ? Direction::Backward : Direction::Forward;
    return l;
  }

  /// Ideal unitary of this pass.
  Matrix ideal() const { return direction == Direction::Forward ? gate.unitary : Matrix(gate.unitary.adjoint()); }
};

class NoisyCircuit {
 public:
  explicit NoisyCircuit(int num_qubits) : num_qubits_(num_qubits) { check_qubit_count(num_qubits); }

  void add(Layer layer) {
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(num_qubits_));
    if (layer.gate.unitary.rows() != dim || !is_unitary(layer.gate.unitary)) {
      throw InvalidArgument("layer gate must be a unitary on " + std::to_string(num_qubits_) + " qubits");
    }
    if (layer.forward.num_qubits() != num_qubits_ || layer.backward.num_qubits() != num_qubits_) {
      throw InvalidArgument("layer channels do not match the circuit qubit count");
    }
    for (const auto& k : layer.forward_kraus) {
      if (k.rows() != dim || k.cols() != dim) throw InvalidArgument("Kraus operator has wrong dimension");
    }
    layers_.push_back(std::move(layer));
  }

  int num_qubits() const noexcept { return num_qubits_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t size() const noexcept { return layers_.size(); }

  NoisyCircuit inverse() const {
    NoisyCircuit out(num_qubits_);
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) out.layers_.push_back(it->inverse());
    return out;
  }

  /// Ideal unitary of the whole circuit.
  Matrix ideal_unitary() const {
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(num_qubits_));
    Matrix u = Matrix::Identity(dim, dim);
    for (const auto& l : layers_) u = l.ideal() * u;
    return u;
  }

 private:
  int num_qubits_;
  std::vector<Layer> layers_;
};

/// `depth` CNOT layers (control 0, target 1) with the given noise pair.
inline NoisyCircuit cnot_chain(int depth, const PauliChannel& forward, const PauliChannel& backward) {
  NoisyCircuit c(2);
  const Gate g = Gate::named("CNOT", {0, 1}, 2);
  for (int i = 0; i < depth; ++i) c.add(Layer{g, forward, backward, Direction::Forward, {}});
  return c;
}

/// c, then (c^dagger c) repeated n - 1 times: 2n - 1 passes.
inline NoisyCircuit fold_circuit(const NoisyCircuit& c, int n) {
  if (n < 1) throw InvalidArgument("fold count must be >= 1");
  NoisyCircuit out(c.num_qubits());
  const NoisyCircuit inv = c.inverse();
  for (const auto& l : c.layers()) out.add(l);
  for (int k = 1; k < n; ++k) {
    for (const auto& l : inv.layers()) out.add(l);
    for (const auto& l : c.layers()) out.add(l);
  }
  return out;
}

/// Each layer L becomes (L L^dagger)^n L.
inline NoisyCircuit fold_layers(const NoisyCircuit& c, int n) {
  if (n < 0) throw InvalidArgument("layer fold count must be >= 0");
  NoisyCircuit out(c.num_qubits());
  for (const auto& l : c.layers()) {
    out.add(l);
    const Layer inv = l.inverse();
    for (int k = 0; k < n; ++k) {
      out.add(inv);
      out.add(l);
    }
  }
  return out;
}

/// C P C^dagger as a signed Pauli string.
inline std::pair<PauliString, int> clifford_conjugate_pauli(const Matrix& c, const PauliString& p) {
  const auto dim = static_cast<Eigen::Index>(hilbert_dim(p.num_qubits()));
  if (c.rows() != dim || c.cols() != dim) throw InvalidArgument("gate dimension does not match Pauli");
  const Matrix m = c * pauli_matrix(p) * c.adjoint();
  // m is a Pauli string iff exactly one column entry per row with unit modulus
  // and its Pauli-basis expansion has a single +-1 coefficient.
  for (std::uint64_t j = 0; j < num_paulis(p.num_qubits()); ++j) {
    const PauliString q(p.num_qubits(), j);
    const Complex coeff = (pauli_matrix(q) * m).trace() / static_cast<double>(dim);
    if (std::abs(std::abs(coeff) - 1.0) < 1e-10) {
      const double s = coeff.real();
      if (std::abs(std::abs(s) - 1.0) > 1e-10) break;
      const int sign = s > 0 ? 1 : -1;
      if ((m - static_cast<double>(sign) * pauli_matrix(q)).cwiseAbs().maxCoeff() > 1e-10) break;
      return {q, sign};
    }
  }
  throw NonClifford("conjugation of " + p.str() + " is not a signed Pauli string");
}

inline std::pair<PauliString, int> clifford_conjugate_pauli(const Gate& g, const PauliString& p) {
  return clifford_conjugate_pauli(g.unitary, p);
}

/// One twirl draw: pre[k] before block k, post[k] after it, with
/// post = C pre C^dagger up to the recorded sign (a global phase on the state).
struct TwirlInstance {
  std::vector<PauliString> pre;
  std::vector<PauliString> post;
  int sign = 1;
};

enum class TwirlScope { PerLayer, WholeCircuit };

/// All 4^L (pre, post) pairs for a single Clifford block.
inline std::vector<TwirlInstance> block_twirl_instances(const Matrix& block, int num_qubits) {
  std::vector<TwirlInstance> out;
  for (std::uint64_t i = 0; i < num_paulis(num_qubits); ++i) {
    const PauliString pre(num_qubits, i);
    const auto [post, sign] = clifford_conjugate_pauli(block, pre);
    out.push_back(TwirlInstance{{pre}, {post}, sign});
  }
  return out;
}

/// Post-Pauli for each pre-Pauli around CNOT(0 -> 1), up to sign.
/// Rows: letter on qubit 0, columns: letter on qubit 1, both in IXYZ order.
inline constexpr const char* kCnotTwirlTable[4][4] = {{"II", "IX", "ZY", "ZZ"},
                                                      {"XX", "XI", "YZ", "YY"},
                                                      {"YX", "YI", "XZ", "XY"},
                                                      {"ZI", "ZX", "IY", "IZ"}};

/// Mismatches between the CNOT block's instances and kCnotTwirlTable (empty when they agree).
inline std::vector<std::string> check_cnot_twirl_table(const std::vector<TwirlInstance>& inst) {
  std::vector<std::string> bad;
  if (inst.size() != 16) return {"expected 16 instances, got " + std::to_string(inst.size())};
  const char letters[] = "IXYZ";
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const std::string pre{letters[a], letters[b]};
      const auto& t = inst[PauliString::from_letters(pre).index()];
      if (t.pre.size() != 1 || t.pre[0].str() != pre || t.post[0].str() != kCnotTwirlTable[a][b]) {
        bad.push_back(pre + " -> " + (t.post.empty() ? std::string("?") : t.post[0].str()) + " (want " +
                      kCnotTwirlTable[a][b] + ")");
      }
    }
  }
  return bad;
}

/// WholeCircuit: the 4^L instances of the ideal circuit as one block.
/// PerLayer: `samples` uniformly drawn products, one Pauli per layer.
inline std::vector<TwirlInstance> twirl_instances(const NoisyCircuit& c, TwirlScope scope, Rng* rng = nullptr,
                                                  std::size_t samples = 0) {
  const int n = c.num_qubits();
  if (scope == TwirlScope::WholeCircuit) return block_twirl_instances(c.ideal_unitary(), n);
  if (rng == nullptr) throw InvalidArgument("per-layer twirling needs an rng");
  // conjugation tables per distinct layer are cheap enough to rebuild per layer
  std::vector<std::vector<std::pair<PauliString, int>>> tables;
  for (const auto& l : c.layers()) {
    std::vector<std::pair<PauliString, int>> t;
    for (std::uint64_t i = 0; i < num_paulis(n); ++i) t.push_back(clifford_conjugate_pauli(l.ideal(), PauliString(n, i)));
    tables.push_back(std::move(t));
  }
  std::uniform_int_distribution<std::uint64_t> pick(0, num_paulis(n) - 1);
  std::vector<TwirlInstance> out;
  out.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    TwirlInstance inst;
    for (std::size_t k = 0; k < c.size(); ++k) {
      const std::uint64_t i = pick(*rng);
      inst.pre.emplace_back(n, i);
      inst.post.push_back(tables[k][i].first);
      inst.sign *= tables[k][i].second;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

inline void check_kraus(const std::vector<Matrix>& kraus, double tol = 1e-9) {
  if (kraus.empty()) throw InvalidArgument("empty Kraus set");
  const Eigen::Index dim = kraus.front().rows();
  Matrix sum = Matrix::Zero(dim, dim);
  for (const auto& k : kraus) {
    if (k.rows() != dim || k.cols() != dim) throw InvalidArgument("Kraus operators differ in shape");
    sum += k.adjoint() * k;
  }
  if ((sum - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > tol) {
    throw InvalidArgument("Kraus set is not trace preserving within 1e-9");
  }
}

inline DensityMatrix apply_kraus(const DensityMatrix& rho, const std::vector<Matrix>& kraus) {
  Matrix out = Matrix::Zero(rho.dim(), rho.dim());
  for (const auto& k : kraus) out += k * rho.matrix() * k.adjoint();
  return DensityMatrix(DensityMatrix::Unchecked{}, rho.num_qubits(), std::move(out));
}

/// Pauli twirl of a Kraus channel: q_i = sum_k |Tr(P_i K_k)/D|^2.
inline PauliChannel twirled_channel(const std::vector<Matrix>& kraus) {
  check_kraus(kraus);
  const Eigen::Index dim = kraus.front().rows();
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim) throw InvalidArgument("Kraus dimension is not 2^L");
  check_qubit_count(n);
  std::vector<double> q(num_paulis(n), 0.0);
  for (std::uint64_t i = 0; i < q.size(); ++i) {
    const Matrix p = pauli_matrix(PauliString(n, i));
    for (const auto& k : kraus) q[i] += std::norm((p * k).trace() / static_cast<double>(dim));
  }
  double total = 0.0;
  for (double v : q) total += v;
  for (double& v : q) v /= total;  // total is 1 up to the completeness tolerance
  return PauliChannel(n, std::move(q));
}

inline DensityMatrix apply_layer(const DensityMatrix& rho, const Layer& l) {
  if (l.direction == Direction::Forward) {
    const DensityMatrix r = apply_unitary(rho, l.gate.unitary);
    return l.forward_kraus.empty() ? apply_pauli_channel(r, l.forward) : apply_kraus(r, l.forward_kraus);
  }
  return apply_unitary(apply_pauli_channel(rho, l.backward), l.gate.unitary.adjoint());
}

inline DensityMatrix apply_pauli(const DensityMatrix& rho, const PauliString& p) {
  if (p.is_identity()) return rho;
  return DensityMatrix(DensityMatrix::Unchecked{}, rho.num_qubits(), conjugate_by_pauli(rho.matrix(), p));
}

inline DensityMatrix simulate(const NoisyCircuit& c, const DensityMatrix& rho_in) {
  if (c.num_qubits() != rho_in.num_qubits()) throw InvalidArgument("circuit and state qubit counts differ");
  DensityMatrix rho = rho_in;
  for (const auto& l : c.layers()) rho = apply_layer(rho, l);
  return rho;
}

/// Simulates one twirl instance with the post Paulis applied physically.
inline DensityMatrix simulate_twirled(const NoisyCircuit& c, const DensityMatrix& rho_in, const TwirlInstance& t,
                                      TwirlScope scope) {
  if (c.num_qubits() != rho_in.num_qubits()) throw InvalidArgument("circuit and state qubit counts differ");
  if (scope == TwirlScope::WholeCircuit) {
    if (t.pre.size() != 1 || t.post.size() != 1) throw InvalidArgument("whole-circuit twirl needs one block");
    return apply_pauli(simulate(c, apply_pauli(rho_in, t.pre[0])), t.post[0]);
  }
  if (t.pre.size() != c.size() || t.post.size() != c.size()) {
    throw InvalidArgument("per-layer twirl instance does not match the layer count");
  }
  DensityMatrix rho = rho_in;
  for (std::size_t k = 0; k < c.size(); ++k) {
    rho = apply_pauli(apply_layer(apply_pauli(rho, t.pre[k]), c.layers()[k]), t.post[k]);
  }
  return rho;
}

/// chi_f^n chi_b^(n-1) rho_i.
inline double folded_expectation(double chi_f, double chi_b, int n, double rho_i) {
  if (n < 1) throw InvalidArgument("fold count must be >= 1");
  return std::pow(chi_f, n) * std::pow(chi_b, n - 1) * rho_i;
}

}  // namespace pzne
