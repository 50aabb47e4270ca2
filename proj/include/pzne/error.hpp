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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pzne {

/// Input outside an operation's precondition (shape, range, arity).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Probability vector derived from eigenvalues has a component below the
/// realizability tolerance.
class NotAValidChannel : public std::runtime_error {
 public:
  NotAValidChannel(const std::string& what, std::size_t offending_index)
      : std::runtime_error(what), offending_index_(offending_index) {}
  std::size_t offending_index() const noexcept { return offending_index_; }

 private:
  std::size_t offending_index_;
};

class SamplerFailure : public std::runtime_error {
 public:
  SamplerFailure(const std::string& what, std::uint64_t seed)
      : std::runtime_error(what + " (seed " + std::to_string(seed) + ")"), seed_(seed) {}
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Gate conjugation did not map a Pauli string onto a signed Pauli string.
class NonClifford : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Noisy purity sits at (or below) the stable-state purity, so the
/// purity rescaling is undefined.
class PurityFloor : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bound or estimator used outside the regime where it is defined
/// (e.g. sigma >= 2 for the tolerant error).
class MethodInapplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pzne
