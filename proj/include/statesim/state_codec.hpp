/*
 * Copyright 2026 The statesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "statesim/bytes.hpp"
#include "statesim/digest.hpp"
#include "statesim/solver.hpp"

namespace statesim {

enum class Mode : std::uint8_t {
  kInstantiated = 0,
  kInitializationMode = 1,
  kContinuousTimeMode = 2,
  kEventMode = 3,
  kTerminated = 4,
};

const char* to_string(Mode m);

/// The complete state of one kernel instance, in decoded form.
struct StateRecord {
  Digest model_fingerprint;
  Mode mode = Mode::kInstantiated;
  double t = 0.0;
  std::vector<double> x;
  std::vector<std::int64_t> d;
  std::vector<double> u;
  SolverState solver;
};

inline constexpr std::uint16_t kStateVersion = 1;

/// Canonical "KSN1" encoding. Injective on states, stable across runs and
/// across platforms with IEEE-754 binary64 doubles.
Bytes encode_state(const StateRecord& s);

/// Inverse of encode_state. Throws kCorruptBlob (bad magic, truncation,
/// trailing bytes, bad enum values) or kVersionMismatch.
StateRecord decode_state(std::span<const std::uint8_t> bytes);

/// SHA-256 of encode_state(s).
Digest state_digest(const StateRecord& s);

}  // namespace statesim
