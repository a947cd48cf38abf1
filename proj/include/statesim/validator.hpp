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

#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "statesim/digest.hpp"
#include "statesim/kernel.hpp"
#include "statesim/model.hpp"
#include "statesim/state_codec.hpp"

namespace statesim {

/// N = ceil(ln(delta) / ln(1 - epsilon)): the number of independent detours
/// that must all agree before "Pr[divergence] >= epsilon" is rejected with
/// confidence 1 - delta. Throws kParameterDomain outside (0,1).
std::size_t required_trials(double epsilon, double delta);

enum class Sampling {
  kPerStep,   // fresh tau' before every Simulate* of the sequence
  kPerTrial,  // one tau' for the whole sequence
};

struct Comparator {
  enum class Kind { kBitwise, kTolerance };
  Kind kind = Kind::kBitwise;
  // kTolerance only: max |difference| allowed on t and x; mode, d and u must
  // match exactly, solver internals are ignored.
  double tol = 0.0;

  bool equal(const StateRecord& a, const StateRecord& b) const;
  std::string describe() const;
};

struct ValidationConfig {
  double epsilon = 0.05;
  double delta = 0.05;
  double tau = 0.25;
  double b_lo = 0.0;
  double b_hi = 5.0;
  std::size_t n_sequence = 8;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::kPerStep;
  Comparator comparator;
  KernelConfig kernel;
  // Worker threads for run_validation; the verdict does not depend on it.
  int jobs = 1;

  // Throws kInvalidConfig.
  void validate() const;
};

struct Counterexample {
  double tau_prime = 0.0;
  std::size_t trial = 0;  // 1-based
  std::size_t step = 0;   // 1-based index into the Simulate sequence
  Digest fingerprint_a;   // Simulate(tau) path
  Digest fingerprint_b;   // Simulate*(tau, tau') path
};

struct Verdict {
  bool passed = false;
  std::size_t trials_run = 0;
  std::size_t required = 0;
  double confidence = 0.0;
  std::optional<Counterexample> counterexample;
};

/// The tau' values trial `trial` (0-based) uses, drawn from the sequential
/// stream seeded by config.seed. Exposed so tests can check the sampler.
std::vector<double> draw_tau_primes(const ValidationConfig& config, std::size_t n_trials);

/// Hypothesis-test driver. Each trial runs twin instances from the initial
/// state through n_sequence steps: one by Simulate(tau), the other by
/// Simulate*(tau, tau'), comparing complete states after every step. Stops
/// at the first divergence; passes after N agreeing trials. A kernel failure
/// inside a trial throws kSimulationAborted.
Verdict run_validation(const ModelPtr& model, const ValidationConfig& config);

/// Reference implementation: trials strictly in order on one thread.
Verdict run_validation_serial(const ModelPtr& model, const ValidationConfig& config);

/// OpenMP over trials. All tau' are pre-drawn from the sequential stream and
/// the lowest failing trial index wins, so the verdict equals the serial one.
Verdict run_validation_parallel(const ModelPtr& model, const ValidationConfig& config, int jobs);

struct DivergenceReport {
  bool diverged = false;
  double tau_prime = 0.0;
  std::size_t step = 0;
  StateRecord state_a;
  StateRecord state_b;
  Digest fingerprint_a;
  Digest fingerprint_b;
};

/// Re-runs step `step` of a trial with the given tau'. Steps before it are
/// plain Simulate calls: a counterexample is the first divergent step, so the
/// twins were identical up to it. step must lie in [1, n_sequence].
DivergenceReport replay_counterexample(const ModelPtr& model, const ValidationConfig& config,
                                       double tau_prime, std::size_t step);

nlohmann::json to_json(const Verdict& v, const ValidationConfig& config,
                       const std::string& model_name);
nlohmann::json to_json(const DivergenceReport& r);
nlohmann::json to_json(const StateRecord& s);

}  // namespace statesim
