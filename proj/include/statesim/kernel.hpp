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

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "statesim/bytes.hpp"
#include "statesim/digest.hpp"
#include "statesim/model.hpp"
#include "statesim/solver.hpp"
#include "statesim/state_codec.hpp"

namespace statesim {

/// Deliberately broken set_state variants. They exist so that the validator
/// can be shown to catch an incomplete restore.
enum class Fault : std::uint8_t {
  kNone,
  kSkipSolverRestore,    // solver internals (step size, grid, counters) kept
  kSkipDiscreteRestore,  // discrete vector kept
  kSkipZsignsRestore,    // event-indicator sign bits kept
};

const char* to_string(Fault f);
// Accepts "none", "skip-solver-restore", "skip-discrete-restore",
// "skip-zsigns-restore". Throws kInvalidConfig otherwise.
Fault parse_fault(const std::string& name);

struct KernelConfig {
  SolverConfig solver;
  Fault fault = Fault::kNone;
};

/// Total payload bytes currently held by live (unfreed) snapshots in this
/// process.
std::size_t snapshot_live_bytes();

/// Handle to an immutable complete-state capture. Copies share the payload;
/// free_state() on any copy invalidates all of them.
class Snapshot {
 public:
  Snapshot() = default;

  static Snapshot from_bytes(std::span<const std::uint8_t> bytes);

  // Both throw kUseAfterFree once freed (or on a default-constructed handle).
  std::span<const std::uint8_t> bytes() const;
  StateRecord decode() const;

  bool valid() const;
  std::size_t size() const;

 private:
  struct Payload;
  explicit Snapshot(std::shared_ptr<Payload> p) : payload_(std::move(p)) {}
  std::shared_ptr<Payload> payload_;

  friend class Kernel;
  friend void free_state(Snapshot& snapshot);
};

/// Releases the snapshot payload. A second free throws kDoubleFree.
void free_state(Snapshot& snapshot);

/// One live simulation unit with an FMI Model Exchange style lifecycle:
///
///   Instantiated --initialize--> ContinuousTimeMode <--> EventMode
///         any non-terminated mode --terminate--> Terminated
///
/// Every call made in a disallowed mode throws kWrongMode and leaves the
/// instance untouched. Operations that integrate work on a copy of the state
/// and commit only on success.
class Kernel {
 public:
  /// Throws kInvalidConfig on bad tolerances.
  Kernel(ModelPtr model, KernelConfig config = {});

  /// Enters ContinuousTimeMode at t0 (model default if unset): start values,
  /// one event fixpoint, fresh solver.
  void initialize(std::optional<double> t0 = std::nullopt);

  /// Simulate(tau): advances time by exactly tau, processing every event in
  /// (t, t + tau].
  void simulate(double tau);

  /// Simulate*(tau, tau'): get, simulate(tau'), set, simulate(tau).
  void simulate_star(double tau, double tau_prime);

  Snapshot get_state() const;
  void set_state(const Snapshot& snapshot);

  // Piecewise-constant inputs change only in EventMode. Leaving EventMode
  // runs the event fixpoint and restarts the integrator at the current time.
  void enter_event_mode();
  void set_inputs(std::span<const double> u);
  void enter_continuous_time_mode();
  void terminate();

  /// SHA-256 over the canonical complete-state encoding. Valid in any mode.
  Digest fingerprint() const;
  StateRecord record() const;

  Mode mode() const { return mode_; }
  std::optional<double> time() const;
  std::span<const double> x() const { return x_; }
  std::span<const std::int64_t> d() const { return d_; }
  std::span<const double> u() const { return u_; }
  const SolverState& solver() const { return solver_; }
  const Model& model() const { return *model_; }
  const ModelPtr& model_ptr() const { return model_; }
  const KernelConfig& config() const { return config_; }
  const std::string& instance_id() const { return instance_id_; }

  /// Drops solver internals and reseeds them from the current (t, x), as an
  /// importer that only saves model variables would have to. Used to show
  /// that those internals matter.
  void reset_solver();

 private:
  void require_mode(std::initializer_list<Mode> allowed, const char* op) const;

  ModelPtr model_;
  KernelConfig config_;
  std::string instance_id_;

  Mode mode_ = Mode::kInstantiated;
  double t_;
  std::vector<double> x_;
  std::vector<std::int64_t> d_;
  std::vector<double> u_;
  SolverState solver_;
};

}  // namespace statesim
