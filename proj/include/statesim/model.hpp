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
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "statesim/digest.hpp"

namespace statesim {

/// Admissible range of one piecewise-constant input; the campaign generator
/// draws overrides from it.
struct InputRange {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

struct ModelSpec {
  std::string name;
  std::size_t n_x = 0;
  std::size_t n_z = 0;
  std::size_t n_d = 0;
  std::vector<double> params;
  std::vector<std::string> param_names;
  std::vector<double> x0;
  std::vector<std::int64_t> d0;
  std::vector<double> u0;
  std::vector<InputRange> inputs;
  double t0 = 0.0;

  std::size_t n_u() const { return u0.size(); }
};

/// Read-only view of everything a model function may look at.
struct EvalPoint {
  double t;
  std::span<const double> x;
  std::span<const std::int64_t> d;
  std::span<const double> u;
  std::span<const double> p;
};

using NamedOutputs = std::vector<std::pair<std::string, double>>;

/// The right-hand side, event indicators and event handler of a hybrid ODE.
/// Implementations must be pure: identical arguments give bitwise-identical
/// results, and the discrete vector only changes inside handle_event.
class ModelBehavior {
 public:
  virtual ~ModelBehavior() = default;

  virtual void derivatives(const EvalPoint& at, std::span<double> dx) const = 0;
  virtual void event_indicators(const EvalPoint& at, std::span<double> z) const = 0;
  // Applied when any indicator changes sign. Must be idempotent at a fixed
  // crossing: a second application at the same point changes nothing.
  virtual void handle_event(double t, std::span<double> x, std::span<std::int64_t> d,
                            std::span<const double> u, std::span<const double> p) const = 0;
  virtual NamedOutputs outputs(const EvalPoint& at) const = 0;
};

/// Immutable model definition; shared across instances and threads.
class Model {
 public:
  Model(ModelSpec spec, std::unique_ptr<const ModelBehavior> behavior);

  const ModelSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  const ModelBehavior& behavior() const { return *behavior_; }

  /// SHA-256 over the model name and parameter vector; guards snapshot reuse.
  const Digest& fingerprint() const { return fingerprint_; }

  void derivatives(double t, std::span<const double> x, std::span<const std::int64_t> d,
                   std::span<const double> u, std::span<double> dx) const {
    behavior_->derivatives(EvalPoint{t, x, d, u, spec_.params}, dx);
  }
  void event_indicators(double t, std::span<const double> x, std::span<const std::int64_t> d,
                        std::span<const double> u, std::span<double> z) const {
    behavior_->event_indicators(EvalPoint{t, x, d, u, spec_.params}, z);
  }
  void handle_event(double t, std::span<double> x, std::span<std::int64_t> d,
                    std::span<const double> u) const {
    behavior_->handle_event(t, x, d, u, spec_.params);
  }
  NamedOutputs outputs(double t, std::span<const double> x, std::span<const std::int64_t> d,
                       std::span<const double> u) const {
    return behavior_->outputs(EvalPoint{t, x, d, u, spec_.params});
  }

 private:
  ModelSpec spec_;
  std::unique_ptr<const ModelBehavior> behavior_;
  Digest fingerprint_;
};

using ModelPtr = std::shared_ptr<const Model>;

/// Applies the event handler until a fixpoint is reached. At most n_z state
/// changes are allowed at one instant; one more change throws
/// kEventIterationOverflow. Returns the number of changing iterations.
std::size_t event_fixpoint(const Model& model, double t, std::span<double> x,
                           std::span<std::int64_t> d, std::span<const double> u);

// ---------------------------------------------------------------------------
// Built-in models.

struct BouncingBallParams {
  double h0 = 1.0;
  double v0 = 0.0;
  double g = 9.81;
  double e = 0.7;
  // Post-impact speed below which the ball is put to rest at h = v = 0.
  double v_rest = 1e-2;
};

/// x = (height, velocity), z = height, no discrete state. One input: an extra
/// vertical acceleration added to gravity.
ModelPtr make_bouncing_ball(const BouncingBallParams& p = {});

struct VanDerPolParams {
  double mu = 1.0;
  double x1 = 2.0;
  double x2 = 0.0;
};

/// x1' = x2, x2' = mu (1 - x1^2) x2 - x1 + u. No events.
ModelPtr make_van_der_pol(const VanDerPolParams& p = {});

struct ThermostatParams {
  double T0 = 20.0;
  double T_low = 18.0;
  double T_high = 22.0;
  double k_heat = 10.0;
  double k_cool = 0.5;
  double T_amb = 10.0;
  bool heater_on = false;
};

/// Newton cooling towards the ambient temperature (the model's single input)
/// plus a constant heating rate while the heater is on. Hysteresis relay:
/// reaching T_low switches the heater on, reaching T_high switches it off.
ModelPtr make_thermostat(const ThermostatParams& p = {});

/// Names accepted by make_model.
std::vector<std::string> builtin_model_names();

/// Builds a model by name from a JSON object of parameter overrides (keys are
/// the fields of the corresponding *Params struct). Unknown names or keys
/// throw kParameterDomain.
ModelPtr make_model(const std::string& name, const std::string& params_json = "{}");

}  // namespace statesim
