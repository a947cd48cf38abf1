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

// Test-only models and closed-form oracles. Nothing here calls into the
// integrator; expected values are computed from the analytic solutions.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "statesim/kernel.hpp"
#include "statesim/model.hpp"

namespace statesim::testing {

// dx/dt = rate * x.
class Exponential final : public ModelBehavior {
 public:
  void derivatives(const EvalPoint& at, std::span<double> dx) const override {
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = at.p[0] * at.x[i];
  }
  void event_indicators(const EvalPoint&, std::span<double>) const override {}
  void handle_event(double, std::span<double>, std::span<std::int64_t>, std::span<const double>,
                    std::span<const double>) const override {}
  NamedOutputs outputs(const EvalPoint& at) const override { return {{"x", at.x[0]}}; }
};

inline ModelPtr make_exponential(double rate, std::vector<double> x0) {
  ModelSpec s;
  s.name = "test_exponential";
  s.n_x = x0.size();
  s.params = {rate};
  s.param_names = {"rate"};
  s.x0 = std::move(x0);
  return std::make_shared<const Model>(std::move(s), std::make_unique<Exponential>());
}

// x' = 0 with one indicator z = t - t_cross, used to exercise event plumbing
// without any continuous dynamics.
class Clock final : public ModelBehavior {
 public:
  void derivatives(const EvalPoint&, std::span<double> dx) const override {
    for (auto& v : dx) v = 0.0;
  }
  void event_indicators(const EvalPoint& at, std::span<double> z) const override {
    z[0] = at.t - at.p[0];
  }
  void handle_event(double, std::span<double>, std::span<std::int64_t> d, std::span<const double>,
                    std::span<const double>) const override {
    d[0] = 1;
  }
  NamedOutputs outputs(const EvalPoint&) const override { return {}; }
};

inline ModelPtr make_clock(double t_cross) {
  ModelSpec s;
  s.name = "test_clock";
  s.n_x = 1;
  s.n_z = 1;
  s.n_d = 1;
  s.params = {t_cross};
  s.param_names = {"t_cross"};
  s.x0 = {3.5};
  s.d0 = {0};
  return std::make_shared<const Model>(std::move(s), std::make_unique<Clock>());
}

// Handler that toggles the mode on every call: never reaches a fixpoint.
class Chatter final : public ModelBehavior {
 public:
  void derivatives(const EvalPoint&, std::span<double> dx) const override { dx[0] = -1.0; }
  void event_indicators(const EvalPoint& at, std::span<double> z) const override {
    z[0] = at.x[0];
  }
  void handle_event(double, std::span<double>, std::span<std::int64_t> d, std::span<const double>,
                    std::span<const double>) const override {
    d[0] = 1 - d[0];
  }
  NamedOutputs outputs(const EvalPoint&) const override { return {}; }
};

inline ModelPtr make_chatter() {
  ModelSpec s;
  s.name = "test_chatter";
  s.n_x = 1;
  s.n_z = 1;
  s.n_d = 1;
  s.x0 = {0.5};
  s.d0 = {0};
  return std::make_shared<const Model>(std::move(s), std::make_unique<Chatter>());
}

// --- closed forms ------------------------------------------------------------

/// Impact times of a ball dropped from rest at h0: t1 = sqrt(2 h0 / g), then
/// each flight lasts 2 e^k v1 / g with v1 = g t1.
inline std::vector<double> ball_impact_times(double h0, double g, double e, int n) {
  std::vector<double> t;
  const double t1 = std::sqrt(2.0 * h0 / g);
  const double v1 = g * t1;
  double tk = t1;
  double speed = v1;
  for (int k = 0; k < n; ++k) {
    t.push_back(tk);
    speed *= e;
    tk += 2.0 * speed / g;
  }
  return t;
}

/// Thermostat temperature under a fixed heater state:
/// T(t) = T* + (T0 - T*) exp(-k_cool t), T* = T_amb + heater * k_heat / k_cool.
inline double thermostat_temperature(double T0, double T_amb, double k_heat, double k_cool,
                                     bool heater, double t) {
  const double eq = T_amb + (heater ? k_heat / k_cool : 0.0);
  return eq + (T0 - eq) * std::exp(-k_cool * t);
}

/// Time for the same law to reach T_target.
inline double thermostat_time_to(double T0, double T_target, double T_amb, double k_heat,
                                 double k_cool, bool heater) {
  const double eq = T_amb + (heater ? k_heat / k_cool : 0.0);
  return std::log((eq - T0) / (eq - T_target)) / k_cool;
}

/// Smallest tau in [lo, hi] at which `reached(tau)` holds, to within tol.
/// Works for event times because the integration grid does not depend on
/// the stop time: every fresh run to tau sees the same event instant.
inline double first_time(const std::function<bool(double)>& reached, double lo, double hi,
                         double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (reached(mid) ? hi : lo) = mid;
  }
  return hi;
}

inline std::uint64_t events_after(const ModelPtr& m, double tau) {
  Kernel k(m);
  k.initialize();
  k.simulate(tau);
  return k.solver().n_events;
}

}  // namespace statesim::testing
