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

#include "statesim/model.hpp"

#include <cmath>
#include <cstring>
#include <json.hpp>

#include "statesim/bytes.hpp"
#include "statesim/error.hpp"

namespace statesim {

namespace {

Digest model_fingerprint(const ModelSpec& spec) {
  ByteWriter w;
  w.put_magic("MDL1");
  w.put_blob(std::span(reinterpret_cast<const std::uint8_t*>(spec.name.data()), spec.name.size()));
  w.put_f64_vec(spec.params);
  return sha256(w.bytes());
}

void check_spec(const ModelSpec& s) {
  if (s.n_x < 1) throw Error(ErrorCode::kParameterDomain, s.name + ": n_x must be >= 1");
  if (s.x0.size() != s.n_x) throw Error(ErrorCode::kParameterDomain, s.name + ": |x0| != n_x");
  if (s.d0.size() != s.n_d) throw Error(ErrorCode::kParameterDomain, s.name + ": |d0| != n_d");
  if (s.inputs.size() != s.u0.size()) {
    throw Error(ErrorCode::kParameterDomain, s.name + ": input ranges do not match u0");
  }
  if (s.param_names.size() != s.params.size()) {
    throw Error(ErrorCode::kParameterDomain, s.name + ": parameter names do not match values");
  }
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

// --- bouncing ball ---------------------------------------------------------

enum BallParam : std::size_t { kH0, kV0, kG, kE, kVRest };

class BouncingBall final : public ModelBehavior {
 public:
  void derivatives(const EvalPoint& at, std::span<double> dx) const override {
    const double h = at.x[0];
    const double v = at.x[1];
    const double a = -at.p[kG] + at.u[0];
    if (h == 0.0 && v == 0.0 && a <= 0.0) {
      dx[0] = 0.0;
      dx[1] = 0.0;
      return;
    }
    dx[0] = v;
    dx[1] = a;
  }

  void event_indicators(const EvalPoint& at, std::span<double> z) const override { z[0] = at.x[0]; }

  void handle_event(double, std::span<double> x, std::span<std::int64_t>, std::span<const double>,
                    std::span<const double> p) const override {
    const double h = x[0];
    const double v = x[1];
    if (!(h <= 0.0 && v < 0.0)) return;
    const double rebound = -p[kE] * v;
    if (rebound < p[kVRest]) {
      x[0] = 0.0;
      x[1] = 0.0;
    } else {
      x[0] = std::abs(h);
      x[1] = rebound;
    }
  }

  NamedOutputs outputs(const EvalPoint& at) const override {
    const double h = at.x[0];
    const double v = at.x[1];
    return {{"height", h}, {"velocity", v}, {"energy", 0.5 * v * v + at.p[kG] * h}};
  }
};

// --- Van der Pol -------------------------------------------------------------

enum VdpParam : std::size_t { kMu, kX1, kX2 };

class VanDerPol final : public ModelBehavior {
 public:
  void derivatives(const EvalPoint& at, std::span<double> dx) const override {
    const double x1 = at.x[0];
    const double x2 = at.x[1];
    dx[0] = x2;
    dx[1] = at.p[kMu] * (1.0 - x1 * x1) * x2 - x1 + at.u[0];
  }
  void event_indicators(const EvalPoint&, std::span<double>) const override {}
  void handle_event(double, std::span<double>, std::span<std::int64_t>, std::span<const double>,
                    std::span<const double>) const override {}
  NamedOutputs outputs(const EvalPoint& at) const override {
    return {{"x1", at.x[0]}, {"x2", at.x[1]}};
  }
};

// --- thermostat --------------------------------------------------------------

enum ThermoParam : std::size_t { kT0, kTLow, kTHigh, kHeat, kCool, kAmb, kHeater0 };

class Thermostat final : public ModelBehavior {
 public:
  void derivatives(const EvalPoint& at, std::span<double> dx) const override {
    const double heating = at.d[0] != 0 ? at.p[kHeat] : 0.0;
    dx[0] = -at.p[kCool] * (at.x[0] - at.u[0]) + heating;
  }

  // Only the threshold that can switch the relay in the current mode is
  // armed; the other indicator is parked at -1. Both armed indicators are
  // positive inside the band, so each switch is exactly one downward
  // crossing and the temperature cannot chatter back across the threshold
  // it just hit.
  void event_indicators(const EvalPoint& at, std::span<double> z) const override {
    const bool on = at.d[0] != 0;
    z[0] = on ? -1.0 : at.x[0] - at.p[kTLow];
    z[1] = on ? at.p[kTHigh] - at.x[0] : -1.0;
  }

  void handle_event(double, std::span<double> x, std::span<std::int64_t> d,
                    std::span<const double>, std::span<const double> p) const override {
    if (x[0] <= p[kTLow]) {
      d[0] = 1;
    } else if (x[0] >= p[kTHigh]) {
      d[0] = 0;
    }
  }

  NamedOutputs outputs(const EvalPoint& at) const override {
    return {{"temperature", at.x[0]}, {"heater", static_cast<double>(at.d[0])}};
  }
};

}  // namespace

Model::Model(ModelSpec spec, std::unique_ptr<const ModelBehavior> behavior)
    : spec_(std::move(spec)), behavior_(std::move(behavior)) {
  check_spec(spec_);
  fingerprint_ = model_fingerprint(spec_);
}

std::size_t event_fixpoint(const Model& model, double t, std::span<double> x,
                           std::span<std::int64_t> d, std::span<const double> u) {
  const std::size_t n_z = model.spec().n_z;
  if (n_z == 0) return 0;
  std::vector<double> x_before(x.begin(), x.end());
  std::vector<std::int64_t> d_before(d.begin(), d.end());
  std::size_t changes = 0;
  for (;;) {
    model.handle_event(t, x, d, u);
    const bool changed = !same_bits(x, x_before) || !std::equal(d.begin(), d.end(), d_before.begin());
    if (!changed) return changes;
    if (++changes > n_z) {
      throw Error(ErrorCode::kEventIterationOverflow,
                  model.name() + ": event handler did not reach a fixpoint within " +
                      std::to_string(n_z) + " iterations at t=" + std::to_string(t));
    }
    std::copy(x.begin(), x.end(), x_before.begin());
    std::copy(d.begin(), d.end(), d_before.begin());
  }
}

ModelPtr make_bouncing_ball(const BouncingBallParams& p) {
  if (!(p.g > 0.0)) throw Error(ErrorCode::kParameterDomain, "bouncing_ball: g must be > 0");
  if (!(p.e > 0.0 && p.e < 1.0)) {
    throw Error(ErrorCode::kParameterDomain, "bouncing_ball: restitution e must lie in (0,1)");
  }
  if (!(p.h0 >= 0.0)) throw Error(ErrorCode::kParameterDomain, "bouncing_ball: h0 must be >= 0");
  if (!(p.v_rest >= 0.0)) throw Error(ErrorCode::kParameterDomain, "bouncing_ball: v_rest must be >= 0");
  if (!std::isfinite(p.v0)) throw Error(ErrorCode::kParameterDomain, "bouncing_ball: v0 must be finite");
  ModelSpec s;
  s.name = "bouncing_ball";
  s.n_x = 2;
  s.n_z = 1;
  s.n_d = 0;
  s.params = {p.h0, p.v0, p.g, p.e, p.v_rest};
  s.param_names = {"h0", "v0", "g", "e", "v_rest"};
  s.x0 = {p.h0, p.v0};
  s.u0 = {0.0};
  s.inputs = {{"accel", -2.0, 2.0}};
  return std::make_shared<const Model>(std::move(s), std::make_unique<BouncingBall>());
}

ModelPtr make_van_der_pol(const VanDerPolParams& p) {
  if (!(p.mu >= 0.0) || !std::isfinite(p.mu)) {
    throw Error(ErrorCode::kParameterDomain, "van_der_pol: mu must be >= 0");
  }
  if (!std::isfinite(p.x1) || !std::isfinite(p.x2)) {
    throw Error(ErrorCode::kParameterDomain, "van_der_pol: initial state must be finite");
  }
  ModelSpec s;
  s.name = "van_der_pol";
  s.n_x = 2;
  s.params = {p.mu, p.x1, p.x2};
  s.param_names = {"mu", "x1", "x2"};
  s.x0 = {p.x1, p.x2};
  s.u0 = {0.0};
  s.inputs = {{"force", -1.0, 1.0}};
  return std::make_shared<const Model>(std::move(s), std::make_unique<VanDerPol>());
}

ModelPtr make_thermostat(const ThermostatParams& p) {
  if (!(p.T_low < p.T_high)) {
    throw Error(ErrorCode::kParameterDomain, "thermostat: T_low must be < T_high");
  }
  if (!(p.k_heat > 0.0) || !(p.k_cool > 0.0)) {
    throw Error(ErrorCode::kParameterDomain, "thermostat: k_heat and k_cool must be > 0");
  }
  if (!std::isfinite(p.T0) || !std::isfinite(p.T_amb)) {
    throw Error(ErrorCode::kParameterDomain, "thermostat: temperatures must be finite");
  }
  ModelSpec s;
  s.name = "thermostat";
  s.n_x = 1;
  s.n_z = 2;
  s.n_d = 1;
  s.params = {p.T0, p.T_low, p.T_high, p.k_heat, p.k_cool, p.T_amb, p.heater_on ? 1.0 : 0.0};
  s.param_names = {"T0", "T_low", "T_high", "k_heat", "k_cool", "T_amb", "heater_on"};
  s.x0 = {p.T0};
  s.d0 = {p.heater_on ? 1 : 0};
  s.u0 = {p.T_amb};
  s.inputs = {{"T_amb", p.T_amb - 5.0, p.T_amb + 5.0}};
  return std::make_shared<const Model>(std::move(s), std::make_unique<Thermostat>());
}

std::vector<std::string> builtin_model_names() {
  return {"bouncing_ball", "van_der_pol", "thermostat"};
}

namespace {

template <typename Fn>
void for_each_key(const nlohmann::json& j, const std::string& model, Fn&& assign) {
  if (!j.is_object()) throw Error(ErrorCode::kParameterDomain, model + ": params must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!assign(key, value)) {
      throw Error(ErrorCode::kParameterDomain, model + ": unknown parameter \"" + key + "\"");
    }
  }
}

}  // namespace

ModelPtr make_model(const std::string& name, const std::string& params_json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(params_json.empty() ? "{}" : params_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParameterDomain, "invalid params JSON: " + std::string(e.what()));
  }
  try {
    if (name == "bouncing_ball") {
      BouncingBallParams p;
      for_each_key(j, name, [&](const std::string& k, const nlohmann::json& v) {
        if (k == "h0") p.h0 = v.get<double>();
        else if (k == "v0") p.v0 = v.get<double>();
        else if (k == "g") p.g = v.get<double>();
        else if (k == "e") p.e = v.get<double>();
        else if (k == "v_rest") p.v_rest = v.get<double>();
        else return false;
        return true;
      });
      return make_bouncing_ball(p);
    }
    if (name == "van_der_pol") {
      VanDerPolParams p;
      for_each_key(j, name, [&](const std::string& k, const nlohmann::json& v) {
        if (k == "mu") p.mu = v.get<double>();
        else if (k == "x1") p.x1 = v.get<double>();
        else if (k == "x2") p.x2 = v.get<double>();
        else return false;
        return true;
      });
      return make_van_der_pol(p);
    }
    if (name == "thermostat") {
      ThermostatParams p;
      for_each_key(j, name, [&](const std::string& k, const nlohmann::json& v) {
        if (k == "T0") p.T0 = v.get<double>();
        else if (k == "T_low") p.T_low = v.get<double>();
        else if (k == "T_high") p.T_high = v.get<double>();
        else if (k == "k_heat") p.k_heat = v.get<double>();
        else if (k == "k_cool") p.k_cool = v.get<double>();
        else if (k == "T_amb") p.T_amb = v.get<double>();
        else if (k == "heater_on") p.heater_on = v.get<bool>();
        else return false;
        return true;
      });
      return make_thermostat(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParameterDomain, name + ": bad parameter value: " + e.what());
  }
  throw Error(ErrorCode::kParameterDomain, "unknown model \"" + name + "\"");
}

}  // namespace statesim
