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

#include "statesim/validator.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>

#include "statesim/error.hpp"
#include "statesim/rng.hpp"

namespace statesim {

std::size_t required_trials(double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kParameterDomain, "epsilon must lie in (0,1)");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kParameterDomain, "delta must lie in (0,1)");
  }
  // Extended precision keeps the ceiling exact for ratios that sit close to
  // an integer in binary64.
  const long double ratio = std::log(static_cast<long double>(delta)) /
                            std::log1p(-static_cast<long double>(epsilon));
  const long double n = std::ceil(ratio);
  return n < 1.0L ? 1 : static_cast<std::size_t>(n);
}

bool Comparator::equal(const StateRecord& a, const StateRecord& b) const {
  if (kind == Kind::kBitwise) return encode_state(a) == encode_state(b);
  if (a.mode != b.mode || a.d != b.d || a.u != b.u || a.x.size() != b.x.size()) return false;
  if (!(std::abs(a.t - b.t) <= tol)) return false;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    if (!(std::abs(a.x[i] - b.x[i]) <= tol)) return false;
  }
  return true;
}

std::string Comparator::describe() const {
  return kind == Kind::kBitwise ? "bitwise" : "epsilon:" + std::to_string(tol);
}

void ValidationConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::kInvalidConfig, "epsilon must lie in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::kInvalidConfig, "delta must lie in (0,1)");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::kInvalidConfig, "tau must be >= 0");
  if (!(b_lo >= 0.0) || !(b_lo <= b_hi) || !std::isfinite(b_hi)) {
    throw Error(ErrorCode::kInvalidConfig, "B must be a bounded interval 0 <= b_lo <= b_hi");
  }
  if (n_sequence < 1) throw Error(ErrorCode::kInvalidConfig, "n_sequence must be >= 1");
  if (comparator.kind == Comparator::Kind::kTolerance && !(comparator.tol >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "comparator tolerance must be >= 0");
  }
  if (jobs < 1) throw Error(ErrorCode::kInvalidConfig, "jobs must be >= 1");
  kernel.solver.validate();
}

namespace {

std::size_t draws_per_trial(const ValidationConfig& c) {
  return c.sampling == Sampling::kPerStep ? c.n_sequence : 1;
}

double tau_prime_at(const ValidationConfig& c, const std::vector<double>& draws, std::size_t trial,
                    std::size_t step) {
  const std::size_t per = draws_per_trial(c);
  return draws[trial * per + (per == 1 ? 0 : step)];
}

// Outcome of one trial: nullopt when every step agreed.
std::optional<Counterexample> run_trial(const ModelPtr& model, const ValidationConfig& c,
                                        const std::vector<double>& draws, std::size_t trial) {
  double tau_prime = 0.0;
  std::size_t step = 0;
  try {
    Kernel a(model, c.kernel);
    Kernel b(model, c.kernel);
    a.initialize();
    b.initialize();
    for (step = 0; step < c.n_sequence; ++step) {
      tau_prime = tau_prime_at(c, draws, trial, step);
      a.simulate(c.tau);
      b.simulate_star(c.tau, tau_prime);
      const StateRecord ra = a.record();
      const StateRecord rb = b.record();
      if (!c.comparator.equal(ra, rb)) {
        return Counterexample{tau_prime, trial + 1, step + 1, state_digest(ra), state_digest(rb)};
      }
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::kSimulationAborted,
                "trial " + std::to_string(trial + 1) + ", step " + std::to_string(step + 1) +
                    ", tau'=" + std::to_string(tau_prime) + ": " + e.what());
  }
  return std::nullopt;
}

}  // namespace

std::vector<double> draw_tau_primes(const ValidationConfig& config, std::size_t n_trials) {
  SplitMix64 rng(config.seed);
  std::vector<double> out(n_trials * draws_per_trial(config));
  for (auto& v : out) v = rng.uniform(config.b_lo, config.b_hi);
  return out;
}

Verdict run_validation(const ModelPtr& model, const ValidationConfig& config) {
  config.validate();
  return config.jobs <= 1 ? run_validation_serial(model, config)
                          : run_validation_parallel(model, config, config.jobs);
}

Verdict run_validation_serial(const ModelPtr& model, const ValidationConfig& config) {
  config.validate();
  const std::size_t n = required_trials(config.epsilon, config.delta);
  const auto draws = draw_tau_primes(config, n);
  Verdict v;
  v.required = n;
  v.confidence = 1.0 - config.delta;
  for (std::size_t trial = 0; trial < n; ++trial) {
    v.trials_run = trial + 1;
    if (auto cex = run_trial(model, config, draws, trial)) {
      v.counterexample = *cex;
      v.passed = false;
      return v;
    }
  }
  v.passed = true;
  return v;
}

Verdict run_validation_parallel(const ModelPtr& model, const ValidationConfig& config, int jobs) {
  config.validate();
  const std::size_t n = required_trials(config.epsilon, config.delta);
  const auto draws = draw_tau_primes(config, n);

  std::vector<std::optional<Counterexample>> found(n);
  std::vector<std::exception_ptr> failed(n);
  // Lowest trial index that ended the run so far; later trials are skipped.
  std::atomic<std::size_t> first_stop{n};

#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto trial = static_cast<std::size_t>(i);
    if (trial > first_stop.load()) continue;
    bool stop = false;
    try {
      found[trial] = run_trial(model, config, draws, trial);
      stop = found[trial].has_value();
    } catch (...) {
      failed[trial] = std::current_exception();
      stop = true;
    }
    if (stop) {
      std::size_t cur = first_stop.load();
      while (trial < cur && !first_stop.compare_exchange_weak(cur, trial)) {
      }
    }
  }

  Verdict v;
  v.required = n;
  v.confidence = 1.0 - config.delta;
  const std::size_t stop = first_stop.load();
  if (stop == n) {
    v.passed = true;
    v.trials_run = n;
    return v;
  }
  if (failed[stop]) std::rethrow_exception(failed[stop]);
  v.passed = false;
  v.trials_run = stop + 1;
  v.counterexample = found[stop];
  return v;
}

DivergenceReport replay_counterexample(const ModelPtr& model, const ValidationConfig& config,
                                       double tau_prime, std::size_t step) {
  config.validate();
  if (step < 1 || step > config.n_sequence) {
    throw Error(ErrorCode::kParameterDomain, "step " + std::to_string(step) +
                                                 " outside [1, n_sequence=" +
                                                 std::to_string(config.n_sequence) + "]");
  }
  if (!(tau_prime >= config.b_lo && tau_prime <= config.b_hi)) {
    throw Error(ErrorCode::kParameterDomain, "tau' outside B");
  }
  Kernel a(model, config.kernel);
  Kernel b(model, config.kernel);
  a.initialize();
  b.initialize();
  for (std::size_t i = 1; i < step; ++i) {
    a.simulate(config.tau);
    b.simulate(config.tau);
  }
  a.simulate(config.tau);
  b.simulate_star(config.tau, tau_prime);

  DivergenceReport r;
  r.tau_prime = tau_prime;
  r.step = step;
  r.state_a = a.record();
  r.state_b = b.record();
  r.fingerprint_a = state_digest(r.state_a);
  r.fingerprint_b = state_digest(r.state_b);
  r.diverged = !config.comparator.equal(r.state_a, r.state_b);
  return r;
}

// --- JSON ----------------------------------------------------------------------

nlohmann::json to_json(const Verdict& v, const ValidationConfig& c, const std::string& model_name) {
  nlohmann::json j;
  j["schema"] = "statesim.verdict/1";
  j["model"] = model_name;
  j["passed"] = v.passed;
  j["trials"] = v.trials_run;
  j["N"] = v.required;
  j["epsilon"] = c.epsilon;
  j["delta"] = c.delta;
  j["confidence"] = v.confidence;
  j["seed"] = c.seed;
  j["tau"] = c.tau;
  j["b"] = {c.b_lo, c.b_hi};
  j["n_sequence"] = c.n_sequence;
  j["sampling"] = c.sampling == Sampling::kPerStep ? "per-step" : "per-trial";
  j["comparator"] = c.comparator.describe();
  j["fault"] = to_string(c.kernel.fault);
  if (v.counterexample) {
    const auto& cx = *v.counterexample;
    j["counterexample"] = {{"tau_prime", cx.tau_prime},
                           {"trial", cx.trial},
                           {"step", cx.step},
                           {"fingerprint_a", cx.fingerprint_a.hex()},
                           {"fingerprint_b", cx.fingerprint_b.hex()}};
  }
  return j;
}

nlohmann::json to_json(const StateRecord& s) {
  const auto& sv = s.solver;
  std::vector<int> zs(sv.z_signs.begin(), sv.z_signs.end());
  return {{"mode", to_string(s.mode)},
          {"t", s.t},
          {"x", s.x},
          {"d", s.d},
          {"u", s.u},
          {"solver",
           {{"h_next", sv.h_next},
            {"last_step_rejected", sv.last_step_rejected},
            {"n_steps", sv.n_steps},
            {"n_rejections", sv.n_rejections},
            {"n_fevals", sv.n_fevals},
            {"n_events", sv.n_events},
            {"t_int", sv.t_int},
            {"t_prev", sv.t_prev},
            {"x_int", sv.x_int},
            {"z_signs", zs},
            {"pending_event", sv.pending_event},
            {"t_event", sv.t_event}}}};
}

nlohmann::json to_json(const DivergenceReport& r) {
  nlohmann::json j;
  j["schema"] = "statesim.replay/1";
  j["diverged"] = r.diverged;
  j["result"] = r.diverged ? "divergence reproduced" : "no divergence";
  j["tau_prime"] = r.tau_prime;
  j["step"] = r.step;
  j["fingerprint_a"] = r.fingerprint_a.hex();
  j["fingerprint_b"] = r.fingerprint_b.hex();
  j["state_a"] = to_json(r.state_a);
  j["state_b"] = to_json(r.state_b);
  return j;
}

}  // namespace statesim
