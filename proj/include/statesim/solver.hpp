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
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "statesim/bytes.hpp"
#include "statesim/model.hpp"

namespace statesim {

struct SolverConfig {
  double rtol = 1e-8;
  double atol = 1e-10;
  // Event brackets are shrunk below event_tol_rel * max(1, |t|).
  double event_tol_rel = 1e-12;
  double h_min = 1e-14;
  // Bounds the grid so that endpoint sign checks cannot step over a pair of
  // crossings when the error estimate vanishes (polynomial trajectories).
  double h_max = 0.1;

  // Throws kInvalidConfig.
  void validate() const;
};

namespace controller {
inline constexpr double kSafety = 0.9;
inline constexpr double kFacMin = 0.2;
inline constexpr double kFacMax = 5.0;
}  // namespace controller

/// Everything the integrator needs to resume bit-for-bit.
///
/// The integrator runs on its own grid: (t_int, x_int) is the last accepted
/// point and (t_prev, x_prev) the one before it. The caller's output time may
/// lie anywhere in [t_prev, t_int]; output states are read off the cubic
/// Hermite interpolant of the last step. Because stopping never truncates a
/// step, advancing by a then b walks exactly the grid that advancing by a+b
/// walks. The flip side is that restoring only (t, x) is not enough to
/// reproduce a run; this struct is the rest.
struct SolverState {
  double rtol = 0.0;
  double atol = 0.0;
  double h_next = 0.0;
  bool last_step_rejected = false;
  std::uint64_t n_steps = 0;
  std::uint64_t n_rejections = 0;
  std::uint64_t n_fevals = 0;
  std::uint64_t n_events = 0;

  double t_int = 0.0;
  double t_prev = 0.0;
  std::vector<double> x_int;
  std::vector<double> x_prev;
  std::vector<double> k_int;   // f(t_int, x_int)
  std::vector<double> k_prev;  // f(t_prev, x_prev)

  // z_i > 0 at (t_int, x_int).
  std::vector<std::uint8_t> z_signs;

  // A crossing located inside the last step but beyond the last output time.
  bool pending_event = false;
  double t_event = 0.0;
};

/// Fresh solver at (t, x): derivative and indicator signs evaluated, initial
/// step size chosen by the usual two-evaluation heuristic.
SolverState seed_solver(const Model& model, const SolverConfig& cfg, double t,
                        std::span<const double> x, std::span<const std::int64_t> d,
                        std::span<const double> u);

/// Moves the integration point to (t, x) after a discontinuity (event or
/// input change). Keeps h_next, tolerances and counters; clears any pending
/// event and re-reads derivative and indicator signs.
void restart_solver(const Model& model, SolverState& s, double t, std::span<const double> x,
                    std::span<const std::int64_t> d, std::span<const double> u);

struct StepResult {
  bool accepted = false;
  double h = 0.0;
  double error = 0.0;  // weighted RMS norm; accepted iff <= 1
};

/// One attempted Bogacki-Shampine 3(2) step from (t_int, x_int) with size
/// min(h_next, h_max). Throws kIntegrationFailure when the step size falls
/// below h_min.
StepResult step(const Model& model, const SolverConfig& cfg, SolverState& s,
                std::span<const std::int64_t> d, std::span<const double> u);

/// Bisection for a point where `crossed` turns true on (t_lo, t_hi].
/// `crossed(t_hi)` must be true and `crossed(t_lo)` false. Returns the right
/// end of the final bracket, whose width is at most `tol`.
double locate_event(const std::function<bool(double)>& crossed, double t_lo, double t_hi,
                    double tol);

/// State on the last accepted step at time t (cubic Hermite).
std::vector<double> interpolate(const SolverState& s, double t);

/// Integrates until t_target is covered, processing every state event with
/// time <= t_target, and returns the state at t_target. `d` is updated by
/// event handlers.
std::vector<double> advance(const Model& model, const SolverConfig& cfg, SolverState& s,
                            std::span<std::int64_t> d, std::span<const double> u,
                            double t_target);

/// "SSV1" blob; layout documented in docs/wire_formats.md.
Bytes snapshot_solver(const SolverState& s);
SolverState restore_solver(std::span<const std::uint8_t> blob);

inline constexpr std::uint16_t kSolverBlobVersion = 1;

}  // namespace statesim
