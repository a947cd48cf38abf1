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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "statesim/error.hpp"
#include "statesim/model.hpp"
#include "statesim/solver.hpp"
#include "support.hpp"

using namespace statesim;

namespace {

std::string hex(std::span<const std::uint8_t> b) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto c : b) {
    s += digits[c >> 4];
    s += digits[c & 15];
  }
  return s;
}

const std::vector<std::int64_t> kNoD;
const std::vector<double> kNoU;

std::vector<double> integrate_exponential(double rtol, double t_end) {
  const auto m = statesim::testing::make_exponential(1.0, {1.0});
  SolverConfig cfg;
  cfg.rtol = rtol;
  cfg.atol = rtol * 1e-2;
  std::vector<double> x0{1.0};
  auto s = seed_solver(*m, cfg, 0.0, x0, kNoD, kNoU);
  std::vector<std::int64_t> d;
  return advance(*m, cfg, s, d, kNoU, t_end);
}

}  // namespace

TEST_SUITE("solver.step") {
  TEST_CASE("zero vector field: every step accepted, state bitwise unchanged") {
    const auto m = statesim::testing::make_exponential(0.0, {0.3, -7.25, 1e300});
    SolverConfig cfg;
    auto s = seed_solver(*m, cfg, 0.0, m->spec().x0, kNoD, kNoU);
    for (int i = 0; i < 20; ++i) {
      const auto r = step(*m, cfg, s, kNoD, kNoU);
      CHECK(r.accepted);
      CHECK(s.x_int == m->spec().x0);
    }
  }

  TEST_CASE("exponential growth: error at t = 1 is within 10 rtol") {
    for (double rtol : {1e-6, 1e-8, 1e-10}) {
      const auto x = integrate_exponential(rtol, 1.0);
      CHECK_MESSAGE(std::abs(x[0] - std::numbers::e) <= 10 * rtol, "rtol ", rtol);
    }
  }

  TEST_CASE("identical inputs give bitwise identical steps") {
    const auto m = make_van_der_pol();
    SolverConfig cfg;
    const std::vector<std::int64_t> d;
    const std::vector<double> u{0.0};
    auto a = seed_solver(*m, cfg, 0.0, m->spec().x0, d, u);
    for (int i = 0; i < 5; ++i) step(*m, cfg, a, d, u);
    auto b = a;
    const auto ra = step(*m, cfg, a, d, u);
    const auto rb = step(*m, cfg, b, d, u);
    CHECK(ra.accepted == rb.accepted);
    CHECK(ra.h == rb.h);
    CHECK(snapshot_solver(a) == snapshot_solver(b));
  }

  TEST_CASE("rejected steps do not grow the next step") {
    // A tight tolerance on a fast transient forces rejections.
    const auto m = statesim::testing::make_exponential(-200.0, {1.0});
    SolverConfig cfg;
    cfg.rtol = 1e-12;
    cfg.atol = 1e-14;
    auto s = seed_solver(*m, cfg, 0.0, m->spec().x0, kNoD, kNoU);
    s.h_next = 0.05;
    const auto r = step(*m, cfg, s, kNoD, kNoU);
    CHECK_FALSE(r.accepted);
    CHECK(s.last_step_rejected);
    CHECK(s.h_next < 0.05);
    CHECK(s.h_next >= controller::kFacMin * 0.05);
  }

  TEST_CASE("step size collapse is an integration failure") {
    const auto m = statesim::testing::make_exponential(-200.0, {1.0});
    SolverConfig cfg;
    cfg.rtol = 1e-12;
    cfg.atol = 1e-14;
    cfg.h_min = 1e-2;
    auto s = seed_solver(*m, cfg, 0.0, m->spec().x0, kNoD, kNoU);
    s.h_next = 0.05;
    try {
      for (int i = 0; i < 10; ++i) step(*m, cfg, s, kNoD, kNoU);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kIntegrationFailure);
    }
  }

  TEST_CASE("invalid solver configurations are rejected") {
    SolverConfig cfg;
    cfg.rtol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.atol = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.h_max = cfg.h_min / 2;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}

TEST_SUITE("solver.advance") {
  TEST_CASE("advancing to the current time takes no steps") {
    const auto m = make_van_der_pol();
    SolverConfig cfg;
    std::vector<std::int64_t> d;
    const std::vector<double> u{0.0};
    auto s = seed_solver(*m, cfg, 0.0, m->spec().x0, d, u);
    const auto before = snapshot_solver(s);
    const auto x = advance(*m, cfg, s, d, u, 0.0);
    CHECK(x == m->spec().x0);
    CHECK(snapshot_solver(s) == before);
    CHECK(s.n_steps == 0);
  }

  TEST_CASE("ball dropped from 1 m sees exactly one impact by t = 1") {
    const auto expected = statesim::testing::ball_impact_times(1.0, 9.81, 0.7, 2);
    CHECK(expected[0] < 1.0);
    CHECK(expected[1] > 1.0);
    CHECK(expected[1] == doctest::Approx(expected[0] * (1 + 2 * 0.7)));
    CHECK(statesim::testing::events_after(make_bouncing_ball(), 1.0) == 1);
  }

  TEST_CASE("events are processed at the located instant") {
    const auto m = statesim::testing::make_clock(0.5);
    SolverConfig cfg;
    std::vector<double> x0{3.5};
    std::vector<std::int64_t> d{0};
    auto s = seed_solver(*m, cfg, 0.0, x0, d, kNoU);
    auto x = advance(*m, cfg, s, d, kNoU, 0.49);
    CHECK(d[0] == 0);
    x = advance(*m, cfg, s, d, kNoU, 0.51);
    CHECK(d[0] == 1);
    CHECK(s.n_events == 1);
    // The integrator restarted at the event: it is the left end of the
    // current step.
    CHECK(std::abs(s.t_prev - 0.5) <= 2 * cfg.event_tol_rel);
    CHECK(x[0] == 3.5);
  }
}

TEST_SUITE("solver.locate_event") {
  TEST_CASE("linear indicator root") {
    const double tol = 1e-12;
    const double t = locate_event([](double t) { return t - 0.5 > 0; }, 0.0, 1.0, tol);
    CHECK(t > 0.5);
    CHECK(t - 0.5 <= tol);
  }

  TEST_CASE("ball first impact on its free-fall bracket") {
    const double g = 9.81;
    const double t1 = std::sqrt(2.0 / g);
    const double tol = 1e-12;
    const double t =
        locate_event([&](double t) { return !(1.0 - 0.5 * g * t * t > 0); }, 0.4, 0.5, tol);
    CHECK(std::abs(t - t1) <= tol);
  }

  TEST_CASE("converged bracket returns without bisecting") {
    int calls = 0;
    const double t = locate_event(
        [&](double) {
          ++calls;
          return true;
        },
        1.0, 1.0 + 1e-13, 1e-12);
    CHECK(t == 1.0 + 1e-13);
    CHECK(calls == 1);  // only the precondition check at t_hi
  }
}

TEST_SUITE("solver.blob") {
  TEST_CASE("golden bytes for a small solver state") {
    SolverState s;
    s.rtol = 1.0;
    s.atol = 0.5;
    s.h_next = 2.0;
    s.last_step_rejected = true;
    s.n_steps = 3;
    s.n_rejections = 1;
    s.n_fevals = 0x0102;
    s.n_events = 0;
    s.t_int = 1.0;
    s.t_prev = 0.0;
    s.x_int = {-2.0};
    s.x_prev = {0.5};
    s.k_int = {1.0};
    s.k_prev = {0.0};
    s.z_signs = {1, 0};
    s.pending_event = false;
    s.t_event = 0.0;
    const std::string expected =
        "53535631"                                        // "SSV1"
        "0100"                                            // version 1
        "000000000000f03f"                                // rtol 1.0
        "000000000000e03f"                                // atol 0.5
        "0000000000000040"                                // h_next 2.0
        "01"                                              // rejected
        "0300000000000000" "0100000000000000"             // steps, rejections
        "0201000000000000" "0000000000000000"             // fevals, events
        "000000000000f03f" "0000000000000000"             // t_int, t_prev
        "01000000" "00000000000000c0"                     // x_int = {-2}
        "01000000" "000000000000e03f"                     // x_prev = {0.5}
        "01000000" "000000000000f03f"                     // k_int = {1}
        "01000000" "0000000000000000"                     // k_prev = {0}
        "02000000" "0100"                                 // z_signs
        "00" "0000000000000000";                          // no pending event
    const auto bytes = snapshot_solver(s);
    CHECK(hex(bytes) == expected);
    CHECK(snapshot_solver(restore_solver(bytes)) == bytes);
  }

  TEST_CASE("fresh and advanced states round-trip bitwise") {
    const auto m = make_van_der_pol();
    SolverConfig cfg;
    const std::vector<std::int64_t> d;
    const std::vector<double> u{0.0};
    auto s = seed_solver(*m, cfg, 0.0, m->spec().x0, d, u);
    CHECK(snapshot_solver(restore_solver(snapshot_solver(s))) == snapshot_solver(s));
    for (int i = 0; i < 100; ++i) step(*m, cfg, s, d, u);
    const auto blob = snapshot_solver(s);
    const auto back = restore_solver(blob);
    CHECK(snapshot_solver(back) == blob);
    CHECK(back.n_steps + back.n_rejections == 100);
    // Continuing from the restored copy matches continuing from the original.
    auto s2 = back;
    step(*m, cfg, s, d, u);
    step(*m, cfg, s2, d, u);
    CHECK(snapshot_solver(s) == snapshot_solver(s2));
  }

  TEST_CASE("corrupt blobs are rejected") {
    SolverState s;
    s.x_int = {1.0};
    auto blob = snapshot_solver(s);
    auto bad_magic = blob;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(restore_solver(bad_magic), doctest::Contains("corrupt"), Error);

    auto bad_version = blob;
    bad_version[4] = 9;
    try {
      restore_solver(bad_version);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kVersionMismatch);
    }

    auto truncated = blob;
    truncated.pop_back();
    CHECK_THROWS_AS(restore_solver(truncated), Error);

    auto trailing = blob;
    trailing.push_back(0);
    CHECK_THROWS_AS(restore_solver(trailing), Error);
  }
}
