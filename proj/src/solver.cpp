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

#include "statesim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "statesim/error.hpp"

namespace statesim {

void SolverConfig::validate() const {
  if (!(rtol > 0.0) || !std::isfinite(rtol)) throw Error(ErrorCode::kInvalidConfig, "rtol must be > 0");
  if (!(atol >= 0.0) || !std::isfinite(atol)) throw Error(ErrorCode::kInvalidConfig, "atol must be >= 0");
  if (!(event_tol_rel > 0.0)) throw Error(ErrorCode::kInvalidConfig, "event_tol_rel must be > 0");
  if (!(h_min > 0.0)) throw Error(ErrorCode::kInvalidConfig, "h_min must be > 0");
  if (!(h_max > h_min)) throw Error(ErrorCode::kInvalidConfig, "h_max must exceed h_min");
}

namespace {

std::vector<double> eval_f(const Model& m, SolverState& s, double t, std::span<const double> x,
                           std::span<const std::int64_t> d, std::span<const double> u) {
  std::vector<double> dx(x.size());
  m.derivatives(t, x, d, u, dx);
  ++s.n_fevals;
  return dx;
}

std::vector<std::uint8_t> sign_bits(const Model& m, double t, std::span<const double> x,
                                    std::span<const std::int64_t> d, std::span<const double> u) {
  const std::size_t n_z = m.spec().n_z;
  std::vector<std::uint8_t> bits(n_z);
  if (n_z == 0) return bits;
  std::vector<double> z(n_z);
  m.event_indicators(t, x, d, u, z);
  for (std::size_t i = 0; i < n_z; ++i) bits[i] = z[i] > 0.0 ? 1 : 0;
  return bits;
}

double rms_norm(std::span<const double> v, std::span<const double> a, std::span<const double> b,
                double rtol, double atol) {
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double scale = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
    const double r = v[i] / scale;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(v.size()));
}

double initial_step(const Model& m, const SolverConfig& cfg, SolverState& s,
                    std::span<const std::int64_t> d, std::span<const double> u) {
  const double d0 = rms_norm(s.x_int, s.x_int, s.x_int, s.rtol, s.atol);
  const double d1 = rms_norm(s.k_int, s.x_int, s.x_int, s.rtol, s.atol);
  const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;

  std::vector<double> x1(s.x_int.size());
  for (std::size_t i = 0; i < x1.size(); ++i) x1[i] = s.x_int[i] + h0 * s.k_int[i];
  const auto f1 = eval_f(m, s, s.t_int + h0, x1, d, u);
  std::vector<double> df(f1.size());
  for (std::size_t i = 0; i < df.size(); ++i) df[i] = f1[i] - s.k_int[i];
  const double d2 = rms_norm(df, s.x_int, s.x_int, s.rtol, s.atol) / h0;

  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::cbrt(0.01 / dmax);
  return std::clamp(std::min(100.0 * h0, h1), cfg.h_min, cfg.h_max);
}

}  // namespace

void restart_solver(const Model& model, SolverState& s, double t, std::span<const double> x,
                    std::span<const std::int64_t> d, std::span<const double> u) {
  s.t_int = t;
  s.t_prev = t;
  s.x_int.assign(x.begin(), x.end());
  s.x_prev = s.x_int;
  s.k_int = eval_f(model, s, t, x, d, u);
  s.k_prev = s.k_int;
  s.z_signs = sign_bits(model, t, x, d, u);
  s.pending_event = false;
  s.t_event = 0.0;
}

SolverState seed_solver(const Model& model, const SolverConfig& cfg, double t,
                        std::span<const double> x, std::span<const std::int64_t> d,
                        std::span<const double> u) {
  cfg.validate();
  SolverState s;
  s.rtol = cfg.rtol;
  s.atol = cfg.atol;
  restart_solver(model, s, t, x, d, u);
  s.h_next = initial_step(model, cfg, s, d, u);
  return s;
}

StepResult step(const Model& model, const SolverConfig& cfg, SolverState& s,
                std::span<const std::int64_t> d, std::span<const double> u) {
  const double h = std::min(s.h_next, cfg.h_max);
  const double t = s.t_int;
  if (!(h >= cfg.h_min) || t + h == t) {
    throw Error(ErrorCode::kIntegrationFailure,
                "step size underflow (h=" + std::to_string(h) + ") at t=" + std::to_string(t));
  }

  const std::size_t n = s.x_int.size();
  const auto& x = s.x_int;
  const auto& k1 = s.k_int;
  std::vector<double> tmp(n);

  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  const auto k2 = eval_f(model, s, t + 0.5 * h, tmp, d, u);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.75 * h * k2[i];
  const auto k3 = eval_f(model, s, t + 0.75 * h, tmp, d, u);

  std::vector<double> x_new(n);
  for (std::size_t i = 0; i < n; ++i) {
    x_new[i] = x[i] + h * (2.0 / 9.0 * k1[i] + 1.0 / 3.0 * k2[i] + 4.0 / 9.0 * k3[i]);
  }
  auto k4 = eval_f(model, s, t + h, x_new, d, u);

  std::vector<double> err(n);
  for (std::size_t i = 0; i < n; ++i) {
    err[i] = h * (-5.0 / 72.0 * k1[i] + 1.0 / 12.0 * k2[i] + 1.0 / 9.0 * k3[i] - 1.0 / 8.0 * k4[i]);
  }
  const double e = rms_norm(err, x, x_new, s.rtol, s.atol);

  StepResult r{false, h, e};
  if (e <= 1.0) {
    double fac = e == 0.0 ? controller::kFacMax
                          : std::clamp(controller::kSafety * std::pow(e, -1.0 / 3.0),
                                       controller::kFacMin, controller::kFacMax);
    if (s.last_step_rejected) fac = std::min(fac, 1.0);
    s.t_prev = t;
    s.x_prev = s.x_int;
    s.k_prev = s.k_int;
    s.t_int = t + h;
    s.x_int = std::move(x_new);
    s.k_int = std::move(k4);
    s.h_next = h * fac;
    s.last_step_rejected = false;
    ++s.n_steps;
    r.accepted = true;
    return r;
  }

  const double fac = std::isfinite(e)
                         ? std::max(controller::kFacMin, controller::kSafety * std::pow(e, -1.0 / 3.0))
                         : controller::kFacMin;
  s.h_next = h * std::min(fac, 1.0);
  s.last_step_rejected = true;
  ++s.n_rejections;
  if (s.h_next < cfg.h_min) {
    throw Error(ErrorCode::kIntegrationFailure,
                "step size underflow after rejection at t=" + std::to_string(t));
  }
  return r;
}

double locate_event(const std::function<bool(double)>& crossed, double t_lo, double t_hi,
                    double tol) {
  if (!(t_lo <= t_hi)) throw Error(ErrorCode::kNoSignChange, "empty event bracket");
  if (!crossed(t_hi)) {
    throw Error(ErrorCode::kNoSignChange, "no indicator sign change at bracket end t=" +
                                              std::to_string(t_hi));
  }
  // 200 halvings take any finite bracket below one ulp.
  for (int it = 0; it < 200 && t_hi - t_lo > tol; ++it) {
    const double mid = t_lo + 0.5 * (t_hi - t_lo);
    if (mid <= t_lo || mid >= t_hi) break;
    if (crossed(mid)) {
      t_hi = mid;
    } else {
      t_lo = mid;
    }
  }
  return t_hi;
}

std::vector<double> interpolate(const SolverState& s, double t) {
  if (t == s.t_int) return s.x_int;
  if (t == s.t_prev) return s.x_prev;
  const double h = s.t_int - s.t_prev;
  const double th = (t - s.t_prev) / h;
  const double th1 = th - 1.0;
  std::vector<double> x(s.x_int.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = s.x_prev[i];
    const double x1 = s.x_int[i];
    x[i] = (1.0 - th) * x0 + th * x1 +
           th * th1 * ((1.0 - 2.0 * th) * (x1 - x0) + th1 * h * s.k_prev[i] + th * h * s.k_int[i]);
  }
  return x;
}

namespace {

void process_pending_event(const Model& model, SolverState& s, std::span<std::int64_t> d,
                           std::span<const double> u) {
  const double t_e = s.t_event;
  auto x_e = interpolate(s, t_e);
  event_fixpoint(model, t_e, x_e, d, u);
  restart_solver(model, s, t_e, x_e, d, u);
  ++s.n_events;
}

}  // namespace

std::vector<double> advance(const Model& model, const SolverConfig& cfg, SolverState& s,
                            std::span<std::int64_t> d, std::span<const double> u,
                            double t_target) {
  const bool has_events = model.spec().n_z > 0;
  for (;;) {
    if (s.pending_event) {
      if (s.t_event <= t_target) {
        process_pending_event(model, s, d, u);
        continue;
      }
      break;
    }
    if (s.t_int >= t_target) break;
    if (!step(model, cfg, s, d, u).accepted) continue;
    if (!has_events) continue;

    auto bits = sign_bits(model, s.t_int, s.x_int, d, u);
    if (bits == s.z_signs) continue;
    auto crossed = [&](double t) {
      return sign_bits(model, t, interpolate(s, t), d, u) != s.z_signs;
    };
    const double tol = cfg.event_tol_rel * std::max(1.0, std::abs(s.t_int));
    s.t_event = locate_event(crossed, s.t_prev, s.t_int, tol);
    s.pending_event = true;
  }
  return interpolate(s, t_target);
}

// --- serialization -----------------------------------------------------------

Bytes snapshot_solver(const SolverState& s) {
  ByteWriter w;
  w.put_magic("SSV1");
  w.put_u16(kSolverBlobVersion);
  w.put_f64(s.rtol);
  w.put_f64(s.atol);
  w.put_f64(s.h_next);
  w.put_u8(s.last_step_rejected ? 1 : 0);
  w.put_u64(s.n_steps);
  w.put_u64(s.n_rejections);
  w.put_u64(s.n_fevals);
  w.put_u64(s.n_events);
  w.put_f64(s.t_int);
  w.put_f64(s.t_prev);
  w.put_f64_vec(s.x_int);
  w.put_f64_vec(s.x_prev);
  w.put_f64_vec(s.k_int);
  w.put_f64_vec(s.k_prev);
  w.put_blob(s.z_signs);
  w.put_u8(s.pending_event ? 1 : 0);
  w.put_f64(s.t_event);
  return std::move(w).take();
}

namespace {

bool read_flag(ByteReader& r, const char* what) {
  const std::uint8_t v = r.u8();
  if (v > 1) throw Error(ErrorCode::kCorruptBlob, std::string("solver blob: bad flag ") + what);
  return v == 1;
}

}  // namespace

SolverState restore_solver(std::span<const std::uint8_t> blob) {
  ByteReader r(blob);
  r.expect_magic("SSV1");
  const std::uint16_t version = r.u16();
  if (version != kSolverBlobVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "solver blob version " + std::to_string(version) + ", expected " +
                    std::to_string(kSolverBlobVersion));
  }
  SolverState s;
  s.rtol = r.f64();
  s.atol = r.f64();
  s.h_next = r.f64();
  s.last_step_rejected = read_flag(r, "last_step_rejected");
  s.n_steps = r.u64();
  s.n_rejections = r.u64();
  s.n_fevals = r.u64();
  s.n_events = r.u64();
  s.t_int = r.f64();
  s.t_prev = r.f64();
  s.x_int = r.f64_vec();
  s.x_prev = r.f64_vec();
  s.k_int = r.f64_vec();
  s.k_prev = r.f64_vec();
  const auto z = r.blob();
  s.z_signs.assign(z.begin(), z.end());
  s.pending_event = read_flag(r, "pending_event");
  s.t_event = r.f64();
  r.expect_end();

  const std::size_t n = s.x_int.size();
  if (s.x_prev.size() != n || s.k_int.size() != n || s.k_prev.size() != n) {
    throw Error(ErrorCode::kCorruptBlob, "solver blob: inconsistent vector lengths");
  }
  for (auto b : s.z_signs) {
    if (b > 1) throw Error(ErrorCode::kCorruptBlob, "solver blob: sign bit out of range");
  }
  return s;
}

}  // namespace statesim
