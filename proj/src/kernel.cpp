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

#include "statesim/kernel.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "statesim/error.hpp"

namespace statesim {

namespace {

std::atomic<std::size_t> g_snapshot_live_bytes{0};
std::atomic<std::uint64_t> g_next_instance{0};

void check_duration(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kParameterDomain, std::string(what) + " must be finite and >= 0");
  }
}

}  // namespace

const char* to_string(Fault f) {
  switch (f) {
    case Fault::kNone: return "none";
    case Fault::kSkipSolverRestore: return "skip-solver-restore";
    case Fault::kSkipDiscreteRestore: return "skip-discrete-restore";
    case Fault::kSkipZsignsRestore: return "skip-zsigns-restore";
  }
  return "?";
}

Fault parse_fault(const std::string& name) {
  for (Fault f : {Fault::kNone, Fault::kSkipSolverRestore, Fault::kSkipDiscreteRestore,
                  Fault::kSkipZsignsRestore}) {
    if (name == to_string(f)) return f;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown fault \"" + name + "\"");
}

// --- Snapshot ------------------------------------------------------------------

struct Snapshot::Payload {
  explicit Payload(Bytes b) : bytes(std::move(b)) { g_snapshot_live_bytes += bytes.size(); }
  ~Payload() {
    if (!freed.load()) g_snapshot_live_bytes -= bytes.size();
  }
  Payload(const Payload&) = delete;
  Payload& operator=(const Payload&) = delete;

  Bytes bytes;
  std::atomic<bool> freed{false};
};

std::size_t snapshot_live_bytes() { return g_snapshot_live_bytes.load(); }

Snapshot Snapshot::from_bytes(std::span<const std::uint8_t> bytes) {
  decode_state(bytes);
  return Snapshot(std::make_shared<Payload>(Bytes(bytes.begin(), bytes.end())));
}

bool Snapshot::valid() const { return payload_ && !payload_->freed.load(); }

std::span<const std::uint8_t> Snapshot::bytes() const {
  if (!payload_) throw Error(ErrorCode::kUseAfterFree, "empty snapshot handle");
  if (payload_->freed.load()) throw Error(ErrorCode::kUseAfterFree, "snapshot was freed");
  return payload_->bytes;
}

std::size_t Snapshot::size() const { return bytes().size(); }

StateRecord Snapshot::decode() const { return decode_state(bytes()); }

void free_state(Snapshot& snapshot) {
  if (!snapshot.payload_) throw Error(ErrorCode::kUseAfterFree, "free of an empty snapshot handle");
  auto& p = *snapshot.payload_;
  if (p.freed.exchange(true)) throw Error(ErrorCode::kDoubleFree, "snapshot freed twice");
  g_snapshot_live_bytes -= p.bytes.size();
  Bytes().swap(p.bytes);
}

// --- Kernel ----------------------------------------------------------------------

Kernel::Kernel(ModelPtr model, KernelConfig config)
    : model_(std::move(model)),
      config_(config),
      instance_id_("kernel-" + std::to_string(g_next_instance++)),
      t_(std::numeric_limits<double>::quiet_NaN()) {
  if (!model_) throw Error(ErrorCode::kInvalidConfig, "null model");
  config_.solver.validate();
  const auto& spec = model_->spec();
  x_ = spec.x0;
  d_ = spec.d0;
  u_ = spec.u0;
}

void Kernel::require_mode(std::initializer_list<Mode> allowed, const char* op) const {
  for (Mode m : allowed) {
    if (m == mode_) return;
  }
  throw Error(ErrorCode::kWrongMode,
              std::string(op) + " not allowed in mode " + to_string(mode_));
}

std::optional<double> Kernel::time() const {
  if (mode_ == Mode::kInstantiated) return std::nullopt;
  return t_;
}

void Kernel::initialize(std::optional<double> t0) {
  require_mode({Mode::kInstantiated}, "initialize");
  const auto& spec = model_->spec();
  const double t = t0.value_or(spec.t0);
  if (!std::isfinite(t)) throw Error(ErrorCode::kParameterDomain, "t0 must be finite");

  auto x = spec.x0;
  auto d = spec.d0;
  auto u = spec.u0;
  event_fixpoint(*model_, t, x, d, u);
  auto solver = seed_solver(*model_, config_.solver, t, x, d, u);

  t_ = t;
  x_ = std::move(x);
  d_ = std::move(d);
  u_ = std::move(u);
  solver_ = std::move(solver);
  mode_ = Mode::kContinuousTimeMode;
}

void Kernel::simulate(double tau) {
  require_mode({Mode::kContinuousTimeMode}, "simulate");
  check_duration(tau, "tau");
  if (tau == 0.0) return;

  const double t_target = t_ + tau;
  auto d = d_;
  auto solver = solver_;
  auto x = advance(*model_, config_.solver, solver, d, u_, t_target);

  t_ = t_target;
  x_ = std::move(x);
  d_ = std::move(d);
  solver_ = std::move(solver);
}

void Kernel::simulate_star(double tau, double tau_prime) {
  require_mode({Mode::kContinuousTimeMode}, "simulate_star");
  check_duration(tau, "tau");
  check_duration(tau_prime, "tau_prime");
  Snapshot saved = get_state();
  try {
    simulate(tau_prime);
  } catch (...) {
    set_state(saved);
    free_state(saved);
    throw;
  }
  set_state(saved);
  free_state(saved);
  simulate(tau);
}

StateRecord Kernel::record() const {
  return StateRecord{model_->fingerprint(), mode_, t_, x_, d_, u_, solver_};
}

Digest Kernel::fingerprint() const { return state_digest(record()); }

Snapshot Kernel::get_state() const {
  require_mode({Mode::kContinuousTimeMode, Mode::kEventMode}, "get_state");
  return Snapshot(std::make_shared<Snapshot::Payload>(encode_state(record())));
}

void Kernel::set_state(const Snapshot& snapshot) {
  require_mode({Mode::kInstantiated, Mode::kContinuousTimeMode, Mode::kEventMode}, "set_state");
  StateRecord rec = snapshot.decode();
  if (rec.model_fingerprint != model_->fingerprint()) {
    throw Error(ErrorCode::kFingerprintMismatch,
                "snapshot belongs to a different model or parameter set (instance model " +
                    model_->name() + ")");
  }
  const auto& spec = model_->spec();
  if (rec.x.size() != spec.n_x || rec.d.size() != spec.n_d || rec.u.size() != spec.n_u() ||
      rec.solver.x_int.size() != spec.n_x || rec.solver.z_signs.size() != spec.n_z) {
    throw Error(ErrorCode::kCorruptBlob, "snapshot dimensions do not match the model");
  }
  if (rec.mode != Mode::kContinuousTimeMode && rec.mode != Mode::kEventMode) {
    throw Error(ErrorCode::kCorruptBlob,
                std::string("snapshot taken in mode ") + to_string(rec.mode));
  }

  switch (config_.fault) {
    case Fault::kNone:
      break;
    case Fault::kSkipSolverRestore:
      rec.solver = solver_;
      break;
    case Fault::kSkipDiscreteRestore:
      rec.d = d_;
      break;
    case Fault::kSkipZsignsRestore:
      rec.solver.z_signs = solver_.z_signs;
      break;
  }

  mode_ = rec.mode;
  t_ = rec.t;
  x_ = std::move(rec.x);
  d_ = std::move(rec.d);
  u_ = std::move(rec.u);
  solver_ = std::move(rec.solver);
}

void Kernel::enter_event_mode() {
  require_mode({Mode::kContinuousTimeMode}, "enter_event_mode");
  mode_ = Mode::kEventMode;
}

void Kernel::set_inputs(std::span<const double> u) {
  require_mode({Mode::kEventMode}, "set_inputs");
  if (u.size() != u_.size()) {
    throw Error(ErrorCode::kParameterDomain, "expected " + std::to_string(u_.size()) + " inputs, got " +
                                                 std::to_string(u.size()));
  }
  for (double v : u) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kParameterDomain, "inputs must be finite");
  }
  u_.assign(u.begin(), u.end());
}

void Kernel::enter_continuous_time_mode() {
  require_mode({Mode::kEventMode}, "enter_continuous_time_mode");
  auto x = x_;
  auto d = d_;
  auto solver = solver_;
  event_fixpoint(*model_, t_, x, d, u_);
  restart_solver(*model_, solver, t_, x, d, u_);
  x_ = std::move(x);
  d_ = std::move(d);
  solver_ = std::move(solver);
  mode_ = Mode::kContinuousTimeMode;
}

void Kernel::terminate() {
  require_mode({Mode::kInstantiated, Mode::kInitializationMode, Mode::kContinuousTimeMode,
                Mode::kEventMode},
               "terminate");
  mode_ = Mode::kTerminated;
}

void Kernel::reset_solver() {
  require_mode({Mode::kContinuousTimeMode}, "reset_solver");
  solver_ = seed_solver(*model_, config_.solver, t_, x_, d_, u_);
}

}  // namespace statesim
