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

#include "statesim/state_codec.hpp"

#include <algorithm>
#include <string>

#include "statesim/error.hpp"

namespace statesim {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kInstantiated: return "Instantiated";
    case Mode::kInitializationMode: return "InitializationMode";
    case Mode::kContinuousTimeMode: return "ContinuousTimeMode";
    case Mode::kEventMode: return "EventMode";
    case Mode::kTerminated: return "Terminated";
  }
  return "?";
}

Bytes encode_state(const StateRecord& s) {
  ByteWriter w;
  w.put_magic("KSN1");
  w.put_u16(kStateVersion);
  w.put_raw(s.model_fingerprint.bytes);
  w.put_u8(static_cast<std::uint8_t>(s.mode));
  w.put_f64(s.t);
  w.put_f64_vec(s.x);
  w.put_i64_vec(s.d);
  w.put_f64_vec(s.u);
  w.put_blob(snapshot_solver(s.solver));
  return std::move(w).take();
}

StateRecord decode_state(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("KSN1");
  const std::uint16_t version = r.u16();
  if (version != kStateVersion) {
    throw Error(ErrorCode::kVersionMismatch, "snapshot version " + std::to_string(version) +
                                                 ", expected " + std::to_string(kStateVersion));
  }
  StateRecord s;
  const auto fp = r.raw(32);
  std::copy(fp.begin(), fp.end(), s.model_fingerprint.bytes.begin());
  const std::uint8_t mode = r.u8();
  if (mode > static_cast<std::uint8_t>(Mode::kTerminated)) {
    throw Error(ErrorCode::kCorruptBlob, "snapshot: invalid mode " + std::to_string(mode));
  }
  s.mode = static_cast<Mode>(mode);
  s.t = r.f64();
  s.x = r.f64_vec();
  s.d = r.i64_vec();
  s.u = r.f64_vec();
  s.solver = restore_solver(r.blob());
  r.expect_end();
  return s;
}

Digest state_digest(const StateRecord& s) { return sha256(encode_state(s)); }

}  // namespace statesim
