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

#include <fstream>
#include <json.hpp>
#include <string>

#include "statesim/digest.hpp"
#include "statesim/error.hpp"
#include "statesim/kernel.hpp"
#include "statesim/rng.hpp"
#include "statesim/state_codec.hpp"

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

Bytes ascii(const std::string& s) { return Bytes(s.begin(), s.end()); }

nlohmann::json golden() {
  std::ifstream in(std::string(STATESIM_TESTDATA_DIR) + "/golden_digests.json");
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

StateRecord random_record(SplitMix64& rng) {
  StateRecord r;
  for (auto& b : r.model_fingerprint.bytes) b = static_cast<std::uint8_t>(rng.next());
  r.mode = static_cast<Mode>(rng.next() % 5);
  r.t = rng.uniform(-10, 10);
  const std::size_t n = 1 + rng.next() % 4;
  for (std::size_t i = 0; i < n; ++i) r.x.push_back(rng.uniform(-1e3, 1e3));
  for (std::size_t i = 0; i < rng.next() % 3; ++i) r.d.push_back(static_cast<std::int64_t>(rng.next()));
  for (std::size_t i = 0; i < rng.next() % 3; ++i) r.u.push_back(rng.uniform(-5, 5));
  auto& s = r.solver;
  s.rtol = rng.uniform01();
  s.atol = rng.uniform01();
  s.h_next = rng.uniform01();
  s.last_step_rejected = rng.next() & 1;
  s.n_steps = rng.next();
  s.n_rejections = rng.next();
  s.n_fevals = rng.next();
  s.n_events = rng.next();
  s.t_int = rng.uniform01();
  s.t_prev = rng.uniform01();
  for (std::size_t i = 0; i < n; ++i) {
    s.x_int.push_back(rng.uniform01());
    s.x_prev.push_back(rng.uniform01());
    s.k_int.push_back(rng.uniform01());
    s.k_prev.push_back(rng.uniform01());
  }
  for (std::size_t i = 0; i < rng.next() % 4; ++i) s.z_signs.push_back(rng.next() & 1);
  s.pending_event = rng.next() & 1;
  s.t_event = rng.uniform01();
  return r;
}

}  // namespace

TEST_SUITE("reporting.digest") {
  TEST_CASE("SHA-256 standard test vectors") {
    CHECK(sha256(ascii("")).hex() ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256(ascii("abc")).hex() ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256(ascii("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")).hex() ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  }

  TEST_CASE("hex round trip and malformed hex") {
    const auto d = sha256(ascii("abc"));
    CHECK(Digest::from_hex(d.hex()) == d);
    CHECK_THROWS_AS(Digest::from_hex("abc"), Error);
    CHECK_THROWS_AS(Digest::from_hex(std::string(64, 'g')), Error);
  }
}

TEST_SUITE("reporting.encoding") {
  TEST_CASE("golden bytes for a small state record") {
    StateRecord r;
    for (std::size_t i = 0; i < 32; ++i) r.model_fingerprint.bytes[i] = static_cast<std::uint8_t>(i);
    r.mode = Mode::kContinuousTimeMode;
    r.t = 1.0;
    r.x = {2.0};
    r.d = {-1};
    r.u = {};
    r.solver.x_int = {2.0};
    r.solver.x_prev = {2.0};
    r.solver.k_int = {0.0};
    r.solver.k_prev = {0.0};
    const auto solver_blob = snapshot_solver(r.solver);
    std::string expected =
        "4b534e31"                                                          // "KSN1"
        "0100"                                                              // version
        "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"  // model
        "02"                                                                // mode
        "000000000000f03f"                                                  // t
        "01000000" "0000000000000040"                                       // x
        "01000000" "ffffffffffffffff"                                       // d
        "00000000";                                                         // u
    char len[9];
    std::snprintf(len, sizeof len, "%02x%02x%02x%02x", unsigned(solver_blob.size() & 0xff),
                  unsigned(solver_blob.size() >> 8 & 0xff), 0u, 0u);
    expected += len + hex(solver_blob);
    CHECK(hex(encode_state(r)) == expected);
  }

  TEST_CASE("decode(encode(s)) == s, and encode is a function of the state") {
    SplitMix64 rng(99);
    for (int i = 0; i < 500; ++i) {
      const auto r = random_record(rng);
      const auto bytes = encode_state(r);
      const auto back = decode_state(bytes);
      CHECK(encode_state(back) == bytes);
      CHECK(state_digest(back) == state_digest(r));
      CHECK(state_digest(r) == sha256(bytes));
    }
  }

  TEST_CASE("flipping any bit of x changes the digest") {
    Kernel k(make_van_der_pol());
    k.initialize();
    k.simulate(0.5);
    const auto base = k.record();
    const auto d0 = state_digest(base);
    for (int bit = 0; bit < 64; ++bit) {
      auto r = base;
      auto raw = std::bit_cast<std::uint64_t>(r.x[0]) ^ (std::uint64_t{1} << bit);
      r.x[0] = std::bit_cast<double>(raw);
      CHECK(state_digest(r) != d0);
    }
  }

  TEST_CASE("equal states give equal bytes and digests") {
    Kernel a(make_thermostat());
    Kernel b(make_thermostat());
    a.initialize();
    b.initialize();
    a.simulate(1.25);
    b.simulate(1.25);
    CHECK(encode_state(a.record()) == encode_state(b.record()));
    CHECK(a.fingerprint() == b.fingerprint());
  }

  TEST_CASE("malformed encodings are rejected") {
    Kernel k(make_bouncing_ball());
    k.initialize();
    const auto bytes = encode_state(k.record());

    auto bad_magic = bytes;
    bad_magic[1] = 'X';
    CHECK_THROWS_AS(decode_state(bad_magic), Error);

    auto bad_version = bytes;
    bad_version[4] = 2;
    try {
      decode_state(bad_version);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kVersionMismatch);
    }

    auto bad_mode = bytes;
    bad_mode[4 + 2 + 32] = 9;
    CHECK_THROWS_AS(decode_state(bad_mode), Error);

    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, bytes.size() / 2, bytes.size() - 1}) {
      CHECK_THROWS_AS(decode_state(std::span(bytes).first(cut)), Error);
    }
    CHECK_THROWS_AS(Snapshot::from_bytes(bad_magic), Error);
  }
}

TEST_SUITE("reporting.golden") {
  TEST_CASE("stored fingerprints are re-derived exactly") {
    const auto g = golden();
    CHECK(make_bouncing_ball()->fingerprint().hex() ==
          g.at("model_fingerprint/bouncing_ball").get<std::string>());
    struct Run {
      const char* key;
      ModelPtr model;
      double tau;
    };
    const Run runs[] = {
        {"state/bouncing_ball/simulate_1.0", make_bouncing_ball(), 1.0},
        {"state/van_der_pol/simulate_2.5", make_van_der_pol(), 2.5},
        {"state/thermostat/simulate_3.0", make_thermostat(), 3.0},
    };
    for (const auto& run : runs) {
      Kernel k(run.model);
      k.initialize();
      k.simulate(run.tau);
      CHECK_MESSAGE(k.fingerprint().hex() == g.at(run.key).get<std::string>(), run.key);
    }
  }

  TEST_CASE("equilibrium still changes the complete state through solver counters") {
    VanDerPolParams p;
    p.x1 = 0.0;
    Kernel k(make_van_der_pol(p));
    k.initialize();
    const auto fp = k.fingerprint();
    k.simulate(1.0);
    CHECK(k.x()[0] == 0.0);
    CHECK(k.x()[1] == 0.0);
    CHECK(k.fingerprint() != fp);
  }

  TEST_CASE("any simulate on a moving model changes the fingerprint") {
    for (const auto& name : builtin_model_names()) {
      Kernel k(make_model(name));
      k.initialize();
      const auto fp = k.fingerprint();
      k.simulate(0.01);
      CHECK_MESSAGE(k.fingerprint() != fp, name);
    }
  }
}
