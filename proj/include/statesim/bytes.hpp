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
#include <span>
#include <string_view>
#include <vector>

namespace statesim {

using Bytes = std::vector<std::uint8_t>;

/// Little-endian append-only encoder. Doubles are written as their IEEE-754
/// binary64 bit pattern, so NaN payloads and signed zeros survive unchanged.
class ByteWriter {
 public:
  void put_magic(std::string_view magic);
  void put_u8(std::uint8_t v);
  void put_u16(std::uint16_t v);
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_i64(std::int64_t v);
  void put_f64(double v);
  void put_raw(std::span<const std::uint8_t> raw);

  // Length-prefixed (u32 count) sequences.
  void put_f64_vec(std::span<const double> v);
  void put_i64_vec(std::span<const std::int64_t> v);
  void put_blob(std::span<const std::uint8_t> blob);

  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

/// Bounds-checked reader; any overrun throws Error{kCorruptBlob}.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  // Throws kCorruptBlob when the next bytes are not `magic`.
  void expect_magic(std::string_view magic);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  std::span<const std::uint8_t> raw(std::size_t n);

  std::vector<double> f64_vec();
  std::vector<std::int64_t> i64_vec();
  std::span<const std::uint8_t> blob();

  std::size_t remaining() const { return in_.size() - pos_; }
  // Throws kCorruptBlob on trailing garbage.
  void expect_end() const;

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace statesim
