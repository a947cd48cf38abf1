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

#include "statesim/bytes.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "statesim/error.hpp"

namespace statesim {

namespace {

template <typename U>
void put_le(Bytes& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

}  // namespace

void ByteWriter::put_magic(std::string_view magic) {
  out_.insert(out_.end(), magic.begin(), magic.end());
}
void ByteWriter::put_u8(std::uint8_t v) { out_.push_back(v); }
void ByteWriter::put_u16(std::uint16_t v) { put_le(out_, v); }
void ByteWriter::put_u32(std::uint32_t v) { put_le(out_, v); }
void ByteWriter::put_u64(std::uint64_t v) { put_le(out_, v); }
void ByteWriter::put_i64(std::int64_t v) { put_le(out_, static_cast<std::uint64_t>(v)); }
void ByteWriter::put_f64(double v) { put_le(out_, std::bit_cast<std::uint64_t>(v)); }
void ByteWriter::put_raw(std::span<const std::uint8_t> raw) {
  out_.insert(out_.end(), raw.begin(), raw.end());
}

void ByteWriter::put_f64_vec(std::span<const double> v) {
  put_u32(static_cast<std::uint32_t>(v.size()));
  for (double e : v) put_f64(e);
}

void ByteWriter::put_i64_vec(std::span<const std::int64_t> v) {
  put_u32(static_cast<std::uint32_t>(v.size()));
  for (std::int64_t e : v) put_i64(e);
}

void ByteWriter::put_blob(std::span<const std::uint8_t> blob) {
  put_u32(static_cast<std::uint32_t>(blob.size()));
  put_raw(blob);
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  if (remaining() < n) {
    throw Error(ErrorCode::kCorruptBlob, "truncated blob: need " + std::to_string(n) +
                                             " bytes at offset " + std::to_string(pos_) +
                                             ", have " + std::to_string(remaining()));
  }
  auto s = in_.subspan(pos_, n);
  pos_ += n;
  return s;
}

void ByteReader::expect_magic(std::string_view magic) {
  auto got = raw(magic.size());
  if (!std::equal(got.begin(), got.end(), magic.begin(), magic.end(),
                  [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); })) {
    throw Error(ErrorCode::kCorruptBlob, "bad magic, expected \"" + std::string(magic) + "\"");
  }
}

namespace {

template <typename U>
U get_le(std::span<const std::uint8_t> s) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(s[i]) << (8 * i);
  return v;
}

}  // namespace

std::uint8_t ByteReader::u8() { return raw(1)[0]; }
std::uint16_t ByteReader::u16() { return get_le<std::uint16_t>(raw(2)); }
std::uint32_t ByteReader::u32() { return get_le<std::uint32_t>(raw(4)); }
std::uint64_t ByteReader::u64() { return get_le<std::uint64_t>(raw(8)); }
std::int64_t ByteReader::i64() { return static_cast<std::int64_t>(u64()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<double> ByteReader::f64_vec() {
  const std::uint32_t n = u32();
  if (remaining() / 8 < n) throw Error(ErrorCode::kCorruptBlob, "truncated f64 vector");
  std::vector<double> v(n);
  for (auto& e : v) e = f64();
  return v;
}

std::vector<std::int64_t> ByteReader::i64_vec() {
  const std::uint32_t n = u32();
  if (remaining() / 8 < n) throw Error(ErrorCode::kCorruptBlob, "truncated i64 vector");
  std::vector<std::int64_t> v(n);
  for (auto& e : v) e = i64();
  return v;
}

std::span<const std::uint8_t> ByteReader::blob() { return raw(u32()); }

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    throw Error(ErrorCode::kCorruptBlob,
                std::to_string(remaining()) + " trailing bytes after end of record");
  }
}

}  // namespace statesim
