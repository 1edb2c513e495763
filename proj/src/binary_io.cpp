/*
 * Copyright 2026 The CodeOOD Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "codeood/error.hpp"

namespace codeood::io {

void Writer::Magic(std::string_view magic) {
  bytes_.insert(bytes_.end(), magic.begin(), magic.end());
}

void Writer::U32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::U64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

void Writer::F64s(std::span<const double> values) {
  bytes_.reserve(bytes_.size() + 8 * values.size());
  for (double v : values) F64(v);
}

void Writer::WriteFile(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), Errc::kIo, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes_.data()),
            static_cast<std::streamsize>(bytes_.size()));
  Require(static_cast<bool>(out), Errc::kIo, "write failed for '" + path + "'");
}

Reader Reader::FromFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), Errc::kIo, "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return Reader(std::move(bytes));
}

void Reader::Need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) {
    Fail(Errc::kFormat, "truncated record: " + what_ + " needs " + std::to_string(n) +
                            " more bytes at offset " + std::to_string(pos_));
  }
}

void Reader::ExpectMagic(std::string_view magic) {
  if (bytes_.size() - pos_ < magic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes_.data()) + pos_,
                       magic.size()) != magic) {
    Fail(Errc::kFormat, "bad magic: expected '" + std::string(magic) + "'");
  }
  pos_ += magic.size();
}

std::uint32_t Reader::U32() {
  Need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t Reader::U64() {
  Need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

double Reader::F64() { return std::bit_cast<double>(U64()); }

void Reader::F64s(std::span<double> out) {
  Need(8 * out.size());
  for (double& v : out) v = F64();
}

std::uint32_t Reader::U32BigEndian() {
  Need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
  pos_ += 4;
  return v;
}

std::uint8_t Reader::U8() {
  Need(1);
  return bytes_[pos_++];
}

}  // namespace codeood::io
