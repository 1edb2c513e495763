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

#ifndef CODEOOD_SRC_BINARY_IO_HPP_
#define CODEOOD_SRC_BINARY_IO_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace codeood::io {

// Little-endian encoder into an in-memory buffer.
class Writer {
 public:
  void Magic(std::string_view magic);
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F64(double v);
  void F64s(std::span<const double> values);

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  void WriteFile(const std::string& path) const;

 private:
  std::vector<std::uint8_t> bytes_;
};

// Little-endian decoder. Running past the end raises a kFormat error that
// names `what_` ("truncated record ...").
class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  static Reader FromFile(const std::string& path);

  void ExpectMagic(std::string_view magic);
  std::uint32_t U32();
  std::uint64_t U64();
  double F64();
  void F64s(std::span<double> out);
  std::uint32_t U32BigEndian();
  std::uint8_t U8();

  bool AtEnd() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void set_context(std::string what) { what_ = std::move(what); }

 private:
  void Need(std::size_t n) const;

  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string what_ = "header";
};

}  // namespace codeood::io

#endif  // CODEOOD_SRC_BINARY_IO_HPP_
