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

#ifndef CODEOOD_ERROR_HPP_
#define CODEOOD_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace codeood {

enum class Errc {
  kInvalidArgument,
  kDimensionMismatch,
  kIo,
  kFormat,
  kState,
};

// Every failure in the core surfaces as this exception; the C API turns it
// into a status code plus a thread-local message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void Fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, Errc code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace codeood

#endif  // CODEOOD_ERROR_HPP_
