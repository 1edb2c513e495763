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

#ifndef CODEOOD_TOOLS_BENCH_CONFIG_HPP_
#define CODEOOD_TOOLS_BENCH_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace codeood::bench {

// Raised for malformed config text, unknown keys and unusable values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` experiment configuration. Blank lines and text after
// '#' are ignored. Every key has a documented default (see Defaults()), and
// unknown keys are rejected so typos never pass silently.
class Config {
 public:
  static Config Defaults();
  static Config Parse(std::string_view text, std::string_view origin = "config");
  static Config Load(const std::string& path);

  // Overrides one key; rejects unknown keys.
  void Set(const std::string& key, const std::string& value);
  // True when the key was given by a file or Set() rather than defaulted.
  bool IsExplicit(const std::string& key) const { return explicit_.count(key) != 0; }

  const std::string& GetString(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  std::uint64_t GetUint(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  // Comma-separated list with surrounding blanks trimmed; empty entries dropped.
  std::vector<std::string> GetList(const std::string& key) const;
  std::vector<double> GetDoubleList(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Sorted `key=value` lines of every key that affects results (`out` is
  // excluded so relocating a run does not change its identity).
  std::string Canonical() const;
  // FNV-1a 64 of Canonical(), as 16 hex digits.
  std::string Hash() const;

 private:
  Config() = default;

  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

}  // namespace codeood::bench

#endif  // CODEOOD_TOOLS_BENCH_CONFIG_HPP_
