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

#include "bench/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace codeood::bench {
namespace {

// Key, default. Kept in one table so docs, parsing and hashing agree.
const std::vector<std::pair<std::string, std::string>>& KeyTable() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"seed", "0"},
      {"strict", "false"},
      {"out", "codeood_out"},
      {"dataset", "synthetic"},
      {"synthetic.classes", "4"},
      {"synthetic.ood_classes", "2"},
      {"synthetic.size", "16"},
      {"synthetic.train_per_class", "200"},
      {"synthetic.test_per_class", "50"},
      {"synthetic.background_noise", "0.05"},
      {"idx.train_images", ""},
      {"idx.train_labels", ""},
      {"idx.test_images", ""},
      {"idx.test_labels", ""},
      {"idx.id_classes", ""},
      {"classifier.conv1_channels", "8"},
      {"classifier.feature_channels", "16"},
      {"classifier.hidden_units", "0"},
      {"classifier.epochs", "20"},
      {"classifier.batch_size", "32"},
      {"classifier.learning_rate", "0.05"},
      {"classifier.momentum", "0.9"},
      {"detector.per_class", "4"},
      {"detector.lambda_u", "1"},
      {"detector.threshold", "1"},
      {"detector.learning_rate", "5e-4"},
      {"detector.weight_decay", "1e-5"},
      {"detector.epochs", "200"},
      {"detector.batch_size", "32"},
      {"detector.rho", "0.99"},
      {"detector.epsilon", "1e-8"},
      {"calibration.sigma_floor", "1e-6"},
      {"scorers", "code,code_top1,msp,maxlogit,energy,fnrd"},
      {"code.mode", "weighted"},
      {"ood.sources", "heldout,noise"},
      {"ood.noise_count", "200"},
      {"perturbation.kinds", "blur,noise,brightness,rotation_forth,rotation_back"},
      {"perturbation.images", "200"},
      {"perturbation.grid.blur", ""},
      {"perturbation.grid.noise", ""},
      {"perturbation.grid.brightness", ""},
      {"perturbation.grid.rotation_forth", ""},
      {"perturbation.grid.rotation_back", ""},
      {"perturbation.curves", "true"},
      {"osr.enabled", "true"},
      {"osr.classes", "10"},
      {"osr.closed", "6"},
      {"osr.splits", "5"},
      {"osr.train_per_class", "100"},
      {"osr.test_per_class", "50"},
      {"explain.index", "0"},
      {"explain.threshold", "0.3"},
      {"explain.patches", "true"},
  };
  return table;
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double ParseDouble(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
  }
  return v;
}

}  // namespace

Config Config::Defaults() {
  Config c;
  for (const auto& [key, value] : KeyTable()) c.values_[key] = value;
  return c;
}

Config Config::Parse(std::string_view text, std::string_view origin) {
  Config c = Defaults();
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = Trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(lineno);
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value', got '" + body + "'");
    }
    const std::string key = Trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": missing key");
    try {
      c.Set(key, Trim(std::string_view(body).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return c;
}

Config Config::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return Parse(text.str(), path);
}

void Config::Set(const std::string& key, const std::string& value) {
  if (values_.count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
  explicit_.insert(key);
}

const std::string& Config::GetString(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double Config::GetDouble(const std::string& key) const {
  return ParseDouble(key, GetString(key));
}

std::uint64_t Config::GetUint(const std::string& key) const {
  const std::string& text = GetString(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a non-negative integer");
  }
  return v;
}

bool Config::GetBool(const std::string& key) const {
  const std::string& v = GetString(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> Config::GetList(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(GetString(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    std::string t = Trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::vector<double> Config::GetDoubleList(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : GetList(key)) out.push_back(ParseDouble(key, item));
  return out;
}

std::string Config::Canonical() const {
  std::string text;
  for (const auto& [key, value] : values_) {
    if (key == "out") continue;
    text += key + "=" + value + "\n";
  }
  return text;
}

std::string Config::Hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : Canonical()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace codeood::bench
