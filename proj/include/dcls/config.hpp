// Copyright 2026 The DCLS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcls {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// INI-style settings addressed as "section.key". The set of keys is fixed
/// by the defaults passed at construction; anything else is rejected.
class Config {
 public:
  explicit Config(std::map<std::string, std::string> defaults);

  /// Reads an INI file ([section] headers, key=value lines).
  void load(const std::filesystem::path& path);
  /// Applies one "section.key=value" override.
  void set_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma-separated list of non-negative integers.
  std::vector<std::size_t> get_sizes(const std::string& key) const;

  /// Resolved settings as INI text, sections and keys sorted.
  std::string to_ini() const;
  void save(const std::filesystem::path& path) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dcls
