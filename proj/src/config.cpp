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

#include "dcls/config.hpp"

#include <algorithm>
#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <sstream>

namespace dcls {

namespace pt = boost::property_tree;

Config::Config(std::map<std::string, std::string> defaults) : values_(std::move(defaults)) {
  for (const auto& [key, value] : values_)
    if (std::count(key.begin(), key.end(), '.') != 1) throw std::logic_error("config key '" + key + "' is not section.key");
}

void Config::load(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(path.string() + ": key '" + section + "' outside any section");
    for (const auto& [key, leaf] : body) set(section + "." + key, leaf.get_value<std::string>());
  }
}

void Config::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  set(boost::trim_copy(assignment.substr(0, eq)), boost::trim_copy(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::logic_error("config key '" + key + "' has no default");
  return it->second;
}

namespace {

template <typename T>
T convert(const std::string& key, const std::string& text) {
  try {
    return boost::lexical_cast<T>(text);
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
}

}  // namespace

double Config::get_double(const std::string& key) const { return convert<double>(key, get_string(key)); }

long Config::get_int(const std::string& key) const { return convert<long>(key, get_string(key)); }

std::size_t Config::get_size(const std::string& key) const {
  const long v = get_int(key);
  if (v < 0) throw ConfigError("config key '" + key + "' must be >= 0");
  return static_cast<std::size_t>(v);
}

bool Config::get_bool(const std::string& key) const {
  const std::string v = boost::to_lower_copy(get_string(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::size_t> Config::get_sizes(const std::string& key) const {
  std::vector<std::string> parts;
  const std::string text = get_string(key);
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<std::size_t> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (p.empty()) throw ConfigError("config key '" + key + "': empty list entry");
    const long v = convert<long>(key, p);
    if (v < 0) throw ConfigError("config key '" + key + "': negative entry");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::string Config::to_ini() const {
  std::ostringstream out;
  std::string current;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << key.substr(dot + 1) << " = " << value << '\n';
  }
  return out.str();
}

void Config::save(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << to_ini();
}

}  // namespace dcls
