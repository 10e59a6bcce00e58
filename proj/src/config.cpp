// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/config.hpp"

#include <fstream>
#include <sstream>

namespace hmr {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

} // namespace

Config Config::from_file(const std::string &path) {
  std::ifstream in(path);
  HMR_REQUIRE(in.good(), "config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string &text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    HMR_REQUIRE(eq != std::string::npos,
                "config: missing '=' on line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    HMR_REQUIRE(!key.empty(), "config: empty key on line " +
                                  std::to_string(lineno));
    cfg.values_[key] = value;
  }
  return cfg;
}

void Config::set(const std::string &key, const std::string &value) {
  values_[key] = value;
}

bool Config::has(const std::string &key) const {
  return values_.count(key) > 0;
}

std::string Config::get_str(const std::string &key,
                            const std::string &def) const {
  auto it = values_.find(key);
  return it == values_.end() ? def : it->second;
}

double Config::get_double(const std::string &key, double def) const {
  auto it = values_.find(key);
  if (it == values_.end())
    return def;
  try {
    return std::stod(it->second);
  } catch (...) {
    throw HmrError("config: key '" + key + "' is not a number: '" +
                   it->second + "'");
  }
}

int Config::get_int(const std::string &key, int def) const {
  auto it = values_.find(key);
  if (it == values_.end())
    return def;
  try {
    return std::stoi(it->second);
  } catch (...) {
    throw HmrError("config: key '" + key + "' is not an integer");
  }
}

std::uint64_t Config::get_u64(const std::string &key,
                              std::uint64_t def) const {
  auto it = values_.find(key);
  if (it == values_.end())
    return def;
  try {
    return std::stoull(it->second);
  } catch (...) {
    throw HmrError("config: key '" + key + "' is not an unsigned integer");
  }
}

bool Config::get_bool(const std::string &key, bool def) const {
  auto it = values_.find(key);
  if (it == values_.end())
    return def;
  const std::string &v = it->second;
  if (v == "on" || v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "off" || v == "false" || v == "0" || v == "no")
    return false;
  throw HmrError("config: key '" + key + "' is not a boolean");
}

std::optional<std::pair<double, double>>
Config::get_pair(const std::string &key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    return std::nullopt;
  std::istringstream in(it->second);
  double a, b;
  if (!(in >> a >> b))
    throw HmrError("config: key '" + key + "' is not a pair of numbers");
  return std::make_pair(a, b);
}

std::string Config::dump() const {
  std::ostringstream os;
  for (const auto &[k, v] : values_)
    os << k << " = " << v << "\n";
  return os.str();
}

} // namespace hmr
