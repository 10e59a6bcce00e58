// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_CONFIG_HPP
#define HMR_CONFIG_HPP

#include "hmr/common.hpp"

#include <map>
#include <optional>

namespace hmr {

// Line-oriented `key = value` configuration with dotted section keys.
// `#` starts a comment; later assignments win.
class Config {
public:
  static Config from_file(const std::string &path);
  static Config from_string(const std::string &text);

  void set(const std::string &key, const std::string &value);
  bool has(const std::string &key) const;

  std::string get_str(const std::string &key, const std::string &def) const;
  double get_double(const std::string &key, double def) const;
  int get_int(const std::string &key, int def) const;
  std::uint64_t get_u64(const std::string &key, std::uint64_t def) const;
  bool get_bool(const std::string &key, bool def) const;
  std::optional<std::pair<double, double>>
  get_pair(const std::string &key) const;

  // Resolved key=value lines, sorted by key.
  std::string dump() const;

private:
  std::map<std::string, std::string> values_;
};

} // namespace hmr

#endif // HMR_CONFIG_HPP
