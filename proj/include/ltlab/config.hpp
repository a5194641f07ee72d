#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ltlab/errors.hpp"

namespace ltlab {

// Flat key = value configuration. '#' starts a comment, blank lines are
// skipped, values may be comma-separated lists. Keys keep file order for
// deterministic echoing.
struct ConfigMap {
  std::map<std::string, std::string> kv;
  std::vector<std::string> order;

  bool has(const std::string& key) const { return kv.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigParse("missing required key '" + key + "'");
    return it->second;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigParse("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    std::string val = detail::trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigParse("line " + std::to_string(lineno) + ": empty key");
    if (cfg.kv.count(key))
      throw ConfigParse("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.kv[key] = val;
    cfg.order.push_back(key);
  }
  return cfg;
}

inline ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = detail::trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline long long to_int(const std::string& s, const std::string& key) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigParse("key '" + key + "': '" + s + "' is not an integer");
  return v;
}

inline double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigParse("key '" + key + "': '" + s + "' is not a number");
  }
}

inline std::vector<long long> to_int_list(const std::string& s, const std::string& key) {
  std::vector<long long> out;
  for (const auto& tok : split_list(s)) out.push_back(to_int(tok, key));
  if (out.empty()) throw ConfigParse("key '" + key + "': empty list");
  return out;
}

inline std::vector<double> to_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const auto& tok : split_list(s)) out.push_back(to_double(tok, key));
  if (out.empty()) throw ConfigParse("key '" + key + "': empty list");
  return out;
}

}  // namespace ltlab
