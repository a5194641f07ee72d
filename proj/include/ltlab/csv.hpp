#pragma once

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include "ltlab/errors.hpp"

namespace ltlab {

// Shortest round-trip decimal form, '.' separator, independent of locale.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc())
    throw IoFailure("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline std::string format_int(long long v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_uint(std::uint64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

// RFC-4180 rows: comma separated, CRLF line endings, header first.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os) {
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) os_ << ',';
      os_ << csv_escape(fields[k]);
    }
    os_ << "\r\n";
  }

 private:
  std::ostream& os_;
};

}  // namespace ltlab
