#pragma once

// CSV serialization for fringe scans plus atomic text output. Numbers are
// written with 12 significant digits through std::to_chars, so output is
// locale-independent and byte-deterministic.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <unistd.h>

#include "triphase/mzi.hpp"

namespace triphase {

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_no, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

inline std::string format_sig12(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

// Writes via a sibling temp file and rename, so readers never observe a
// partially written file.
inline void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
  }
}

inline std::string scan_to_csv(const FringeScan& scan) {
  validate_scan(scan);
  std::string out = "phase_rad,value\n";
  for (std::size_t j = 0; j < scan.phases.size(); ++j) {
    out += format_sig12(scan.phases[j]);
    out += ',';
    out += format_sig12(scan.values[j]);
    out += '\n';
  }
  return out;
}

inline void write_scan_csv(const std::string& path, const FringeScan& scan) {
  write_text_atomic(path, scan_to_csv(scan));
}

namespace detail {

inline double parse_double_field(const std::string& field, int line_no, const char* what) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ParseError(line_no, std::string("cannot parse ") + what + " from '" + field + "'");
  if (!std::isfinite(v)) throw ParseError(line_no, std::string(what) + " is not finite");
  return v;
}

}  // namespace detail

inline FringeScan parse_scan_csv(std::istream& in, ScanKind kind) {
  FringeScan scan;
  scan.kind = kind;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "phase_rad,value")
        throw ParseError(1, "expected header 'phase_rad,value', got '" + line + "'");
      continue;
    }
    if (line.empty()) throw ParseError(line_no, "empty row");
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw ParseError(line_no, "expected exactly two comma-separated fields");
    const double phase = detail::parse_double_field(line.substr(0, comma), line_no, "phase_rad");
    const double value = detail::parse_double_field(line.substr(comma + 1), line_no, "value");
    if (value < 0.0) throw ParseError(line_no, "value must be non-negative");
    if (!scan.phases.empty() && !(phase > scan.phases.back()))
      throw ParseError(line_no, "phases must be strictly increasing");
    scan.phases.push_back(phase);
    scan.values.push_back(value);
  }
  if (line_no == 0) throw ParseError(0, "empty file");
  if (scan.phases.empty()) throw ParseError(1, "no data rows");
  return scan;
}

inline FringeScan read_scan_csv(const std::string& path, ScanKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_scan_csv(in, kind);
}

}  // namespace triphase
