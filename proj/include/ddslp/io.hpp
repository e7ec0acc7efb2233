#pragma once
// Dataset files: CSV with header e1..ed,s1..sd plus a JSON sidecar
// (<stem>.json next to <stem>.csv) holding label, dimension and provenance.
// Numbers are written in shortest round-trip decimal form.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddslp/error.hpp"
#include "ddslp/phase.hpp"

namespace ddslp {

[[nodiscard]] inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

[[nodiscard]] inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

[[nodiscard]] inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_dataset_csv(const std::filesystem::path& path, const DataSet& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const int d = ds.dim();
  for (int c = 0; c < d; ++c) os << (c ? "," : "") << 'e' << c + 1;
  for (int c = 0; c < d; ++c) os << ",s" << c + 1;
  os << '\n';
  const auto ph = ds.phase();
  std::string line;
  for (int i = 0; i < ds.size(); ++i) {
    line.clear();
    for (int c = 0; c < 2 * d; ++c) {
      if (c) line += ',';
      line += format_double(ph(i, c));
    }
    line += '\n';
    os << line;
  }
  if (!os) throw IoError("write failed: " + path.string());
  nlohmann::json side{{"label", ds.label()}, {"dimension", d}, {"points", ds.size()}, {"provenance", ds.provenance()}};
  write_json_file(sidecar_path(path), side);
}

/// Reads a dataset CSV; the sidecar is optional.
[[nodiscard]] inline DataSet read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty dataset file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto cols = static_cast<int>(std::count(line.begin(), line.end(), ',') + 1);
  if (cols != 2 && cols != 12) throw IoError(path.string() + ": expected 2 or 12 columns, found " + std::to_string(cols));
  const int d = cols / 2;
  DataSet ds(d, path.stem().string());
  std::vector<double> row(static_cast<std::size_t>(cols));
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int c = 0; c < cols; ++c) {
      while (p < end && *p == ' ') ++p;
      const auto r = std::from_chars(p, end, row[static_cast<std::size_t>(c)]);
      if (r.ec != std::errc()) throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number");
      p = r.ptr;
      while (p < end && *p == ' ') ++p;
      if (c + 1 < cols) {
        if (p >= end || *p != ',') throw IoError(path.string() + ":" + std::to_string(lineno) + ": too few columns");
        ++p;
      }
    }
    if (p != end) throw IoError(path.string() + ":" + std::to_string(lineno) + ": too many columns");
    try {
      ds.add(std::span<const double>(row.data(), static_cast<std::size_t>(d)),
             std::span<const double>(row.data() + d, static_cast<std::size_t>(d)));
    } catch (const Error& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  const auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    const auto j = read_json_file(side);
    if (j.contains("label")) ds.set_label(j["label"].get<std::string>());
    if (j.contains("provenance")) ds.provenance() = j["provenance"];
    if (j.contains("dimension") && j["dimension"].get<int>() != d)
      throw IoError(side.string() + ": dimension disagrees with the CSV");
  }
  return ds;
}

}  // namespace ddslp
