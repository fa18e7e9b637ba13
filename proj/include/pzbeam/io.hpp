#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "pzbeam/error.hpp"
#include "pzbeam/grid.hpp"
#include "pzbeam/state.hpp"

namespace pzbeam {

namespace fs = std::filesystem;

/// Shortest text that round-trips the double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "sha256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

/// Accumulates a CSV table in memory with a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : width_(columns.size()) { line(columns); }

  CsvTable& row(std::initializer_list<double> values) {
    if (values.size() != width_) throw Error(ErrorKind::DimensionMismatch, "csv row width");
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_double(v));
    line(cells);
    return *this;
  }

  CsvTable& row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error(ErrorKind::DimensionMismatch, "csv row width");
    line(cells);
    return *this;
  }

  const std::string& str() const { return text_; }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  std::size_t width_;
  std::string text_;
};

/// Columns x,v,p,vt,pt at the interior nodes.
inline std::string state_csv(const Grid& grid, const State& z) {
  CsvTable t({"x", "v", "p", "vt", "pt"});
  for (std::size_t i = 0; i < grid.size(); ++i) t.row({grid.x(i), z.v[i], z.p[i], z.vt[i], z.pt[i]});
  return t.str();
}

/// Tracks every file written into an output directory so the manifest can
/// list them with digests.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  void write(const std::string& relative, std::string_view content) {
    write_file(root_ / relative, content);
    entries_.push_back({relative, content.size(), sha256_hex(content)});
  }

  void write_json(const std::string& relative, const nlohmann::json& doc) { write(relative, doc.dump(2) + "\n"); }

  /// manifest.json with path, byte count and sha256 of each output, sorted by path.
  void write_manifest() {
    std::vector<Entry> sorted = entries_;
    std::sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) { return a.path < b.path; });
    nlohmann::json files = nlohmann::json::array();
    for (const auto& e : sorted) files.push_back({{"path", e.path}, {"bytes", e.bytes}, {"sha256", e.sha256}});
    write_file(root_ / "manifest.json", nlohmann::json{{"files", files}}.dump(2) + "\n");
  }

  const fs::path& root() const { return root_; }

 private:
  struct Entry {
    std::string path;
    std::size_t bytes;
    std::string sha256;
  };
  fs::path root_;
  std::vector<Entry> entries_;
};

inline nlohmann::json field_json(const FieldVec& f) { return nlohmann::json(f.vector()); }

/// Full state plus the hash of the config that produced it.
inline nlohmann::json checkpoint_json(const Grid& grid, const State& z, const std::string& config_hash) {
  return {{"format", "pzbeam-checkpoint-1"},
          {"config_hash", config_hash},
          {"L", grid.length()},
          {"N", grid.size()},
          {"t", z.t},
          {"v", field_json(z.v)},
          {"p", field_json(z.p)},
          {"vt", field_json(z.vt)},
          {"pt", field_json(z.pt)}};
}

inline State load_checkpoint(const fs::path& path, const Grid& grid) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, "checkpoint at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "pzbeam-checkpoint-1") {
      throw Error(ErrorKind::ValidationError, "unknown checkpoint format");
    }
    if (doc.at("N").get<std::size_t>() != grid.size() || doc.at("L").get<double>() != grid.length()) {
      throw Error(ErrorKind::ValidationError, "checkpoint grid differs from config grid");
    }
    State z;
    z.t = doc.at("t").get<double>();
    z.v = FieldVec(doc.at("v").get<std::vector<double>>());
    z.p = FieldVec(doc.at("p").get<std::vector<double>>());
    z.vt = FieldVec(doc.at("vt").get<std::vector<double>>());
    z.pt = FieldVec(doc.at("pt").get<std::vector<double>>());
    z.require_conforming(grid);
    return z;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ValidationError, std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace pzbeam
