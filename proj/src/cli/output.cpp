#include "occlab/cli/output.hpp"

#include "occlab/errors.hpp"
#include "occlab/rng.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace occlab::cli {

namespace fs = std::filesystem;

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size())
    throw InvalidArgument("table " + name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                          std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string format_integer(long long x) { return std::to_string(x); }

std::string format_bool(bool b) { return b ? "true" : "false"; }

std::string file_checksum(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(ss.str())));
  return hex;
}

OutputDir::OutputDir(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) throw Error("cannot create output directory " + dir_.string());
}

void OutputDir::write(const Table& t) {
  const std::string csv = t.name + ".csv";
  {
    std::ofstream out(dir_ / csv, std::ios::binary);
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i].name;
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << '\n';
    }
    if (!out) throw Error("failed writing " + (dir_ / csv).string());
  }
  record(csv, "csv");

  nlohmann::json schema;
  schema["file"] = csv;
  schema["description"] = t.description;
  schema["rows"] = t.rows.size();
  schema["columns"] = nlohmann::json::array();
  for (const Column& c : t.columns)
    schema["columns"].push_back({{"name", c.name}, {"type", c.type}, {"description", c.description}});
  write_json(t.name + ".schema", schema);
}

void OutputDir::write_json(const std::string& stem, const nlohmann::json& j) {
  const std::string file = stem + ".json";
  std::ofstream out(dir_ / file, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + (dir_ / file).string());
  out.close();
  record(file, "json");
}

void OutputDir::record(const std::string& file, const std::string& kind) {
  for (auto& f : files_)
    if (f.first == file) return;
  files_.emplace_back(file, kind);
}

void OutputDir::finish() {
  nlohmann::json m;
  m["checksum"] = "fnv1a64";
  m["files"] = nlohmann::json::array();
  for (const auto& [file, kind] : files_)
    m["files"].push_back({{"path", file},
                          {"kind", kind},
                          {"bytes", fs::file_size(dir_ / file)},
                          {"checksum", file_checksum(dir_ / file)}});
  std::ofstream out(dir_ / "manifest.json", std::ios::binary);
  out << m.dump(2) << '\n';
  if (!out) throw Error("failed writing manifest.json");
}

}  // namespace occlab::cli
