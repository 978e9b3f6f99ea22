#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace occlab::cli {

struct Column {
  std::string name;
  std::string type;  // "integer", "number", "string" or "boolean"
  std::string description;
};

/// Long-format table; every cell is already formatted.
struct Table {
  Table(std::string name, std::string description, std::vector<Column> columns)
      : name(std::move(name)), description(std::move(description)), columns(std::move(columns)) {}

  std::string name;  // file stem
  std::string description;
  std::vector<Column> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
};

/// Shortest round-trip decimal form; identical doubles always print identically.
std::string format_number(double x);
std::string format_integer(long long x);
std::string format_bool(bool b);

/// FNV-1a over the file bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& p);

/// Writes tables (CSV plus `<stem>.schema.json`) and JSON reports into one directory and
/// records each file for the manifest.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  void write(const Table& t);
  void write_json(const std::string& stem, const nlohmann::json& j);
  /// manifest.json: every file written so far with size and checksum.
  void finish();

 private:
  void record(const std::string& file, const std::string& kind);

  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace occlab::cli
