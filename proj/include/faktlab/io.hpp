#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace faktlab::io {

using Json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Shortest round-trip decimal form; identical across runs.
std::string format_double(double value);
/// Fixed-point with the given number of decimals.
std::string format_fixed(double value, int decimals);

/// Hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Line-delimited JSON: a header object followed by one record per line.
struct JsonLines {
  Json header;
  std::vector<Json> records;
};

JsonLines read_jsonl(const std::filesystem::path& path, std::string_view expected_schema);
void write_jsonl(const std::filesystem::path& path, const Json& header,
                 const std::vector<Json>& records);

/// Minimal CSV writer. Fields containing separators or quotes are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);

  CsvWriter& row(std::vector<std::string> fields);
  std::string str() const { return out_; }
  void save(const std::filesystem::path& path) const { write_file(path, out_); }

 private:
  std::size_t width_;
  std::string out_;
};

std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace faktlab::io
