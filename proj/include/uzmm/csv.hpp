#pragma once

// Comma-delimited numeric CSV with a mandatory header row. Numbers are
// written in shortest round-trip form; an empty field stands for a missing
// value.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace uzmm {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  void row(std::initializer_list<double> values);
  void row(const std::vector<std::optional<double>>& values);

 private:
  std::ofstream out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;

  /// Column index by name; throws std::out_of_range when absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace uzmm
