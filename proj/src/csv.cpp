#include "uzmm/csv.hpp"

#include <sstream>
#include <stdexcept>

#include "uzmm/config.hpp"

namespace uzmm {

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(path), width_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) {
  if (values.size() != width_) throw std::logic_error("CSV row width differs from the header");
  std::size_t i = 0;
  for (double v : values) out_ << (i++ ? "," : "") << format_number(v);
  out_ << '\n';
}

void CsvWriter::row(const std::vector<std::optional<double>>& values) {
  if (values.size() != width_) throw std::logic_error("CSV row width differs from the header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    if (values[i]) out_ << format_number(*values[i]);
  }
  out_ << '\n';
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::out_of_range("no CSV column named " + name);
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::optional<double>> row;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      const std::string cell =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      row.push_back(cell.empty() ? std::nullopt : std::optional<double>(parse_number(cell)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != table.header.size())
      throw std::runtime_error("ragged CSV row in " + path.string());
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace uzmm
