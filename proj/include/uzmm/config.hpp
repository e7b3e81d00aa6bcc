#pragma once

// INI-style run configuration. Sections: [market], [preferences],
// [intensity.ask], [intensity.bid], [measure.ask], [measure.bid], [penalty],
// [grid], plus optional [sweep] and [simulation]. See configs/README.md.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uzmm/model.hpp"

namespace uzmm {

class ConfigDocument {
 public:
  using Section = std::map<std::string, std::string>;

  static ConfigDocument from_file(const std::filesystem::path& path);
  static ConfigDocument from_string(const std::string& text);

  bool has_section(const std::string& section) const;
  /// Throws ValidationError naming the missing section.
  const Section& section(const std::string& name) const;

  std::optional<std::string> find(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  /// Comma-separated numbers.
  std::vector<double> get_list(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  /// Canonical INI text (sorted sections and keys); parses back to an equal
  /// document.
  std::string to_string() const;

  const std::map<std::string, Section>& sections() const { return sections_; }

 private:
  std::map<std::string, Section> sections_;
};

ModelParams build_params(const ConfigDocument& config);
MarketModel build_model(const ConfigDocument& config);

/// Shortest round-trip decimal text for a double (locale independent).
std::string format_number(double x);
/// Strict parse of a full string as a double.
double parse_number(const std::string& text);

}  // namespace uzmm
