#pragma once

// Run manifest: written with status "running" when a command starts and
// rewritten with checksums and wall-clock time when it ends.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace uzmm::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

class RunManifest {
 public:
  RunManifest(std::filesystem::path out_dir, std::string command, std::string config_path,
              std::string resolved_config, std::uint64_t seed, int threads,
              std::vector<std::string> argv);

  void add_artifact(const std::filesystem::path& file);
  void note(const std::string& line) { notes_.push_back(line); }
  /// Status "ok", "failed" or "verification_failed".
  void finish(const std::string& status);

 private:
  void write(const std::string& status, bool checksums) const;

  std::filesystem::path out_dir_;
  std::string command_, config_path_, resolved_;
  std::uint64_t seed_;
  int threads_;
  std::vector<std::string> argv_;
  std::vector<std::filesystem::path> artifacts_;
  std::vector<std::string> notes_;
  std::string started_at_;
  std::chrono::steady_clock::time_point started_;
};

}  // namespace uzmm::cli
