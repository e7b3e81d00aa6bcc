#include "manifest.hpp"

#include <openssl/evp.h>

#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace uzmm::cli {

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string() + " for checksum");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 unavailable");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
  return hex.str();
}

RunManifest::RunManifest(std::filesystem::path out_dir, std::string command, std::string config_path,
                         std::string resolved_config, std::uint64_t seed, int threads,
                         std::vector<std::string> argv)
    : out_dir_(std::move(out_dir)),
      command_(std::move(command)),
      config_path_(std::move(config_path)),
      resolved_(std::move(resolved_config)),
      seed_(seed),
      threads_(threads),
      argv_(std::move(argv)),
      started_at_(utc_now()),
      started_(std::chrono::steady_clock::now()) {
  std::filesystem::create_directories(out_dir_);
  write("running", false);
}

void RunManifest::add_artifact(const std::filesystem::path& file) { artifacts_.push_back(file); }

void RunManifest::finish(const std::string& status) { write(status, true); }

void RunManifest::write(const std::string& status, bool checksums) const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["status"] = status;
  j["argv"] = argv_;
  j["config_path"] = config_path_;
  j["resolved_config"] = resolved_;
  j["output_directory"] = std::filesystem::absolute(out_dir_).string();
  j["seed"] = seed_;
  j["threads"] = threads_;
  j["started_at"] = started_at_;
  if (checksums) {
    j["finished_at"] = utc_now();
    j["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    auto& files = j["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& f : artifacts_)
      if (std::filesystem::exists(f))
        files.push_back({{"file", f.filename().string()}, {"sha256", sha256_file(f)},
                         {"bytes", std::filesystem::file_size(f)}});
  }
  if (!notes_.empty()) j["notes"] = notes_;
  std::ofstream out(out_dir_ / "manifest.json");
  out << j.dump(2) << '\n';
}

}  // namespace uzmm::cli
