#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace tsinterp {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

/// manifest.json in a run's output directory. Each stage merges its entries
/// into the existing document: the resolved config snapshot, engine version,
/// per-stage and per-method timings, and SHA-256 digests of every input read
/// and every output written (outputs keyed by path relative to the run dir).
class RunManifest {
 public:
  explicit RunManifest(std::filesystem::path run_dir);

  void set_config(const std::string& snapshot, std::uint64_t seed);
  void record_stage(const std::string& stage, double seconds);
  void record_method(const std::string& method, double seconds, std::size_t instances);
  void record_input(const std::filesystem::path& path);
  void record_output(const std::filesystem::path& path);
  void save() const;

  const nlohmann::json& document() const { return doc_; }
  std::filesystem::path path() const { return run_dir_ / "manifest.json"; }

 private:
  std::filesystem::path run_dir_;
  nlohmann::json doc_;
};

}  // namespace tsinterp
