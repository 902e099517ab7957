#include "tsinterp/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "tsinterp/config.hpp"
#include "tsinterp/errors.hpp"

namespace tsinterp {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("SHA-256 initialization failed");
    }
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("SHA-256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len) != 1) throw std::runtime_error("SHA-256 final failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return out.str();
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string() + " for hashing");
  Sha256 h;
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) h.update(buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

RunManifest::RunManifest(std::filesystem::path run_dir) : run_dir_(std::move(run_dir)) {
  const auto file = path();
  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    try {
      doc_ = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(file.string() + ": not a valid manifest (" + e.what() + ")");
    }
  }
  if (!doc_.is_object()) doc_ = nlohmann::json::object();
  doc_["engine"] = "tsinterp";
  doc_["version"] = kEngineVersion;
}

void RunManifest::set_config(const std::string& snapshot, std::uint64_t seed) {
  doc_["config"] = snapshot;
  doc_["seed"] = seed;
}

void RunManifest::record_stage(const std::string& stage, double seconds) {
  doc_["stages"][stage]["seconds"] = seconds;
}

void RunManifest::record_method(const std::string& method, double seconds, std::size_t instances) {
  auto& entry = doc_["stages"]["interpret"]["methods"][method];
  entry["seconds"] = seconds;
  entry["instances"] = instances;
}

void RunManifest::record_input(const std::filesystem::path& file) {
  doc_["inputs"][std::filesystem::absolute(file).lexically_normal().string()] = sha256_file(file);
}

void RunManifest::record_output(const std::filesystem::path& file) {
  const auto rel = std::filesystem::relative(file, run_dir_).generic_string();
  doc_["outputs"][rel] = sha256_file(file);
}

void RunManifest::save() const {
  std::filesystem::create_directories(run_dir_);
  const auto file = path();
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ValidationError("cannot write " + tmp);
    out << doc_.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace tsinterp
