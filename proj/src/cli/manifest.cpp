#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "skp/cli.hpp"
#include "skp/error.hpp"

namespace skp::cli {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  }

  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("SHA-256 update failed");
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error("SHA-256 final failed");
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kDigits[md[i] >> 4]);
      out.push_back(kDigits[md[i] & 15]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void Manifest::add_input(const std::string& role, const fs::path& path) {
  inputs_[role] = {{"file", path.filename().string()}, {"sha256", sha256_file(path)}};
}

void Manifest::add_output(const fs::path& path) { outputs_[path.filename().string()] = sha256_file(path); }

nlohmann::ordered_json Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "skp";
  j["manifest_version"] = 1;
  j["command"] = command_;
  j["config"] = config_;
  j["seeds"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : seeds_) j["seeds"][k] = v;
  j["counts"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : counts_) j["counts"][k] = v;
  j["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inputs_) j["inputs"][k] = v;
  j["outputs"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : outputs_) j["outputs"][k] = v;
  return j;
}

void Manifest::write(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

fs::path manifest_path_for(const fs::path& output) {
  fs::path p = output;
  p.replace_extension();
  return p.string() + ".manifest.json";
}

}  // namespace skp::cli
