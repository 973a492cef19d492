#include "snapnet/manifest.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "snapnet/error.hpp"
#include "snapnet/scenario.hpp"

namespace snapnet {

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error(Errc::kInvalidArgument, "sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string Manifest::config_hash() const {
  // Length-prefixed fields so that moving bytes between inputs changes the hash.
  std::string blob = command;
  blob += '\0';
  for (const auto& [label, bytes] : inputs) {
    blob += label + '\0' + std::to_string(bytes.size()) + '\0' + bytes;
  }
  blob += options.dump();
  return sha256_hex(blob);
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["tool"] = kToolVersion;
  j["command"] = command;
  j["config_sha256"] = config_hash();
  j["options"] = options;
  j["parameters"] = parameters;
  nlohmann::json in = nlohmann::json::array();
  for (const auto& [label, bytes] : inputs) in.push_back({{"name", label}, {"sha256", sha256_hex(bytes)}});
  j["inputs"] = in;
  nlohmann::json out = nlohmann::json::array();
  for (const auto& a : artifacts) {
    out.push_back({{"file", a.filename().string()}, {"sha256", sha256_hex(read_file(a))}});
  }
  j["artifacts"] = out;
  return j;
}

void Manifest::write(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::kInvalidArgument, "cannot write '" + path.string() + "'");
  os << to_json().dump(2) << '\n';
}

}  // namespace snapnet
