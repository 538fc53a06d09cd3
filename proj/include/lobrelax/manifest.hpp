#pragma once

// Run manifest: settings snapshot, seed, tool version, input digests and
// output paths. Written before any output so a run can be reproduced from it.

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lobrelax/config.hpp"
#include "lobrelax/error.hpp"

namespace lobrelax {

inline constexpr const char* tool_version = "0.1.0";

/// Hex SHA-256 of a file's bytes.
inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 init failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  Settings settings;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;

  void add_input(const std::string& path) { inputs.emplace_back(path, sha256_file(path)); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "lobrelax";
    j["version"] = tool_version;
    j["command"] = command;
    j["seed"] = seed;
    auto& cfg = j["config"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : settings.entries()) cfg[key] = value;
    auto& in = j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& [path, digest] : inputs) in.push_back({{"path", path}, {"sha256", digest}});
    j["outputs"] = outputs;
    return j;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << to_json().dump(2) << '\n';
  }
};

}  // namespace lobrelax
