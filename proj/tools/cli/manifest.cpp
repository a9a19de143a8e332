#include "cli/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

#include "aberray/error.hpp"

namespace aberray::cli {

const char* tool_version() { return ABERRAY_VERSION; }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 unavailable");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void RunManifest::add_input(const std::filesystem::path& path) { inputs.emplace_back(path.string(), sha256_file(path)); }

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs.emplace_back(path.string(), sha256_file(path));
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["subcommand"] = subcommand;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  j["config"] = config;
  auto files = [](const auto& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [path, digest] : list) arr.push_back({{"path", path}, {"sha256", digest}});
    return arr;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.subcommand = j.at("subcommand").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config = j.at("config");
  for (const auto& f : j.at("inputs")) m.inputs.emplace_back(f.at("path"), f.at("sha256"));
  for (const auto& f : j.at("outputs")) m.outputs.emplace_back(f.at("path"), f.at("sha256"));
  return m;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  write_text_atomic(path, manifest.to_json().dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  return RunManifest::from_json(nlohmann::json::parse(in));
}

}  // namespace aberray::cli
