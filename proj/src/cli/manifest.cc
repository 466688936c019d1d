#include "manifest.h"

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <memory>

#include "plsa/util.h"

namespace plsa::cli {

namespace fs = std::filesystem;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for checksumming");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buffer;
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

Manifest::Manifest(std::string command, const std::vector<std::string>& args) {
  doc_["format"] = "plsa-manifest";
  doc_["version"] = kManifestVersion;
  doc_["command"] = std::move(command);
  doc_["argv"] = args;
  doc_["working_directory"] = fs::current_path().string();
  doc_["parameters"] = nlohmann::json::object();
  doc_["inputs"] = nlohmann::json::object();
  doc_["outputs"] = nlohmann::json::object();
}

void Manifest::input(const std::string& role, const std::string& path) {
  doc_["inputs"][role] = {{"path", path}, {"sha256", sha256_file(path)}};
}

void Manifest::inputs(const std::string& role, const std::vector<std::string>& paths) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& p : paths) list.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  doc_["inputs"][role] = std::move(list);
}

void Manifest::output(const std::string& dir, const std::string& name) {
  doc_["outputs"][name] = sha256_file((fs::path(dir) / name).string());
}

void Manifest::save(const std::string& dir) const {
  const auto path = (fs::path(dir) / kManifestFile).string();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << doc_.dump(2) << '\n';
}

nlohmann::json load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "plsa-manifest") {
    throw DataError(path + ": not a plsa run manifest");
  }
  if (doc.value("version", 0) != kManifestVersion) {
    throw DataError(path + ": unsupported manifest version");
  }
  return doc;
}

}  // namespace plsa::cli
