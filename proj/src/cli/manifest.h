#ifndef PLSA_SRC_CLI_MANIFEST_H_
#define PLSA_SRC_CLI_MANIFEST_H_

#include <string>
#include <vector>

#include "json.hpp"

namespace plsa::cli {

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr int kManifestVersion = 1;

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

// Record of one command invocation: the arguments, resolved parameters and
// checksums of everything read and written. Keys are sorted on output so the
// file is byte-stable.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args);

  template <typename T>
  void parameter(const std::string& key, const T& value) {
    doc_["parameters"][key] = value;
  }

  void input(const std::string& role, const std::string& path);
  void inputs(const std::string& role, const std::vector<std::string>& paths);

  // `name` is relative to the output directory.
  void output(const std::string& dir, const std::string& name);

  void save(const std::string& dir) const;

  const nlohmann::json& json() const { return doc_; }

 private:
  nlohmann::json doc_;
};

nlohmann::json load_manifest(const std::string& path);

}  // namespace plsa::cli

#endif  // PLSA_SRC_CLI_MANIFEST_H_
