#include "manifest.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "aan/errors.hpp"

namespace aan::cli {

using nlohmann::json;

std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-1 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string file_sha1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return git_blob_sha1(buf.str());
}

Manifest::Manifest(std::string command) : command_(std::move(command)) {}

void Manifest::add_input(const std::string& role, const std::filesystem::path& path) {
  inputs_.push_back({{"role", role}, {"path", path.generic_string()}, {"sha1", file_sha1(path)}});
}

void Manifest::add_output(const std::filesystem::path& dir, const std::string& name) {
  outputs_.push_back({{"path", name}, {"sha1", file_sha1(dir / name)}});
}

json Manifest::to_json() const {
  // one hash over every input content, in role order
  std::string joined;
  for (const auto& in : inputs_) joined += in["role"].get<std::string>() + " " + in["sha1"].get<std::string>() + "\n";
  json j{{"format", "aan-run"},
         {"command", command_},
         {"config", config_},
         {"inputs", inputs_},
         {"input_hash", git_blob_sha1(joined)},
         {"outputs", outputs_},
         {"summary", summary_}};
  if (has_seed_) j["seed"] = seed_;
  return j;
}

void Manifest::write(const std::filesystem::path& dir) const {
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << to_json().dump(2) << "\n";
}

void prepare_output_dir(const std::filesystem::path& dir, bool overwrite) {
  namespace fs = std::filesystem;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !overwrite) {
      throw ConfigError("output directory " + dir.string() + " is not empty; pass --overwrite to replace its files");
    }
  }
  fs::create_directories(dir);
}

}  // namespace aan::cli
