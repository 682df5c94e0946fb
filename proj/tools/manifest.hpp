#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace aan::cli {

/// Git blob hash: SHA-1 over "blob <size>\0" followed by the content.
std::string git_blob_sha1(const std::string& content);
std::string file_sha1(const std::filesystem::path& path);

/// Run record written next to every command's outputs.
class Manifest {
 public:
  explicit Manifest(std::string command);

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; has_seed_ = true; }
  void add_input(const std::string& role, const std::filesystem::path& path);
  /// `name` is relative to the output directory.
  void add_output(const std::filesystem::path& dir, const std::string& name);
  void set_summary(nlohmann::json summary) { summary_ = std::move(summary); }

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json summary_ = nlohmann::json::object();
  std::uint64_t seed_ = 0;
  bool has_seed_ = false;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
};

/// Creates `dir`; refuses a non-empty existing directory unless `overwrite`.
void prepare_output_dir(const std::filesystem::path& dir, bool overwrite);

}  // namespace aan::cli
