#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "aan/model/aan.hpp"

namespace aan::model {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const nlohmann::json& j);

struct Checkpoint {
  std::unique_ptr<AAN> model;
  std::string vocab_hash;
  /// Free-form training metadata stored alongside the weights.
  nlohmann::json extra;
};

/// Serializes all parameters (named), batch-norm running statistics, the
/// model configuration and the vocabulary hash. Doubles round-trip exactly.
std::string dump_checkpoint(const AAN& model, const std::string& vocab_hash, const nlohmann::json& extra = {});
void save_checkpoint(const std::filesystem::path& path, const AAN& model, const std::string& vocab_hash,
                     const nlohmann::json& extra = {});

/// Throws ParseError on a malformed file or a shape mismatch.
Checkpoint parse_checkpoint(const std::string& text);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws ConfigError naming both hashes when they differ.
void require_vocab_hash(const Checkpoint& ckpt, const std::string& corpus_hash);

}  // namespace aan::model
