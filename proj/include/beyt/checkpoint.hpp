#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "beyt/corpus.hpp"
#include "beyt/features.hpp"
#include "beyt/model.hpp"

namespace beyt {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Everything needed to rebuild the classifier except the vocabulary and the
// embedding matrix, which live in their own files and are pinned by hash.
struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  ModelParams params;
  std::string vocab_hash;
  std::string embeddings_hash;
  Scaler scaler;
  MeterClassMap meter_map;
  LabelIndex form_index;
  LabelIndex poet_index;
  // Hashes of upstream artifacts (corpus, split) keyed by artifact name.
  std::map<std::string, std::string> upstream;
  nlohmann::json training_summary = nlohmann::json::object();
};

// Layout: 8-byte magic, u32 version, u64 header length, JSON header (configs,
// hashes, scaler, meter map, label indices, tensor manifest), then every
// tensor as row-major little-endian float32 in manifest order.
std::string serialize_checkpoint(const Checkpoint& c);
// Throws InputError on a malformed container and StaleArtifactError when the
// embedded meter map does not match its recorded hash.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace beyt
