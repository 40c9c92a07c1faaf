#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beyt/normalize.hpp"
#include "beyt/tensor.hpp"

namespace beyt {

struct EmbeddingConfig {
  std::size_t dims = 100;
  std::size_t window = 4;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr = 0.025;
  // Linear decay never goes below lr * min_lr_fraction.
  double min_lr_fraction = 1e-4;
  std::uint64_t seed = 1;

  bool operator==(const EmbeddingConfig&) const = default;
};

void to_json(nlohmann::json& j, const EmbeddingConfig& c);
void from_json(const nlohmann::json& j, EmbeddingConfig& c);

// Input (center) and output (context) vectors, row-major |V| x d each.
struct EmbeddingMatrix {
  EmbeddingConfig config;
  std::size_t vocab_size = 0;
  std::vector<float> input;
  std::vector<float> output;

  std::size_t dims() const { return config.dims; }
  std::span<const float> input_row(TokenId id) const;
  std::span<const float> output_row(TokenId id) const;

  std::string serialize() const;
  static EmbeddingMatrix deserialize(std::string_view bytes);
  std::string hash() const;

  bool operator==(const EmbeddingMatrix&) const = default;
};

// Skip-gram with negative sampling. Reserved ids are dropped from the
// training stream; negatives come from the unigram^0.75 distribution of the
// stream itself. Single-threaded and bit-reproducible for a given seed.
EmbeddingMatrix train_sgns(const std::vector<TokenSequence>& sentences, const Vocabulary& vocab,
                           const EmbeddingConfig& cfg = {});

// Negative SGNS objective for one (center, context, negatives) tuple.
double sgns_loss(const EmbeddingMatrix& m, TokenId center, TokenId context,
                 std::span<const TokenId> negatives);

// Mean of the input vectors of non-reserved tokens; zero when there are none.
Vec verse_semantic_vector(const TokenSequence& t, const EmbeddingMatrix& m);

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

}  // namespace beyt
