#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "beyt/corpus.hpp"

namespace beyt {

struct NormalizationConfig {
  bool map_arabic_yeh = true;
  bool map_arabic_kaf = true;
  bool strip_diacritics = true;
  bool retain_zwnj = true;
  bool strip_tatweel = true;
  bool collapse_whitespace = true;

  bool operator==(const NormalizationConfig&) const = default;
};

void to_json(nlohmann::json& j, const NormalizationConfig& c);
void from_json(const nlohmann::json& j, NormalizationConfig& c);

inline constexpr char32_t kZwnj = 0x200C;

// Character mapping, diacritic/tatweel removal, markup stripping, whitespace
// collapse and ZWNJ policy. Idempotent.
std::string normalize_text(std::string_view s, const NormalizationConfig& cfg = {});

// Whitespace-delimited tokens of already-normalized text.
std::vector<std::string> split_tokens(std::string_view normalized);

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kCls = 2;
inline constexpr std::size_t kReservedTokens = 3;
inline constexpr std::size_t kDefaultMaxLen = 64;

struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t length() const { return ids.size(); }
  bool operator==(const TokenSequence&) const = default;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  // `tokens` excludes the reserved entries; they are given ids 3, 4, ...
  Vocabulary(NormalizationConfig cfg, std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  TokenId id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const NormalizationConfig& config() const { return cfg_; }

  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);
  std::string hash() const;

  bool operator==(const Vocabulary& o) const {
    return cfg_ == o.cfg_ && tokens_ == o.tokens_;
  }

 private:
  NormalizationConfig cfg_;
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId> ids_;
};

// Frequency-descending ids with lexicographic tie-break, tokens with
// frequency >= min_freq only. Throws InputError when nothing survives.
Vocabulary build_vocab(const Corpus& corpus, const NormalizationConfig& cfg,
                       std::size_t min_freq = 1);

void save_vocab(const Vocabulary& v, const std::filesystem::path& path);
Vocabulary load_vocab(const std::filesystem::path& path);

// [CLS] + hemistich_1 ids + hemistich_2 ids, truncated to max_len.
// Throws InputError("empty verse") if both hemistichs normalize to nothing.
TokenSequence tokenize_verse(const Verse& v, const Vocabulary& vocab,
                             std::size_t max_len = kDefaultMaxLen);

}  // namespace beyt
