#include "beyt/normalize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "beyt/error.hpp"
#include "beyt/hash.hpp"
#include "beyt/utf8.hpp"

namespace beyt {

using nlohmann::json;

void to_json(json& j, const NormalizationConfig& c) {
  j = json{{"map_arabic_yeh", c.map_arabic_yeh},     {"map_arabic_kaf", c.map_arabic_kaf},
           {"strip_diacritics", c.strip_diacritics}, {"retain_zwnj", c.retain_zwnj},
           {"strip_tatweel", c.strip_tatweel},       {"collapse_whitespace", c.collapse_whitespace}};
}

void from_json(const json& j, NormalizationConfig& c) {
  NormalizationConfig d;
  c.map_arabic_yeh = j.value("map_arabic_yeh", d.map_arabic_yeh);
  c.map_arabic_kaf = j.value("map_arabic_kaf", d.map_arabic_kaf);
  c.strip_diacritics = j.value("strip_diacritics", d.strip_diacritics);
  c.retain_zwnj = j.value("retain_zwnj", d.retain_zwnj);
  c.strip_tatweel = j.value("strip_tatweel", d.strip_tatweel);
  c.collapse_whitespace = j.value("collapse_whitespace", d.collapse_whitespace);
}

std::string normalize_text(std::string_view s, const NormalizationConfig& cfg) {
  const std::u32string in = utf8::decode(s);

  std::u32string mapped;
  mapped.reserve(in.size());
  for (char32_t c : in) {
    if (cfg.map_arabic_yeh && (c == 0x064A || c == 0x0649)) c = 0x06CC;
    if (cfg.map_arabic_kaf && c == 0x0643) c = 0x06A9;
    if (cfg.strip_diacritics && c >= 0x064B && c <= 0x0652) continue;
    if (cfg.strip_tatweel && c == 0x0640) continue;
    if (!cfg.retain_zwnj && c == kZwnj) continue;
    mapped.push_back(c);
  }

  // A tag is '<' up to the next '>'; it becomes a space.
  std::u32string untagged;
  untagged.reserve(mapped.size());
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    if (mapped[i] == U'<') {
      const auto close = mapped.find(U'>', i + 1);
      if (close != std::u32string::npos) {
        untagged.push_back(U' ');
        i = close;
        continue;
      }
    }
    untagged.push_back(mapped[i]);
  }

  if (!cfg.collapse_whitespace) return utf8::encode(untagged);

  std::u32string out;
  out.reserve(untagged.size());
  bool pending_space = false;
  for (char32_t c : untagged) {
    if (utf8::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return utf8::encode(out);
}

std::vector<std::string> split_tokens(std::string_view normalized) {
  std::vector<std::string> tokens;
  const std::u32string text = utf8::decode(normalized);
  std::u32string cur;
  for (char32_t c : text) {
    if (utf8::is_space(c)) {
      if (!cur.empty()) tokens.push_back(utf8::encode(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(utf8::encode(cur));
  return tokens;
}

namespace {

const char* const kReservedNames[kReservedTokens] = {"[PAD]", "[UNK]", "[CLS]"};
constexpr std::string_view kVocabHeader = "#beyt-vocab\t";

}  // namespace

Vocabulary::Vocabulary(NormalizationConfig cfg, std::vector<std::string> tokens)
    : cfg_(cfg) {
  tokens_.assign(std::begin(kReservedNames), std::end(kReservedNames));
  for (auto& t : tokens) tokens_.push_back(std::move(t));
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
      throw InputError("duplicate vocabulary token '" + tokens_[i] + "'");
}

TokenId Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end() || it->second < static_cast<TokenId>(kReservedTokens)) return kUnk;
  return it->second;
}

std::string Vocabulary::serialize() const {
  std::ostringstream os;
  os << kVocabHeader << json(cfg_).dump() << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    os << tokens_[i] << '\t' << i << '\n';
  return os.str();
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line) || line.rfind(kVocabHeader, 0) != 0)
    throw InputError("vocabulary: missing header line");
  NormalizationConfig cfg;
  try {
    cfg = json::parse(line.substr(kVocabHeader.size())).get<NormalizationConfig>();
  } catch (const json::exception& e) {
    throw InputError(std::string("vocabulary: bad header (") + e.what() + ")");
  }
  std::vector<std::string> tokens;
  std::size_t expected = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw InputError("vocabulary: malformed line '" + line + "'");
    const std::string tok = line.substr(0, tab);
    std::size_t id = 0;
    try {
      id = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw InputError("vocabulary: malformed id in line '" + line + "'");
    }
    if (id != expected) throw InputError("vocabulary: ids are not dense at '" + tok + "'");
    ++expected;
    if (id < kReservedTokens) {
      if (tok != kReservedNames[id]) throw InputError("vocabulary: reserved id mismatch");
      continue;
    }
    tokens.push_back(tok);
  }
  if (expected < kReservedTokens) throw InputError("vocabulary: missing reserved tokens");
  return Vocabulary(cfg, std::move(tokens));
}

std::string Vocabulary::hash() const { return hash_hex(serialize()); }

Vocabulary build_vocab(const Corpus& corpus, const NormalizationConfig& cfg,
                       std::size_t min_freq) {
  std::map<std::string, std::uint64_t> freq;
  for (const auto& r : corpus.records())
    for (const auto& v : r.verses)
      for (const auto* h : {&v.hemistich_1, &v.hemistich_2})
        for (auto& t : split_tokens(normalize_text(*h, cfg))) ++freq[t];

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, n] : freq)
    if (n >= min_freq) kept.emplace_back(tok, n);
  if (kept.empty()) throw InputError("empty vocabulary");
  // freq is ordered lexicographically, so a stable sort by count gives the
  // lexicographic tie-break.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocabulary(cfg, std::move(tokens));
}

void save_vocab(const Vocabulary& v, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << v.serialize();
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("vocabulary not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return Vocabulary::deserialize(ss.str());
}

TokenSequence tokenize_verse(const Verse& v, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len == 0) throw InputError("max_len must be >= 1");
  const auto& cfg = vocab.config();
  auto first = split_tokens(normalize_text(v.hemistich_1, cfg));
  auto second = split_tokens(normalize_text(v.hemistich_2, cfg));
  if (first.empty() && second.empty()) throw InputError("empty verse");

  TokenSequence seq;
  seq.ids.reserve(std::min(max_len, 1 + first.size() + second.size()));
  seq.ids.push_back(kCls);
  for (const auto* half : {&first, &second})
    for (const auto& t : *half) {
      if (seq.ids.size() >= max_len) return seq;
      seq.ids.push_back(vocab.id(t));
    }
  return seq;
}

}  // namespace beyt
