#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "beyt/error.hpp"
#include "beyt/normalize.hpp"
#include "beyt/synthetic.hpp"
#include "beyt/utf8.hpp"
#include "support.hpp"

using namespace beyt;

namespace {

std::string u8(std::u32string_view s) { return utf8::encode(s); }

Corpus one_verse(const std::string& h1, const std::string& h2 = "") {
  auto r = test::poem("p", "A", 1);
  r.verses[0] = {h1, h2};
  return Corpus({r});
}

}  // namespace

TEST(Utf8, RoundTripAndErrors) {
  const std::string s = "می‌روم ،abc";
  EXPECT_EQ(utf8::encode(utf8::decode(s)), s);
  EXPECT_EQ(utf8::length("کتاب"), 4u);
  EXPECT_THROW(utf8::decode("\xC3"), InputError);
  EXPECT_THROW(utf8::decode("\xFF"), InputError);
  EXPECT_TRUE(utf8::is_punctuation(U'،'));
  EXPECT_TRUE(utf8::is_punctuation(U'!'));
  EXPECT_FALSE(utf8::is_punctuation(U'ک'));
  EXPECT_TRUE(utf8::is_space(0x00A0));
  EXPECT_FALSE(utf8::is_space(kZwnj));
}

TEST(Normalize, MapsArabicKafInPlace) {
  const auto out = utf8::decode(normalize_text(u8(U"بكر")));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[1], char32_t(0x06A9));
}

TEST(Normalize, MapsArabicYeh) {
  EXPECT_EQ(normalize_text(u8(U"علي")), u8(U"علی"));
  EXPECT_EQ(normalize_text(u8(U"موسى")), u8(U"موسی"));
}

TEST(Normalize, StripsDiacriticsTatweelAndMarkup) {
  EXPECT_EQ(normalize_text(u8(U"كَتاـب")),
            u8(U"کتاب"));
  EXPECT_EQ(normalize_text("<b>word</b>  next\t\n"), "word next");
  EXPECT_EQ(normalize_text("a<br/>b"), "a b");
}

TEST(Normalize, ZwnjPolicy) {
  const std::string with = u8(U"می‌روم");
  NormalizationConfig keep;
  EXPECT_EQ(normalize_text(with, keep), with);
  NormalizationConfig drop;
  drop.retain_zwnj = false;
  EXPECT_EQ(normalize_text(with, drop), u8(U"میروم"));
}

TEST(Normalize, Idempotent) {
  const std::u32string alphabet = U"ab \t<>/كيىَّـ‌ی،";
  std::mt19937 gen(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::u32string s;
    const int n = gen() % 20;
    for (int i = 0; i < n; ++i) s.push_back(alphabet[gen() % alphabet.size()]);
    const auto once = normalize_text(u8(s));
    EXPECT_EQ(normalize_text(once), once);
  }
}

TEST(Normalize, SplitTokens) {
  EXPECT_EQ(split_tokens("a b  c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_tokens("").empty());
}

TEST(Vocab, BuildsFromCounts) {
  const auto v = build_vocab(one_verse("a b a"), {}, 1);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v.token(kPad), "[PAD]");
  EXPECT_EQ(v.token(kUnk), "[UNK]");
  EXPECT_EQ(v.token(kCls), "[CLS]");
  EXPECT_EQ(v.id("a"), 3);
  EXPECT_EQ(v.id("b"), 4);

  const auto v2 = build_vocab(one_verse("a b a"), {}, 2);
  ASSERT_EQ(v2.size(), 4u);
  EXPECT_TRUE(v2.contains("a"));
  EXPECT_FALSE(v2.contains("b"));
  EXPECT_THROW(build_vocab(one_verse("a b"), {}, 3), InputError);
}

TEST(Vocab, IdsFollowIndependentFrequencySort) {
  SyntheticConfig sc;
  sc.poets = 3;
  sc.poems_per_poet = 20;
  const auto c = make_synthetic_corpus(sc);
  std::map<std::string, std::size_t> freq;
  for (const auto& r : c.records())
    for (const auto& v : r.verses)
      for (const auto* h : {&v.hemistich_1, &v.hemistich_2})
        for (const auto& t : split_tokens(normalize_text(*h))) ++freq[t];
  std::vector<std::pair<std::string, std::size_t>> order(freq.begin(), freq.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const auto v = build_vocab(c, {}, 1);
  ASSERT_EQ(v.size(), order.size() + kReservedTokens);
  for (std::size_t i = 0; i < order.size(); ++i)
    EXPECT_EQ(v.token(static_cast<TokenId>(i + kReservedTokens)), order[i].first);
}

TEST(Vocab, SerializationRoundTrip) {
  NormalizationConfig cfg;
  cfg.retain_zwnj = false;
  const Vocabulary v(cfg, {"x", "کتاب", "y"});
  const auto back = Vocabulary::deserialize(v.serialize());
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.hash(), v.hash());
  EXPECT_EQ(back.id("کتاب"), 4);
  EXPECT_NE(Vocabulary({}, {"x", "y"}).hash(), v.hash());
  EXPECT_THROW(Vocabulary::deserialize("garbage"), InputError);
}

TEST(Tokenize, ClsPlusWords) {
  const Vocabulary v({}, {"a", "b", "c", "d", "e"});
  const auto t = tokenize_verse({"a b c", "d e"}, v);
  EXPECT_EQ(t.ids, (std::vector<TokenId>{kCls, 3, 4, 5, 6, 7}));
}

TEST(Tokenize, TruncatesToMaxLen) {
  const Vocabulary v({}, {"w"});
  std::string h1, h2;
  for (int i = 0; i < 50; ++i) h1 += "w ";
  for (int i = 0; i < 50; ++i) h2 += "w ";
  EXPECT_EQ(tokenize_verse({h1, h2}, v, 64).length(), 64u);
  EXPECT_EQ(tokenize_verse({h1, h2}, v, 10).length(), 10u);
}

TEST(Tokenize, UnknownWordsMapToUnk) {
  const Vocabulary v({}, {"a"});
  const auto t = tokenize_verse({"a zz", ""}, v);
  EXPECT_EQ(t.ids, (std::vector<TokenId>{kCls, 3, kUnk}));
}

TEST(Tokenize, UsesVocabularyNormalization) {
  const Vocabulary v({}, {u8(U"کتاب")});
  const auto t = tokenize_verse({u8(U"كتاب"), ""}, v);
  EXPECT_EQ(t.ids[1], 3);
}

TEST(Tokenize, EmptyVerseIsAnError) {
  const Vocabulary v({}, {"a"});
  EXPECT_THROW(tokenize_verse({"<b></b>", " "}, v), InputError);
}
