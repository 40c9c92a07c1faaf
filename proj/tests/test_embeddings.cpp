#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "beyt/embeddings.hpp"
#include "beyt/error.hpp"
#include "beyt/rng.hpp"
#include "support.hpp"

using namespace beyt;

namespace {

double cosine(std::span<const float> a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += double(a[i]) * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

std::vector<double> widen(std::span<const float> a) { return {a.begin(), a.end()}; }

}  // namespace

TEST(Sgns, ZeroLearningRateKeepsInitialization) {
  const Vocabulary vocab({}, {"a", "b", "c"});
  EmbeddingConfig cfg;
  cfg.dims = 8;
  cfg.epochs = 1;
  cfg.lr = 0;
  cfg.seed = 99;
  const auto m = train_sgns({TokenSequence{{kCls, 3, 4, 5, 3}}}, vocab, cfg);

  // Same draws as the initializer: U(-0.5/d, 0.5/d) row by row.
  Rng rng(cfg.seed);
  const double half = 0.5 / 8;
  ASSERT_EQ(m.input.size(), 6u * 8u);
  for (float x : m.input) EXPECT_EQ(x, static_cast<float>(rng.uniform(-half, half)));
  for (float x : m.output) EXPECT_EQ(x, 0.0f);
}

TEST(Sgns, CooccurringPairScoresHigher) {
  const Vocabulary vocab({}, {"a", "b"});
  TokenSequence s;
  for (int i = 0; i < 200; ++i) s.ids.push_back(3 + i % 2);
  EmbeddingConfig cfg;
  cfg.dims = 16;
  cfg.window = 1;
  cfg.epochs = 5;
  const auto m = train_sgns({s}, vocab, cfg);

  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  std::vector<double> random(16);
  for (auto& x : random) x = nd(gen);
  const auto a = m.input_row(3);
  EXPECT_GT(cosine(a, widen(m.output_row(4))), cosine(a, random));
  EXPECT_GT(cosine(a, widen(m.output_row(4))), 0.5);
}

TEST(Sgns, LossDecreasesWithTraining) {
  const Vocabulary vocab({}, {"a", "b", "c", "d"});
  std::vector<TokenSequence> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back({{3, 4, 3, 4}});
  for (int i = 0; i < 50; ++i) corpus.push_back({{5, 6, 5, 6}});
  EmbeddingConfig cfg;
  cfg.dims = 8;
  cfg.window = 1;
  auto frozen = cfg;
  frozen.lr = 0;
  const TokenId negs[] = {5, 6};
  const double before = sgns_loss(train_sgns(corpus, vocab, frozen), 3, 4, negs);
  const double after = sgns_loss(train_sgns(corpus, vocab, cfg), 3, 4, negs);
  EXPECT_LT(after, before);
  EXPECT_NEAR(before, 3 * std::log(2.0), 1e-12);  // zero output vectors: sigmoid(0) everywhere
}

TEST(Sgns, DeterministicForSeed) {
  const Vocabulary vocab({}, {"a", "b", "c", "d", "e"});
  std::vector<TokenSequence> corpus;
  std::mt19937 gen(1);
  for (int i = 0; i < 30; ++i) {
    TokenSequence t{{kCls}};
    for (int j = 0; j < 6; ++j) t.ids.push_back(3 + gen() % 5);
    corpus.push_back(t);
  }
  EmbeddingConfig cfg;
  cfg.dims = 12;
  const auto a = train_sgns(corpus, vocab, cfg);
  const auto b = train_sgns(corpus, vocab, cfg);
  EXPECT_EQ(a.serialize(), b.serialize());
  cfg.seed = 2;
  EXPECT_NE(train_sgns(corpus, vocab, cfg).serialize(), a.serialize());
}

TEST(Sgns, RejectsDegenerateInput) {
  const Vocabulary vocab({}, {"a"});
  EXPECT_THROW(train_sgns({TokenSequence{{kCls, kUnk}}}, vocab, {}), InputError);
  EmbeddingConfig zero;
  zero.dims = 0;
  EXPECT_THROW(train_sgns({TokenSequence{{3}}}, vocab, zero), InputError);
}

TEST(SemanticVector, MeansOfInputRows) {
  EmbeddingMatrix m;
  m.config.dims = 3;
  m.vocab_size = 5;
  m.input = {0, 0, 0, 9, 9, 9, 9, 9, 9, 1, 2, 3, 5, -2, 0.5f};
  m.output.assign(15, 0);

  const Vec one = verse_semantic_vector({{kCls, 3}}, m);
  EXPECT_EQ(one, (Vec(3) << 1, 2, 3).finished());
  EXPECT_EQ(verse_semantic_vector({{kCls, 3, 3}}, m), one);

  const Vec two = verse_semantic_vector({{kCls, 3, kUnk, 4, kPad}}, m);
  for (int c = 0; c < 3; ++c)
    EXPECT_DOUBLE_EQ(two[c], (double(m.input[9 + c]) + double(m.input[12 + c])) / 2.0);

  EXPECT_TRUE(verse_semantic_vector({{kCls, kUnk}}, m).isZero());
}

TEST(EmbeddingFile, RoundTrip) {
  const Vocabulary vocab({}, {"a", "b"});
  EmbeddingConfig cfg;
  cfg.dims = 4;
  const auto m = train_sgns({TokenSequence{{3, 4, 3}}}, vocab, cfg);
  test::TempDir dir;
  save_embeddings(m, dir / "e.bin");
  const auto back = load_embeddings(dir / "e.bin");
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.hash(), m.hash());
  EXPECT_THROW(EmbeddingMatrix::deserialize("BEYTEMB1short"), InputError);
}
