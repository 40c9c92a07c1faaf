#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "beyt/encoder.hpp"
#include "beyt/error.hpp"

using namespace beyt;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1, 1);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(gen);
  return m;
}

EncoderConfig small(std::size_t layers = 2) {
  EncoderConfig cfg;
  cfg.vocab_size = 10;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_layers = layers;
  cfg.d_ff = 12;
  cfg.max_len = 16;
  return cfg;
}

}  // namespace

TEST(Attention, SingleUnmaskedKey) {
  std::mt19937_64 gen(1);
  const Mat q = random_mat(3, 4, gen), k = random_mat(3, 4, gen), v = random_mat(3, 5, gen);
  const bool mask[] = {true, false, true};
  const auto r = attention(q, k, v, mask);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(r.weights(i, 1), 1.0);
    EXPECT_TRUE(r.output.row(i).isApprox(v.row(1), 1e-15));
  }
  const auto self = attention(q.topRows(1), k.topRows(1), v.topRows(1));
  EXPECT_DOUBLE_EQ(self.weights(0, 0), 1.0);
  EXPECT_EQ(self.output, v.topRows(1));
}

TEST(Attention, EqualLogitsAverageUnmaskedValues) {
  Mat q(1, 2);
  q << 1, 0;
  Mat k(3, 2);
  k << 0, 1, 0, -2, 0, 5;
  std::mt19937_64 gen(2);
  const Mat v = random_mat(3, 4, gen);
  const bool mask[] = {false, true, false};
  const auto r = attention(q, k, v, mask);
  const RowVec expected = (v.row(0) + v.row(2)) / 2.0;
  EXPECT_NEAR((r.output.row(0) - expected).norm(), 0.0, 1e-15);
}

TEST(Attention, TwoTokenByHand) {
  Mat q(2, 2), k(2, 2), v(2, 2);
  q << 1, 0, 0, 1;
  k << 1, 1, 0, 2;
  v << 1, 2, 3, 4;
  // Logits / sqrt(2): row 0 [1, 0], row 1 [1, 2].
  const double s = std::sqrt(2.0);
  const double a0 = std::exp(1 / s) / (std::exp(1 / s) + 1.0);
  const double a1 = std::exp(1 / s) / (std::exp(1 / s) + std::exp(2 / s));
  const auto r = attention(q, k, v);
  EXPECT_NEAR(r.weights(0, 0), a0, 1e-15);
  EXPECT_NEAR(r.weights(1, 0), a1, 1e-15);
  EXPECT_NEAR(r.output(0, 0), a0 * 1 + (1 - a0) * 3, 1e-14);
  EXPECT_NEAR(r.output(0, 1), a0 * 2 + (1 - a0) * 4, 1e-14);
  EXPECT_NEAR(r.output(1, 0), a1 * 1 + (1 - a1) * 3, 1e-14);
  EXPECT_NEAR(r.output(1, 1), a1 * 2 + (1 - a1) * 4, 1e-14);
}

TEST(Attention, RowsSumToOne) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 20; ++t) {
    const Mat q = random_mat(6, 4, gen) * 10, k = random_mat(6, 4, gen) * 10;
    const auto r = attention(q, k, random_mat(6, 3, gen));
    for (Eigen::Index i = 0; i < 6; ++i) EXPECT_NEAR(r.weights.row(i).sum(), 1.0, 1e-12);
  }
}

TEST(Attention, RejectsDegenerateShapes) {
  const Mat empty(2, 0), v = Mat::Ones(2, 2);
  EXPECT_THROW(attention(empty, empty, v), InputError);
  const bool all[] = {true, true};
  EXPECT_THROW(attention(v, v, v, all), InputError);
}

TEST(Ffn, ConstantMap) {
  const Mat w1 = Mat::Zero(3, 5), w2 = Mat::Zero(5, 3);
  RowVec b2(3);
  b2 << 1, -2, 3;
  std::mt19937_64 gen(4);
  const Mat out = ffn(random_mat(4, 3, gen), w1, RowVec::Zero(5), w2, b2);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(out.row(i), b2);
}

TEST(Ffn, NegativePreActivationGivesBias) {
  const Mat x = Mat::Ones(1, 2);
  const Mat w1 = -Mat::Ones(2, 3);
  std::mt19937_64 gen(5);
  const Mat w2 = random_mat(3, 2, gen);
  const RowVec b2 = random_mat(1, 2, gen);
  EXPECT_EQ(ffn(x, w1, RowVec::Zero(3), w2, b2), b2);
}

TEST(Ffn, MatchesLoopRecomputation) {
  std::mt19937_64 gen(6);
  const Mat x = random_mat(3, 4, gen), w1 = random_mat(4, 6, gen), w2 = random_mat(6, 2, gen);
  const RowVec b1 = random_mat(1, 6, gen), b2 = random_mat(1, 2, gen);
  const Mat out = ffn(x, w1, b1, w2, b2);
  for (int i = 0; i < 3; ++i)
    for (int o = 0; o < 2; ++o) {
      double acc = b2[o];
      for (int h = 0; h < 6; ++h) {
        double pre = b1[h];
        for (int c = 0; c < 4; ++c) pre += x(i, c) * w1(c, h);
        acc += std::max(pre, 0.0) * w2(h, o);
      }
      EXPECT_NEAR(out(i, o), acc, 1e-12);
    }
}

TEST(Encoder, ZeroLayersIsEmbeddingPlusPosition) {
  const auto cfg = small(0);
  const auto p = init_encoder(cfg);
  const std::vector<TokenId> ids{kCls, 4, 5};
  const Vec out = encoder_forward(ids, p, cfg);
  const Vec expected =
      (p.token_embedding.row(kCls) + sinusoidal_table(1, cfg.d_model).row(0)).transpose();
  EXPECT_EQ(out, expected);
}

TEST(Encoder, SinusoidalTable) {
  const Mat t = sinusoidal_table(3, 4);
  EXPECT_DOUBLE_EQ(t(0, 0), 0);
  EXPECT_DOUBLE_EQ(t(0, 1), 1);
  EXPECT_DOUBLE_EQ(t(2, 0), std::sin(2.0));
  EXPECT_DOUBLE_EQ(t(2, 3), std::cos(2.0 / 100.0));
}

TEST(Encoder, PaddingDoesNotChangeOutput) {
  for (auto norm : {NormPlacement::post, NormPlacement::pre}) {
    auto cfg = small();
    cfg.norm = norm;
    const auto p = init_encoder(cfg);
    std::vector<TokenId> a{kCls, 3, 7, 4};
    std::vector<TokenId> b = a;
    b.insert(b.end(), 2, kPad);
    std::vector<TokenId> c = a;
    c.insert(c.end(), 9, kPad);
    const Vec ya = encoder_forward(a, p, cfg);
    EXPECT_EQ(encoder_forward(b, p, cfg), ya);
    EXPECT_EQ(encoder_forward(c, p, cfg), ya);
  }
}

TEST(Encoder, Deterministic) {
  const auto cfg = small();
  const std::vector<TokenId> ids{kCls, 3, 4};
  EXPECT_EQ(encoder_forward(ids, init_encoder(cfg), cfg), encoder_forward(ids, init_encoder(cfg), cfg));
}

TEST(Encoder, WithoutPositionsIsPermutationInvariant) {
  auto cfg = small();
  cfg.positional = PositionalEncoding::none;
  const auto p = init_encoder(cfg);
  const Vec a = encoder_forward(std::vector<TokenId>{kCls, 3, 4, 5}, p, cfg);
  const Vec b = encoder_forward(std::vector<TokenId>{kCls, 5, 3, 4}, p, cfg);
  EXPECT_LT((a - b).norm(), 1e-12);
}

TEST(Encoder, RejectsBadInput) {
  const auto cfg = small();
  const auto p = init_encoder(cfg);
  EXPECT_THROW(encoder_forward(std::vector<TokenId>{}, p, cfg), InputError);
  EXPECT_THROW(encoder_forward(std::vector<TokenId>{kCls, 99}, p, cfg), InputError);
  EXPECT_THROW(encode_verse(TokenSequence{std::vector<TokenId>(17, 3)}, p, cfg), InputError);
  auto bad = cfg;
  bad.n_heads = 3;
  EXPECT_THROW(bad.validate(), InputError);
}

// Central differences on L = c . encoder(ids) against the analytic gradient.
TEST(Encoder, GradientMatchesFiniteDifferences) {
  for (auto pos : {PositionalEncoding::sinusoidal, PositionalEncoding::learned})
    for (auto norm : {NormPlacement::post, NormPlacement::pre}) {
      auto cfg = small();
      cfg.positional = pos;
      cfg.norm = norm;
      auto p = init_encoder(cfg);
      const std::vector<TokenId> ids{kCls, 3, 5, 3, kPad};
      std::mt19937_64 gen(7);
      const Vec c = random_mat(8, 1, gen);

      EncoderCache cache;
      encoder_forward(ids, p, cfg, false, nullptr, &cache);
      auto grads = zeros_like(p);
      encoder_backward(c, cache, p, cfg, grads);

      double diff2 = 0, sum2 = 0;
      visit_tensors(
          [&](const std::string&, bool, auto& w, auto& g) {
            for (Eigen::Index i = 0; i < w.size(); ++i) {
              const double keep = w.data()[i];
              const double h = 1e-6;
              w.data()[i] = keep + h;
              const double up = c.dot(encoder_forward(ids, p, cfg));
              w.data()[i] = keep - h;
              const double down = c.dot(encoder_forward(ids, p, cfg));
              w.data()[i] = keep;
              const double num = (up - down) / (2 * h);
              diff2 += (num - g.data()[i]) * (num - g.data()[i]);
              sum2 += num * num + g.data()[i] * g.data()[i];
            }
          },
          p, grads);
      EXPECT_LT(std::sqrt(diff2) / std::sqrt(sum2), 1e-6);
    }
}

TEST(Encoder, DropoutOnlyWhenTraining) {
  auto cfg = small();
  cfg.dropout = 0.5;
  const auto p = init_encoder(cfg);
  const std::vector<TokenId> ids{kCls, 3, 4};
  Rng rng(1);
  const Vec eval = encoder_forward(ids, p, cfg);
  EXPECT_EQ(encoder_forward(ids, p, cfg, false, &rng), eval);
  EXPECT_NE(encoder_forward(ids, p, cfg, true, &rng), eval);
}
