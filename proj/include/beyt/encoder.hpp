#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "beyt/normalize.hpp"
#include "beyt/rng.hpp"
#include "beyt/tensor.hpp"

namespace beyt {

enum class PositionalEncoding { sinusoidal, learned, none };
enum class NormPlacement { post, pre };

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_heads = 2;
  std::size_t n_layers = 2;
  std::size_t d_ff = 128;
  std::size_t max_len = kDefaultMaxLen;
  double dropout = 0.0;
  PositionalEncoding positional = PositionalEncoding::sinusoidal;
  NormPlacement norm = NormPlacement::post;
  std::uint64_t seed = 7;

  // Throws InputError on inconsistent settings.
  void validate() const;
  std::size_t d_head() const { return d_model / n_heads; }
  bool operator==(const EncoderConfig&) const = default;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

struct EncoderLayerParams {
  Mat wq, wk, wv, wo;  // d_model x d_model, applied as x * W
  RowVec bq, bk, bv, bo;
  RowVec ln1_gain, ln1_bias;
  Mat w1;  // d_model x d_ff
  RowVec b1;
  Mat w2;  // d_ff x d_model
  RowVec b2;
  RowVec ln2_gain, ln2_bias;
};

struct EncoderParams {
  Mat token_embedding;  // vocab_size x d_model
  Mat positional;       // max_len x d_model when learned, else empty
  std::vector<EncoderLayerParams> layers;
};

// Calls f(name, decays, tensor...) for every tensor, walking several
// same-shaped parameter sets in lockstep (values, gradients, moments).
// `decays` is true for weight matrices and false for biases and norm params.
template <class F, class First, class... Rest>
void visit_tensors(F&& f, First& first, Rest&... rest) {
  f(std::string("token_embedding"), true, first.token_embedding, rest.token_embedding...);
  f(std::string("positional"), true, first.positional, rest.positional...);
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
#define BEYT_VISIT(member, decays) \
  f(p + #member, decays, first.layers[l].member, rest.layers[l].member...)
    BEYT_VISIT(wq, true);
    BEYT_VISIT(bq, false);
    BEYT_VISIT(wk, true);
    BEYT_VISIT(bk, false);
    BEYT_VISIT(wv, true);
    BEYT_VISIT(bv, false);
    BEYT_VISIT(wo, true);
    BEYT_VISIT(bo, false);
    BEYT_VISIT(ln1_gain, false);
    BEYT_VISIT(ln1_bias, false);
    BEYT_VISIT(w1, true);
    BEYT_VISIT(b1, false);
    BEYT_VISIT(w2, true);
    BEYT_VISIT(b2, false);
    BEYT_VISIT(ln2_gain, false);
    BEYT_VISIT(ln2_bias, false);
#undef BEYT_VISIT
  }
}

// Uniform(-0.05, 0.05) embeddings, N(0, 1/fan_in) projections, zero biases,
// unit norm gains.
EncoderParams init_encoder(const EncoderConfig& cfg);
EncoderParams zeros_like(const EncoderParams& p);

Mat sinusoidal_table(std::size_t max_len, std::size_t d_model);

struct AttentionResult {
  Mat output;   // rows(Q) x cols(V)
  Mat weights;  // rows(Q) x rows(K)
};

// softmax(Q K^T / sqrt(d_k) + mask) V. key_masked[j] excludes key j; at
// least one key must stay unmasked. Throws InputError when d_k == 0.
AttentionResult attention(const Mat& q, const Mat& k, const Mat& v,
                          std::span<const bool> key_masked = {});

// ReLU(x W1 + b1) W2 + b2, row by row.
Mat ffn(const Mat& x, const Mat& w1, const RowVec& b1, const Mat& w2, const RowVec& b2);

struct LayerNormCache {
  Mat xhat;
  Vec inv_std;
};

struct EncoderLayerCache {
  Mat x;      // layer input
  Mat a_in;   // attention input (x or LN1(x))
  Mat q, k, v;
  std::vector<Mat> heads;  // attention weights per head
  Mat o;                   // concatenated head outputs
  Mat drop1;               // dropout scale on attention output, empty if off
  LayerNormCache ln1;
  Mat u;      // after the attention sublayer
  Mat f_in;   // FFN input (u or LN2(u))
  Mat h_pre;  // f_in W1 + b1
  Mat h;      // ReLU(h_pre)
  Mat drop2;
  LayerNormCache ln2;
};

struct EncoderCache {
  std::vector<TokenId> ids;           // non-PAD tokens (plus position 0)
  std::vector<std::size_t> positions;  // their indices in the input
  std::vector<EncoderLayerCache> layers;
};

// Encodes a (possibly PAD-padded) sequence and returns the position-0 hidden
// state. PAD positions are masked as attention keys, so padding never changes
// the result. Dropout only applies when
// `training` is set and cfg.dropout > 0, and then needs `rng`.
Vec encoder_forward(std::span<const TokenId> ids, const EncoderParams& p, const EncoderConfig& cfg,
                    bool training = false, Rng* rng = nullptr, EncoderCache* cache = nullptr);

// Accumulates parameter gradients for d(loss)/d(output) into `grads`.
void encoder_backward(const Vec& d_out, const EncoderCache& cache, const EncoderParams& p,
                      const EncoderConfig& cfg, EncoderParams& grads);

// Throws InputError when the sequence exceeds cfg.max_len.
Vec encode_verse(const TokenSequence& t, const EncoderParams& p, const EncoderConfig& cfg);

}  // namespace beyt
