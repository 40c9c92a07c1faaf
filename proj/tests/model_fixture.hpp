#pragma once

#include <random>
#include <vector>

#include "beyt/model.hpp"

namespace beyt::test {

inline ModelConfig tiny_model(std::size_t classes = 3, std::size_t d_model = 8) {
  ModelConfig cfg;
  cfg.encoder.vocab_size = 12;
  cfg.encoder.d_model = d_model;
  cfg.encoder.n_heads = 2;
  cfg.encoder.n_layers = 1;
  cfg.encoder.d_ff = 12;
  cfg.encoder.max_len = 16;
  cfg.head.hidden = 10;
  cfg.head.dropout = 0.0;
  cfg.semantic_dims = 4;
  cfg.form_dims = 3;
  cfg.classes = classes;
  return cfg;
}

// Random examples whose label is visible in both tokens and meter.
inline std::vector<VerseExample> tiny_examples(const ModelConfig& cfg, std::size_t n,
                                               std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<VerseExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    VerseExample ex;
    ex.label = i % cfg.classes;
    ex.tokens.ids = {kCls};
    const std::size_t len = 1 + gen() % 4;
    for (std::size_t t = 0; t < len; ++t)
      ex.tokens.ids.push_back(static_cast<TokenId>(3 + (gen() % 3) * cfg.classes + ex.label) %
                              static_cast<TokenId>(cfg.encoder.vocab_size));
    ex.semantic = Vec::NullaryExpr(static_cast<Eigen::Index>(cfg.semantic_dims), [&] { return nd(gen); });
    ex.stylometric =
        Vec::NullaryExpr(static_cast<Eigen::Index>(cfg.stylometric_dims), [&] { return nd(gen); });
    ex.form = Vec::Zero(static_cast<Eigen::Index>(cfg.form_dims));
    ex.form[static_cast<Eigen::Index>(gen() % cfg.form_dims)] = 1;
    ex.meter = Vec::Zero(static_cast<Eigen::Index>(cfg.meter_dims));
    ex.meter[static_cast<Eigen::Index>(ex.label)] = 1;
    ex.poem_id = "p" + std::to_string(i);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace beyt::test
