#include "beyt/encoder.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "beyt/error.hpp"

namespace beyt {

using nlohmann::json;

namespace {

constexpr double kLayerNormEps = 1e-5;

const char* to_string(PositionalEncoding p) {
  switch (p) {
    case PositionalEncoding::learned: return "learned";
    case PositionalEncoding::none: return "none";
    case PositionalEncoding::sinusoidal: break;
  }
  return "sinusoidal";
}

PositionalEncoding parse_positional(const std::string& s) {
  if (s == "sinusoidal") return PositionalEncoding::sinusoidal;
  if (s == "learned") return PositionalEncoding::learned;
  if (s == "none") return PositionalEncoding::none;
  throw InputError("unknown positional encoding '" + s + "'");
}

Mat normal_init(Rng& rng, std::size_t rows, std::size_t cols) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(rows));
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = sd * rng.normal();
  return m;
}

Mat uniform_init(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

Mat layer_norm(const Mat& x, const RowVec& gain, const RowVec& bias, LayerNormCache* cache) {
  const auto d = static_cast<double>(x.cols());
  Mat xhat(x.rows(), x.cols());
  Vec inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / d;
    const RowVec centered = x.row(r).array() - mean;
    const double var = centered.squaredNorm() / d;
    inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = centered * inv_std[r];
  }
  Mat y = (xhat.array().rowwise() * gain.array()).rowwise() + bias.array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Mat layer_norm_backward(const Mat& dy, const LayerNormCache& c, const RowVec& gain,
                        RowVec& d_gain, RowVec& d_bias) {
  d_gain += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  d_bias += dy.colwise().sum();
  const auto d = static_cast<double>(dy.cols());
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const RowVec dxhat = dy.row(r).array() * gain.array();
    const double mean_dxhat = dxhat.sum() / d;
    const double mean_dxhat_xhat = dxhat.dot(c.xhat.row(r)) / d;
    dx.row(r) = c.inv_std[r] *
                (dxhat.array() - mean_dxhat - c.xhat.row(r).array() * mean_dxhat_xhat).matrix();
  }
  return dx;
}

Mat add_bias(Mat m, const RowVec& b) {
  m.rowwise() += b;
  return m;
}

Mat dropout_mask(Rng* rng, Eigen::Index rows, Eigen::Index cols, double p) {
  if (!rng) throw InputError("dropout in training mode requires an rng");
  Mat m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng->bernoulli(p) ? 0.0 : keep;
  return m;
}

}  // namespace

void EncoderConfig::validate() const {
  if (vocab_size == 0) throw InputError("encoder: vocab_size must be > 0");
  if (d_model == 0 || n_heads == 0) throw InputError("encoder: d_model and n_heads must be > 0");
  if (d_model % n_heads != 0) throw InputError("encoder: d_model must be divisible by n_heads");
  if (max_len == 0) throw InputError("encoder: max_len must be >= 1");
  if (d_ff == 0 && n_layers > 0) throw InputError("encoder: d_ff must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("encoder: dropout must be in [0, 1)");
}

void to_json(json& j, const EncoderConfig& c) {
  j = json{{"vocab_size", c.vocab_size}, {"d_model", c.d_model},
           {"n_heads", c.n_heads},       {"n_layers", c.n_layers},
           {"d_ff", c.d_ff},             {"max_len", c.max_len},
           {"dropout", c.dropout},       {"positional", to_string(c.positional)},
           {"norm", c.norm == NormPlacement::pre ? "pre" : "post"},
           {"seed", c.seed}};
}

void from_json(const json& j, EncoderConfig& c) {
  EncoderConfig d;
  c.vocab_size = j.value("vocab_size", d.vocab_size);
  c.d_model = j.value("d_model", d.d_model);
  c.n_heads = j.value("n_heads", d.n_heads);
  c.n_layers = j.value("n_layers", d.n_layers);
  c.d_ff = j.value("d_ff", d.d_ff);
  c.max_len = j.value("max_len", d.max_len);
  c.dropout = j.value("dropout", d.dropout);
  c.positional = parse_positional(j.value("positional", std::string("sinusoidal")));
  const auto norm = j.value("norm", std::string("post"));
  if (norm != "post" && norm != "pre") throw InputError("unknown norm placement '" + norm + "'");
  c.norm = norm == "pre" ? NormPlacement::pre : NormPlacement::post;
  c.seed = j.value("seed", d.seed);
}

EncoderParams init_encoder(const EncoderConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t d = cfg.d_model, ff = cfg.d_ff;
  EncoderParams p;
  p.token_embedding = uniform_init(rng, cfg.vocab_size, d, 0.05);
  if (cfg.positional == PositionalEncoding::learned)
    p.positional = uniform_init(rng, cfg.max_len, d, 0.05);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    EncoderLayerParams L;
    L.wq = normal_init(rng, d, d);
    L.wk = normal_init(rng, d, d);
    L.wv = normal_init(rng, d, d);
    L.wo = normal_init(rng, d, d);
    L.bq = L.bk = L.bv = L.bo = RowVec::Zero(d);
    L.ln1_gain = L.ln2_gain = RowVec::Ones(d);
    L.ln1_bias = L.ln2_bias = RowVec::Zero(d);
    L.w1 = normal_init(rng, d, ff);
    L.b1 = RowVec::Zero(ff);
    L.w2 = normal_init(rng, ff, d);
    L.b2 = RowVec::Zero(d);
    p.layers.push_back(std::move(L));
  }
  return p;
}

EncoderParams zeros_like(const EncoderParams& p) {
  EncoderParams z = p;
  visit_tensors([](const std::string&, bool, auto& t) { t.setZero(); }, z);
  return z;
}

Mat sinusoidal_table(std::size_t max_len, std::size_t d_model) {
  Mat t(max_len, d_model);
  for (std::size_t pos = 0; pos < max_len; ++pos)
    for (std::size_t i = 0; i < d_model; ++i) {
      const double rate =
          std::pow(10000.0, static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model));
      const double angle = static_cast<double>(pos) / rate;
      t(pos, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  return t;
}

AttentionResult attention(const Mat& q, const Mat& k, const Mat& v,
                          std::span<const bool> key_masked) {
  if (q.cols() == 0) throw InputError("attention: d_k must be > 0");
  if (q.cols() != k.cols() || k.rows() != v.rows())
    throw InputError("attention: inconsistent Q/K/V shapes");
  if (!key_masked.empty() && key_masked.size() != static_cast<std::size_t>(k.rows()))
    throw InputError("attention: mask length must equal the number of keys");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Mat w = (q * k.transpose()) * scale;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (!key_masked.empty() && key_masked[static_cast<std::size_t>(j)])
        w(i, j) = -std::numeric_limits<double>::infinity();
      else
        mx = std::max(mx, w(i, j));
    }
    if (!std::isfinite(mx)) throw InputError("attention: every key is masked");
    double sum = 0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      w(i, j) = std::exp(w(i, j) - mx);
      sum += w(i, j);
    }
    w.row(i) /= sum;
  }
  return {w * v, std::move(w)};
}

Mat ffn(const Mat& x, const Mat& w1, const RowVec& b1, const Mat& w2, const RowVec& b2) {
  if (x.cols() != w1.rows() || w1.cols() != w2.rows() || b1.size() != w1.cols() ||
      b2.size() != w2.cols())
    throw InputError("ffn: inconsistent shapes");
  const Mat hidden = add_bias(x * w1, b1).cwiseMax(0.0);
  return add_bias(hidden * w2, b2);
}

Vec encoder_forward(std::span<const TokenId> ids, const EncoderParams& p, const EncoderConfig& cfg,
                    bool training, Rng* rng, EncoderCache* cache) {
  if (ids.empty()) throw InputError("encoder: empty sequence");
  if (ids.size() > cfg.max_len)
    throw InputError("encoder: sequence length " + std::to_string(ids.size()) +
                     " exceeds max_len " + std::to_string(cfg.max_len));
  const auto d = static_cast<Eigen::Index>(cfg.d_model);
  const auto dk = static_cast<Eigen::Index>(cfg.d_head());
  const bool drop = training && cfg.dropout > 0.0;

  // PAD keys are masked, so PAD rows never reach position 0. Dropping them
  // up front keeps the output bit-identical however much padding there is.
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const TokenId id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size)
      throw InputError("encoder: token id out of range");
    if (i == 0 || id != kPad) positions.push_back(i);
  }
  const auto L = static_cast<Eigen::Index>(positions.size());
  auto mask_bytes = std::make_unique<bool[]>(positions.size());
  Mat x(L, d);
  const Mat table = cfg.positional == PositionalEncoding::sinusoidal
                        ? sinusoidal_table(positions.back() + 1, cfg.d_model)
                        : Mat();
  for (Eigen::Index i = 0; i < L; ++i) {
    const std::size_t pos = positions[static_cast<std::size_t>(i)];
    mask_bytes[static_cast<std::size_t>(i)] = ids[pos] == kPad;
    x.row(i) = p.token_embedding.row(ids[pos]);
    if (cfg.positional == PositionalEncoding::learned)
      x.row(i) += p.positional.row(static_cast<Eigen::Index>(pos));
    else if (cfg.positional == PositionalEncoding::sinusoidal)
      x.row(i) += table.row(static_cast<Eigen::Index>(pos));
  }
  const std::span<const bool> key_mask(mask_bytes.get(), positions.size());

  if (cache) {
    cache->ids.clear();
    for (auto pos : positions) cache->ids.push_back(ids[pos]);
    cache->positions = positions;
    cache->layers.clear();
    cache->layers.resize(p.layers.size());
  }

  EncoderLayerCache scratch;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& W = p.layers[l];
    auto& c = cache ? cache->layers[l] : scratch;
    c.x = x;
    c.a_in = cfg.norm == NormPlacement::pre ? layer_norm(x, W.ln1_gain, W.ln1_bias, &c.ln1) : x;
    c.q = add_bias(c.a_in * W.wq, W.bq);
    c.k = add_bias(c.a_in * W.wk, W.bk);
    c.v = add_bias(c.a_in * W.wv, W.bv);
    c.o.resize(L, d);
    c.heads.clear();
    for (Eigen::Index h = 0; h < static_cast<Eigen::Index>(cfg.n_heads); ++h) {
      auto r = attention(c.q.middleCols(h * dk, dk), c.k.middleCols(h * dk, dk),
                         c.v.middleCols(h * dk, dk), key_mask);
      c.o.middleCols(h * dk, dk) = r.output;
      c.heads.push_back(std::move(r.weights));
    }
    Mat z = add_bias(c.o * W.wo, W.bo);
    if (drop) {
      c.drop1 = dropout_mask(rng, L, d, cfg.dropout);
      z.array() *= c.drop1.array();
    } else {
      c.drop1.resize(0, 0);
    }
    if (cfg.norm == NormPlacement::post) {
      c.u = layer_norm(x + z, W.ln1_gain, W.ln1_bias, &c.ln1);
      c.f_in = c.u;
    } else {
      c.u = x + z;
      c.f_in = layer_norm(c.u, W.ln2_gain, W.ln2_bias, &c.ln2);
    }
    c.h_pre = add_bias(c.f_in * W.w1, W.b1);
    c.h = c.h_pre.cwiseMax(0.0);
    Mat f = add_bias(c.h * W.w2, W.b2);
    if (drop) {
      c.drop2 = dropout_mask(rng, L, d, cfg.dropout);
      f.array() *= c.drop2.array();
    } else {
      c.drop2.resize(0, 0);
    }
    x = cfg.norm == NormPlacement::post ? layer_norm(c.u + f, W.ln2_gain, W.ln2_bias, &c.ln2)
                                        : Mat(c.u + f);
  }
  return x.row(0).transpose();
}

void encoder_backward(const Vec& d_out, const EncoderCache& cache, const EncoderParams& p,
                      const EncoderConfig& cfg, EncoderParams& g) {
  const auto L = static_cast<Eigen::Index>(cache.ids.size());
  const auto d = static_cast<Eigen::Index>(cfg.d_model);
  const auto dk = static_cast<Eigen::Index>(cfg.d_head());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Mat dx = Mat::Zero(L, d);
  dx.row(0) = d_out.transpose();

  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& W = p.layers[li];
    auto& G = g.layers[li];
    const auto& c = cache.layers[li];
    const bool post = cfg.norm == NormPlacement::post;

    // FFN sublayer.
    Mat d_r2 = post ? layer_norm_backward(dx, c.ln2, W.ln2_gain, G.ln2_gain, G.ln2_bias) : dx;
    Mat du = d_r2;
    Mat df = d_r2;
    if (c.drop2.size()) df.array() *= c.drop2.array();
    G.w2 += c.h.transpose() * df;
    G.b2 += df.colwise().sum();
    Mat dh = (df * W.w2.transpose()).array() * (c.h_pre.array() > 0.0).cast<double>();
    G.w1 += c.f_in.transpose() * dh;
    G.b1 += dh.colwise().sum();
    Mat d_fin = dh * W.w1.transpose();
    if (post)
      du += d_fin;
    else
      du += layer_norm_backward(d_fin, c.ln2, W.ln2_gain, G.ln2_gain, G.ln2_bias);

    // Attention sublayer.
    Mat d_r1 = post ? layer_norm_backward(du, c.ln1, W.ln1_gain, G.ln1_gain, G.ln1_bias) : du;
    dx = d_r1;
    Mat dz = d_r1;
    if (c.drop1.size()) dz.array() *= c.drop1.array();
    G.wo += c.o.transpose() * dz;
    G.bo += dz.colwise().sum();
    const Mat d_o = dz * W.wo.transpose();

    Mat dq(L, d), dkm(L, d), dv(L, d);
    for (Eigen::Index h = 0; h < static_cast<Eigen::Index>(cfg.n_heads); ++h) {
      const Mat& a = c.heads[static_cast<std::size_t>(h)];
      const auto doh = d_o.middleCols(h * dk, dk);
      dv.middleCols(h * dk, dk) = a.transpose() * doh;
      const Mat da = doh * c.v.middleCols(h * dk, dk).transpose();
      const Vec row_dot = (da.array() * a.array()).rowwise().sum();
      const Mat ds = (a.array() * (da.array().colwise() - row_dot.array())).matrix() * scale;
      dq.middleCols(h * dk, dk) = ds * c.k.middleCols(h * dk, dk);
      dkm.middleCols(h * dk, dk) = ds.transpose() * c.q.middleCols(h * dk, dk);
    }
    G.wq += c.a_in.transpose() * dq;
    G.bq += dq.colwise().sum();
    G.wk += c.a_in.transpose() * dkm;
    G.bk += dkm.colwise().sum();
    G.wv += c.a_in.transpose() * dv;
    G.bv += dv.colwise().sum();
    Mat d_ain = dq * W.wq.transpose() + dkm * W.wk.transpose() + dv * W.wv.transpose();
    if (post)
      dx += d_ain;
    else
      dx += layer_norm_backward(d_ain, c.ln1, W.ln1_gain, G.ln1_gain, G.ln1_bias);
  }

  for (Eigen::Index i = 0; i < L; ++i) {
    g.token_embedding.row(cache.ids[static_cast<std::size_t>(i)]) += dx.row(i);
    if (cfg.positional == PositionalEncoding::learned)
      g.positional.row(static_cast<Eigen::Index>(cache.positions[static_cast<std::size_t>(i)])) +=
          dx.row(i);
  }
}

Vec encode_verse(const TokenSequence& t, const EncoderParams& p, const EncoderConfig& cfg) {
  return encoder_forward(t.ids, p, cfg);
}

}  // namespace beyt
