#include "beyt/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "beyt/error.hpp"

namespace beyt {

using nlohmann::json;

Vec FusedInput::concat(const FusionConfig& fusion) const {
  Eigen::Index n = 0;
  const std::pair<bool, const Vec*> blocks[] = {{fusion.text, &text},
                                                {fusion.semantic, &semantic},
                                                {fusion.stylometric, &stylometric},
                                                {fusion.form, &form},
                                                {fusion.meter, &meter}};
  for (const auto& [on, v] : blocks)
    if (on) n += v->size();
  Vec out(n);
  Eigen::Index at = 0;
  for (const auto& [on, v] : blocks)
    if (on) {
      out.segment(at, v->size()) = *v;
      at += v->size();
    }
  return out;
}

HeadParams init_head(std::size_t d_concat, std::size_t classes, const HeadConfig& cfg) {
  if (d_concat == 0 || classes == 0 || cfg.hidden == 0)
    throw InputError("head: dimensions must be > 0");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
    throw InputError("head: dropout must be in [0, 1)");
  Rng rng(cfg.seed);
  auto normal = [&](std::size_t rows, std::size_t cols) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(cols));
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = sd * rng.normal();
    return m;
  };
  HeadParams p;
  p.w1 = normal(cfg.hidden, d_concat);
  p.b1 = Vec::Zero(static_cast<Eigen::Index>(cfg.hidden));
  p.w2 = normal(classes, cfg.hidden);
  p.b2 = Vec::Zero(static_cast<Eigen::Index>(classes));
  return p;
}

Vec softmax(const Vec& logits) {
  Vec e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Vec forward(const Vec& h, const HeadParams& p, double dropout, bool training, Rng* rng,
            HeadCache* cache) {
  if (h.size() != p.w1.cols() || p.b1.size() != p.w1.rows() || p.w2.cols() != p.w1.rows() ||
      p.b2.size() != p.w2.rows())
    throw InputError("head: dimension mismatch (input " + std::to_string(h.size()) +
                     ", expected " + std::to_string(p.w1.cols()) + ")");
  Vec pre = p.w1 * h + p.b1;
  Vec act = pre.cwiseMax(0.0);
  Vec drop;
  if (training && dropout > 0.0) {
    if (!rng) throw InputError("head: dropout in training mode requires an rng");
    drop.resize(act.size());
    const double keep = 1.0 / (1.0 - dropout);
    for (Eigen::Index i = 0; i < drop.size(); ++i) drop[i] = rng->bernoulli(dropout) ? 0.0 : keep;
    act.array() *= drop.array();
  }
  Vec probs = softmax(p.w2 * act + p.b2);
  if (cache) {
    cache->input = h;
    cache->pre = std::move(pre);
    cache->dropped = std::move(act);
    cache->drop = std::move(drop);
    cache->probs = probs;
  }
  return probs;
}

Vec forward(const FusedInput& f, const FusionConfig& fusion, const HeadParams& p, double dropout,
            bool training, Rng* rng) {
  return forward(f.concat(fusion), p, dropout, training, rng);
}

Vec head_backward(const Vec& d_logits, const HeadCache& c, const HeadParams& p, HeadParams& g) {
  g.w2.noalias() += d_logits * c.dropped.transpose();
  g.b2 += d_logits;
  Vec d_act = p.w2.transpose() * d_logits;
  if (c.drop.size()) d_act.array() *= c.drop.array();
  const Vec d_pre = d_act.array() * (c.pre.array() > 0.0).cast<double>();
  g.w1.noalias() += d_pre * c.input.transpose();
  g.b1 += d_pre;
  return p.w1.transpose() * d_pre;
}

LossValue weighted_cross_entropy(const Vec& probs, std::size_t label, const Vec& weights) {
  if (label >= static_cast<std::size_t>(probs.size()) || probs.size() != weights.size())
    throw InputError("cross-entropy: label or weight vector out of range");
  const auto y = static_cast<Eigen::Index>(label);
  LossValue out;
  double py = probs[y];
  if (py < kProbabilityFloor) {
    py = kProbabilityFloor;
    out.clamped = true;
  }
  out.loss = -weights[y] * std::log(py);
  return out;
}

Vec class_weights(std::span<const std::size_t> labels, std::size_t classes, ClassWeighting mode) {
  if (classes == 0) throw InputError("class weights: no classes");
  std::vector<double> counts(classes, 0.0);
  for (auto y : labels) {
    if (y >= classes) throw InputError("class weights: label out of range");
    counts[y] += 1.0;
  }
  Vec w = Vec::Ones(static_cast<Eigen::Index>(classes));
  for (std::size_t i = 0; i < classes; ++i)
    if (counts[i] == 0)
      throw InputError("class weights: class " + std::to_string(i) + " has no training examples");
  if (mode == ClassWeighting::none) return w;
  const double total = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < classes; ++i)
    w[static_cast<Eigen::Index>(i)] = total / (static_cast<double>(classes) * counts[i]);
  return w;
}

std::size_t ModelConfig::concat_dims() const {
  std::size_t n = 0;
  if (fusion.text) n += encoder.d_model;
  if (fusion.semantic) n += semantic_dims;
  if (fusion.stylometric) n += stylometric_dims;
  if (fusion.form) n += form_dims;
  if (fusion.meter) n += meter_dims;
  return n;
}

ModelParams init_model(const ModelConfig& cfg) {
  // Checkpoints store float32, so start from representable values.
  ModelParams p{init_encoder(cfg.encoder), init_head(cfg.concat_dims(), cfg.classes, cfg.head)};
  round_to_float32(p);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  visit_model_tensors([](const std::string&, bool, auto& t) { t.setZero(); }, z);
  return z;
}

void round_to_float32(ModelParams& p) {
  visit_model_tensors([](const std::string&, bool, auto& t) { beyt::round_to_float32(t); }, p);
}

std::vector<std::vector<TokenId>> pad_batch(std::span<const VerseExample* const> batch) {
  std::size_t longest = 0;
  for (const auto* ex : batch) longest = std::max(longest, ex->tokens.length());
  std::vector<std::vector<TokenId>> out;
  out.reserve(batch.size());
  for (const auto* ex : batch) {
    auto ids = ex->tokens.ids;
    ids.resize(longest, kPad);
    out.push_back(std::move(ids));
  }
  return out;
}

namespace {

FusedInput fuse(const Vec& text, const VerseExample& ex) {
  return {text, ex.semantic, ex.stylometric, ex.form, ex.meter};
}

}  // namespace

Vec predict_probs(std::span<const TokenId> ids, const VerseExample& ex, const ModelParams& p,
                  const ModelConfig& cfg) {
  Vec text = cfg.fusion.text ? encoder_forward(ids, p.encoder, cfg.encoder) : Vec();
  return forward(fuse(text, ex).concat(cfg.fusion), p.head);
}

Vec predict_probs(const VerseExample& ex, const ModelParams& p, const ModelConfig& cfg) {
  return predict_probs(ex.tokens.ids, ex, p, cfg);
}

void TrainConfig::validate() const {
  if (!(lr >= 0)) throw InputError("train: lr must be >= 0");
  if (!(weight_decay >= 0)) throw InputError("train: weight_decay must be >= 0");
  if (batch_size == 0) throw InputError("train: batch_size must be >= 1");
  if (max_epochs == 0) throw InputError("train: max_epochs must be >= 1");
  if (!(warmup_fraction > 0 && warmup_fraction < 1))
    throw InputError("train: warmup_fraction must be in (0, 1)");
  if (!(clip_norm > 0)) throw InputError("train: clip_norm must be > 0");
  if (patience == 0) throw InputError("train: patience must be >= 1");
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr", c.lr},
           {"weight_decay", c.weight_decay},
           {"batch_size", c.batch_size},
           {"max_epochs", c.max_epochs},
           {"warmup_fraction", c.warmup_fraction},
           {"schedule", "cosine"},
           {"clip_norm", c.clip_norm},
           {"patience", c.patience},
           {"seed", c.seed},
           {"class_weighting",
            c.class_weighting == ClassWeighting::none ? "none" : "inverse_frequency"},
           {"decay", c.decay == DecayMode::coupled ? "coupled" : "decoupled"},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"adam_eps", c.adam_eps}};
}

void from_json(const json& j, TrainConfig& c) {
  TrainConfig d;
  c.lr = j.value("lr", d.lr);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.warmup_fraction = j.value("warmup_fraction", d.warmup_fraction);
  c.clip_norm = j.value("clip_norm", d.clip_norm);
  c.patience = j.value("patience", d.patience);
  c.seed = j.value("seed", d.seed);
  const auto cw = j.value("class_weighting", std::string("inverse_frequency"));
  if (cw != "none" && cw != "inverse_frequency")
    throw InputError("unknown class_weighting '" + cw + "'");
  c.class_weighting = cw == "none" ? ClassWeighting::none : ClassWeighting::inverse_frequency;
  const auto decay = j.value("decay", std::string("decoupled"));
  if (decay != "coupled" && decay != "decoupled") throw InputError("unknown decay '" + decay + "'");
  c.decay = decay == "coupled" ? DecayMode::coupled : DecayMode::decoupled;
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
  c.adam_eps = j.value("adam_eps", d.adam_eps);
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"encoder", c.encoder},
           {"head", {{"hidden", c.head.hidden}, {"dropout", c.head.dropout}, {"seed", c.head.seed}}},
           {"fusion",
            {{"text", c.fusion.text},
             {"semantic", c.fusion.semantic},
             {"stylometric", c.fusion.stylometric},
             {"form", c.fusion.form},
             {"meter", c.fusion.meter}}},
           {"semantic_dims", c.semantic_dims},
           {"stylometric_dims", c.stylometric_dims},
           {"form_dims", c.form_dims},
           {"meter_dims", c.meter_dims},
           {"classes", c.classes}};
}

void from_json(const json& j, ModelConfig& c) {
  ModelConfig d;
  c.encoder = j.value("encoder", json::object()).get<EncoderConfig>();
  const auto h = j.value("head", json::object());
  c.head.hidden = h.value("hidden", d.head.hidden);
  c.head.dropout = h.value("dropout", d.head.dropout);
  c.head.seed = h.value("seed", d.head.seed);
  const auto f = j.value("fusion", json::object());
  c.fusion.text = f.value("text", true);
  c.fusion.semantic = f.value("semantic", true);
  c.fusion.stylometric = f.value("stylometric", true);
  c.fusion.form = f.value("form", true);
  c.fusion.meter = f.value("meter", true);
  c.semantic_dims = j.value("semantic_dims", d.semantic_dims);
  c.stylometric_dims = j.value("stylometric_dims", d.stylometric_dims);
  c.form_dims = j.value("form_dims", d.form_dims);
  c.meter_dims = j.value("meter_dims", d.meter_dims);
  c.classes = j.value("classes", d.classes);
}

double l2_penalty(const ModelParams& p) {
  double s = 0;
  visit_model_tensors(
      [&](const std::string&, bool decays, const auto& t) {
        if (decays) s += t.squaredNorm();
      },
      p);
  return s;
}

double total_loss(std::span<const VerseExample> batch, const ModelParams& p,
                  const ModelConfig& cfg, const Vec& weights, double weight_decay) {
  if (batch.empty()) throw InputError("total_loss: empty batch");
  double ce = 0;
  for (const auto& ex : batch)
    ce += weighted_cross_entropy(predict_probs(ex, p, cfg), ex.label, weights).loss;
  return ce / static_cast<double>(batch.size()) + weight_decay * l2_penalty(p);
}

BatchLoss loss_and_gradient(std::span<const VerseExample* const> batch, const ModelParams& p,
                            const ModelConfig& cfg, const Vec& weights, double l2, bool training,
                            Rng* rng, ModelParams& grads) {
  if (batch.empty()) throw InputError("loss_and_gradient: empty batch");
  const auto padded = pad_batch(batch);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const auto d_model = static_cast<Eigen::Index>(cfg.encoder.d_model);
  BatchLoss out;
  EncoderCache ec;
  HeadCache hc;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = *batch[i];
    Vec text;
    if (cfg.fusion.text) text = encoder_forward(padded[i], p.encoder, cfg.encoder, training, rng, &ec);
    const Vec probs = forward(fuse(text, ex).concat(cfg.fusion), p.head, cfg.head.dropout,
                              training, rng, &hc);
    const auto lv = weighted_cross_entropy(probs, ex.label, weights);
    out.loss += lv.loss * inv_n;
    out.clamped += lv.clamped;

    const auto y = static_cast<Eigen::Index>(ex.label);
    Vec d_logits = probs;
    d_logits[y] -= 1.0;
    d_logits *= weights[y] * inv_n;
    const Vec d_concat = head_backward(d_logits, hc, p.head, grads.head);
    if (cfg.fusion.text) encoder_backward(d_concat.head(d_model), ec, p.encoder, cfg.encoder, grads.encoder);
  }
  if (l2 > 0) {
    out.loss += l2 * l2_penalty(p);
    visit_model_tensors(
        [&](const std::string&, bool decays, const auto& w, auto& g) {
          if (decays) g += 2.0 * l2 * w;
        },
        p, grads);
  }
  return out;
}

double learning_rate(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  const auto warmup = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cfg.warmup_fraction * static_cast<double>(total_steps))));
  if (step <= warmup) return cfg.lr * static_cast<double>(step) / static_cast<double>(warmup);
  const double progress = static_cast<double>(step - warmup) /
                          static_cast<double>(std::max<std::size_t>(1, total_steps - warmup));
  return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(1.0, progress)));
}

double global_norm(const ModelParams& grads) {
  double s = 0;
  visit_model_tensors([&](const std::string&, bool, const auto& t) { s += t.squaredNorm(); }, grads);
  return std::sqrt(s);
}

AdamW::AdamW(const ModelParams& like, const TrainConfig& cfg)
    : cfg_(cfg), m_(zeros_like(like)), v_(zeros_like(like)) {}

void AdamW::step(ModelParams& params, const ModelParams& grads, double lr) {
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const bool decoupled = cfg_.decay == DecayMode::decoupled;
  const double decay = lr * cfg_.weight_decay;
  visit_model_tensors(
      [&](const std::string&, bool decays, auto& p, const auto& g, auto& m, auto& v) {
        if (p.size() == 0) return;
        m = b1 * m + (1.0 - b1) * g;
        v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
        if (decoupled && decays) p *= 1.0 - decay;
        p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.adam_eps);
      },
      params, grads, m_, v_);
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw InputError("early stopping: patience must be >= 1");
}

bool EarlyStopping::update(double metric) {
  ++epoch_;
  if (!has_best_ || metric > best_) {
    has_best_ = true;
    best_ = metric;
    best_epoch_ = epoch_;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

namespace {

std::size_t argmax(const Vec& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<std::size_t>(best);
}

}  // namespace

double verse_accuracy(std::span<const VerseExample> data, const ModelParams& p,
                      const ModelConfig& cfg) {
  if (data.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& ex : data) hit += argmax(predict_probs(ex, p, cfg)) == ex.label;
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,train_loss,valid_accuracy,lr\n";
  for (const auto& e : log)
    os << e.epoch << ',' << e.train_loss << ',' << e.valid_accuracy << ',' << e.lr << '\n';
  return os.str();
}

TrainResult fit(std::span<const VerseExample> train, std::span<const VerseExample> valid,
                const ModelConfig& model_cfg, const TrainConfig& cfg) {
  return fit(train, valid, model_cfg, cfg, init_model(model_cfg));
}

TrainResult fit(std::span<const VerseExample> train, std::span<const VerseExample> valid,
                const ModelConfig& model_cfg, const TrainConfig& cfg, ModelParams params) {
  cfg.validate();
  if (train.empty()) throw InputError("fit: empty training set");
  if (valid.empty()) throw InputError("fit: empty validation set");

  std::vector<std::size_t> labels;
  labels.reserve(train.size());
  for (const auto& ex : train) labels.push_back(ex.label);
  TrainResult result;
  result.class_weights = class_weights(labels, model_cfg.classes, cfg.class_weighting);

  const double l2 = cfg.decay == DecayMode::coupled ? cfg.weight_decay : 0.0;
  const std::size_t steps_per_epoch = (train.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = steps_per_epoch * cfg.max_epochs;

  AdamW opt(params, cfg);
  Rng rng(cfg.seed);
  EarlyStopping stopper(cfg.patience);
  ModelParams grads = zeros_like(params);
  ModelParams best = params;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const VerseExample*> batch;
  double lr = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      batch.clear();
      const std::size_t end = std::min(train.size(), (b + 1) * cfg.batch_size);
      for (std::size_t i = b * cfg.batch_size; i < end; ++i) batch.push_back(&train[order[i]]);

      visit_model_tensors([](const std::string&, bool, auto& g) { g.setZero(); }, grads);
      const auto bl = loss_and_gradient(batch, params, model_cfg, result.class_weights, l2,
                                        /*training=*/true, &rng, grads);
      lr = learning_rate(opt.steps() + 1, total_steps, cfg);
      if (!std::isfinite(bl.loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << b << " (lr " << lr
            << ")";
        throw NumericalError(msg.str());
      }
      epoch_loss += bl.loss * static_cast<double>(batch.size());
      const double norm = global_norm(grads);
      if (norm > cfg.clip_norm) {
        const double s = cfg.clip_norm / norm;
        visit_model_tensors([&](const std::string&, bool, auto& g) { g *= s; }, grads);
      }
      opt.step(params, grads, lr);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_loss / static_cast<double>(train.size());
    entry.valid_accuracy = verse_accuracy(valid, params, model_cfg);
    entry.lr = lr;
    result.log.push_back(entry);
    if (stopper.update(entry.valid_accuracy)) best = params;
    if (stopper.should_stop()) {
      result.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }

  round_to_float32(best);
  result.params = std::move(best);
  result.best_epoch = stopper.best_epoch();
  result.best_valid_accuracy = stopper.best();
  return result;
}

}  // namespace beyt
