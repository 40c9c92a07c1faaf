#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beyt/encoder.hpp"
#include "beyt/features.hpp"
#include "beyt/normalize.hpp"
#include "beyt/rng.hpp"
#include "beyt/tensor.hpp"

namespace beyt {

// Which blocks enter the concatenation. Disabled blocks are dropped, so the
// head input shrinks accordingly.
struct FusionConfig {
  bool text = true;
  bool semantic = true;
  bool stylometric = true;
  bool form = true;
  bool meter = true;

  bool operator==(const FusionConfig&) const = default;
};

// Concatenation order is fixed: text | semantic | stylometric | form | meter.
struct FusedInput {
  Vec text;
  Vec semantic;
  Vec stylometric;
  Vec form;
  Vec meter;

  Vec concat(const FusionConfig& fusion = {}) const;
};

struct HeadConfig {
  std::size_t hidden = 512;
  double dropout = 0.3;
  std::uint64_t seed = 11;

  bool operator==(const HeadConfig&) const = default;
};

struct HeadParams {
  Mat w1;  // hidden x d_concat
  Vec b1;
  Mat w2;  // classes x hidden
  Vec b2;
};

template <class F, class First, class... Rest>
void visit_head_tensors(F&& f, First& first, Rest&... rest) {
  f(std::string("head.w1"), true, first.w1, rest.w1...);
  f(std::string("head.b1"), false, first.b1, rest.b1...);
  f(std::string("head.w2"), true, first.w2, rest.w2...);
  f(std::string("head.b2"), false, first.b2, rest.b2...);
}

HeadParams init_head(std::size_t d_concat, std::size_t classes, const HeadConfig& cfg);

struct HeadCache {
  Vec input;
  Vec pre;      // W1 h + b1
  Vec dropped;  // Dropout(ReLU(pre))
  Vec drop;     // dropout scale, empty when inactive
  Vec probs;
};

Vec softmax(const Vec& logits);

// softmax(W2 Dropout(ReLU(W1 h + b1)) + b2). Dropout only when training.
Vec forward(const Vec& h_concat, const HeadParams& p, double dropout = 0.0, bool training = false,
            Rng* rng = nullptr, HeadCache* cache = nullptr);
Vec forward(const FusedInput& f, const FusionConfig& fusion, const HeadParams& p,
            double dropout = 0.0, bool training = false, Rng* rng = nullptr);

// Accumulates head gradients for d(loss)/d(logits); returns d(loss)/d(h_concat).
Vec head_backward(const Vec& d_logits, const HeadCache& cache, const HeadParams& p,
                  HeadParams& grads);

inline constexpr double kProbabilityFloor = 1e-12;

struct LossValue {
  double loss = 0;
  bool clamped = false;  // predicted probability fell below kProbabilityFloor
};

// -w_y log(p_y), with p_y clamped at 1e-12.
LossValue weighted_cross_entropy(const Vec& probs, std::size_t label, const Vec& weights);

enum class ClassWeighting { none, inverse_frequency };

// w_i = N / (C * count_i); all ones for ClassWeighting::none.
// Throws InputError when a class has no training examples.
Vec class_weights(std::span<const std::size_t> labels, std::size_t classes,
                  ClassWeighting mode = ClassWeighting::inverse_frequency);

struct ModelConfig {
  EncoderConfig encoder;
  HeadConfig head;
  FusionConfig fusion;
  std::size_t semantic_dims = 100;
  std::size_t stylometric_dims = StylometricVector::kDims;
  std::size_t form_dims = 0;  // number of forms + unknown slot
  std::size_t meter_dims = kMeterClasses;
  std::size_t classes = 0;

  std::size_t concat_dims() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  EncoderParams encoder;
  HeadParams head;
};

template <class F, class First, class... Rest>
void visit_model_tensors(F&& f, First& first, Rest&... rest) {
  visit_tensors(f, first.encoder, rest.encoder...);
  visit_head_tensors(f, first.head, rest.head...);
}

ModelParams init_model(const ModelConfig& cfg);
ModelParams zeros_like(const ModelParams& p);
void round_to_float32(ModelParams& p);

// One training/evaluation instance with its features already computed.
struct VerseExample {
  TokenSequence tokens;
  Vec semantic;
  Vec stylometric;  // scaled
  Vec form;
  Vec meter;
  std::size_t label = 0;
  std::string poem_id;
};

// Right-pads every sequence with PAD up to the longest one in the batch.
std::vector<std::vector<TokenId>> pad_batch(std::span<const VerseExample* const> batch);

// Probability vector for one example, dropout off.
Vec predict_probs(const VerseExample& ex, const ModelParams& p, const ModelConfig& cfg);
Vec predict_probs(std::span<const TokenId> ids, const VerseExample& ex, const ModelParams& p,
                  const ModelConfig& cfg);

enum class DecayMode { decoupled, coupled };

struct TrainConfig {
  double lr = 2e-5;
  double weight_decay = 0.01;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 16;
  double warmup_fraction = 0.10;
  double clip_norm = 1.0;
  std::size_t patience = 3;
  std::uint64_t seed = 42;
  ClassWeighting class_weighting = ClassWeighting::inverse_frequency;
  DecayMode decay = DecayMode::decoupled;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Sum of squared entries over weight matrices (biases and norm params excluded).
double l2_penalty(const ModelParams& p);

// Mean weighted cross-entropy over the batch plus weight_decay * l2_penalty,
// evaluated with dropout off.
double total_loss(std::span<const VerseExample> batch, const ModelParams& p,
                  const ModelConfig& cfg, const Vec& weights, double weight_decay);

struct BatchLoss {
  double loss = 0;  // mean weighted CE (+ L2 term when coupled)
  std::size_t clamped = 0;
};

// Loss and accumulated gradients for one batch. With `l2 > 0` the coupled
// penalty l2 * sum(w^2) is added to both loss and gradient.
BatchLoss loss_and_gradient(std::span<const VerseExample* const> batch, const ModelParams& p,
                            const ModelConfig& cfg, const Vec& weights, double l2, bool training,
                            Rng* rng, ModelParams& grads);

// Linear warm-up over the first warmup_fraction of steps, then cosine decay.
// `step` counts from 1.
double learning_rate(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

double global_norm(const ModelParams& grads);

class AdamW {
 public:
  AdamW(const ModelParams& like, const TrainConfig& cfg);
  // Decoupled decay (theta -= lr * lambda * theta) applies to weight matrices
  // only, and only in DecayMode::decoupled.
  void step(ModelParams& params, const ModelParams& grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  TrainConfig cfg_;
  ModelParams m_, v_;
  std::size_t t_ = 0;
};

// Stops after `patience` consecutive epochs without strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);
  // Returns true when `metric` is a new best.
  bool update(double metric);
  bool should_stop() const { return stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_ = 0;
  bool has_best_ = false;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0;
  double valid_accuracy = 0;
  double lr = 0;  // rate at the last step of the epoch
};

struct TrainResult {
  ModelParams params;  // best-validation epoch, rounded to float32
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_valid_accuracy = 0;
  bool stopped_early = false;
  Vec class_weights;
};

double verse_accuracy(std::span<const VerseExample> data, const ModelParams& p,
                      const ModelConfig& cfg);

std::string training_log_csv(const std::vector<EpochLog>& log);

// AdamW with warm-up/cosine schedule, global-norm clipping and early stopping
// on validation verse accuracy. Throws NumericalError on a non-finite loss.
TrainResult fit(std::span<const VerseExample> train, std::span<const VerseExample> valid,
                const ModelConfig& model_cfg, const TrainConfig& cfg);
TrainResult fit(std::span<const VerseExample> train, std::span<const VerseExample> valid,
                const ModelConfig& model_cfg, const TrainConfig& cfg, ModelParams init);

}  // namespace beyt
