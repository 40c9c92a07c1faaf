#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beyt/aggregate.hpp"
#include "beyt/checkpoint.hpp"
#include "beyt/corpus.hpp"
#include "beyt/embeddings.hpp"
#include "beyt/features.hpp"
#include "beyt/metrics.hpp"
#include "beyt/model.hpp"
#include "beyt/normalize.hpp"
#include "beyt/split.hpp"

namespace beyt {

struct ExperimentConfig {
  std::filesystem::path corpus;
  std::filesystem::path workdir;
  std::size_t min_verses_per_poet = 50;
  NormalizationConfig normalization;
  std::size_t vocab_min_freq = 1;
  EmbeddingConfig embedding;
  EncoderConfig encoder;  // vocab_size is filled in from the vocabulary
  HeadConfig head;
  FusionConfig fusion;
  TrainConfig train;
  SplitRatios ratios{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 13;
  std::vector<double> taus{0.5, 0.6, 0.7, 0.8, 0.9};
  double threshold = 0.5;
  ConfidenceMode confidence = ConfidenceMode::mean;

  // Settings sized for a laptop run on the synthetic corpus.
  static ExperimentConfig desk();
  // Optimizer and head settings as used for the full-corpus 768-dim model.
  static ExperimentConfig full_scale();

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base = desk());
};

Corpus subset(const Corpus& c, const SplitAssignment& a, SplitName which);

struct FeatureArtifacts {
  Scaler scaler;
  MeterClassMap meter_map;
  LabelIndex form_index;
  LabelIndex poet_index;
};

// Builds the vocabulary and trains the embeddings on the training corpus.
struct TextArtifacts {
  Vocabulary vocab;
  EmbeddingMatrix embeddings;
};
TextArtifacts train_text_artifacts(const Corpus& train, const ExperimentConfig& cfg);

// Scaler, meter classes and form index come from the training corpus only.
FeatureArtifacts fit_feature_artifacts(const Corpus& train, const LabelIndex& poets,
                                       const NormalizationConfig& norm);

class Featurizer {
 public:
  Featurizer(const Vocabulary& vocab, const EmbeddingMatrix& embeddings,
             const FeatureArtifacts& artifacts, std::size_t max_len);

  VerseExample featurize(const Verse& v, const PoemRecord& meta, std::size_t label = 0) const;
  std::vector<VerseExample> featurize(const Corpus& c) const;  // labels from poet_index

 private:
  const Vocabulary& vocab_;
  const EmbeddingMatrix& embeddings_;
  const FeatureArtifacts& artifacts_;
  std::size_t max_len_;
};

ModelConfig make_model_config(const ExperimentConfig& cfg, const Vocabulary& vocab,
                              const EmbeddingMatrix& embeddings, const FeatureArtifacts& fa);

struct TrainingRun {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

// Featurizes the train/validation splits, fits the classifier and packs a
// checkpoint. Verifies the split for leakage first.
TrainingRun train_model(const Corpus& corpus, const SplitAssignment& split,
                        const TextArtifacts& text, const ExperimentConfig& cfg);

struct VersePrediction {
  Vec probs;
  std::size_t label = 0;
};

// Inference over a checkpoint plus its vocabulary and embeddings. The
// constructor throws StaleArtifactError when the hashes disagree.
class Predictor {
 public:
  Predictor(const Checkpoint& ckpt, const Vocabulary& vocab, const EmbeddingMatrix& embeddings);
  Predictor(const Predictor&) = delete;
  Predictor& operator=(const Predictor&) = delete;

  VersePrediction predict_verse(const Verse& v, const PoemRecord& meta) const;
  VersePrediction predict(const VerseExample& ex) const;
  const Featurizer& featurizer() const { return featurizer_; }
  const Checkpoint& checkpoint() const { return ckpt_; }

 private:
  const Checkpoint& ckpt_;
  FeatureArtifacts artifacts_;
  Featurizer featurizer_;
};

struct PoemResult {
  std::string poem_id;
  std::size_t truth = 0;
  std::vector<Vec> verse_probs;
};

struct Evaluation {
  std::vector<std::size_t> verse_preds, verse_truth;
  std::vector<PoemResult> poems;
  std::map<EvalLevel, EvalReport> reports;
  std::vector<PoemPrediction> poem_predictions;  // all three strategies
};

std::vector<PoemResult> predict_poems(const Predictor& predictor, const Corpus& corpus);
Evaluation evaluate(const Predictor& predictor, const Corpus& corpus, double threshold,
                    ConfidenceMode mode = ConfidenceMode::mean);
std::vector<SweepRow> sweep(const std::vector<PoemResult>& poems, std::span<const double> taus,
                            ConfidenceMode mode = ConfidenceMode::mean);

std::string file_hash(const std::filesystem::path& p);
std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view contents);

}  // namespace beyt
