#include "beyt/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "beyt/error.hpp"
#include "beyt/hash.hpp"

namespace beyt {

using nlohmann::json;

ExperimentConfig ExperimentConfig::desk() {
  ExperimentConfig c;
  c.train.lr = 1e-3;
  c.train.seed = 42;
  return c;
}

ExperimentConfig ExperimentConfig::full_scale() {
  ExperimentConfig c;
  c.encoder.d_model = 768;
  c.encoder.n_heads = 12;
  c.encoder.n_layers = 12;
  c.encoder.d_ff = 3072;
  c.train = TrainConfig{};
  return c;
}

json ExperimentConfig::to_json() const {
  json enc = encoder;
  enc.erase("vocab_size");
  return {{"corpus", corpus.string()},
          {"workdir", workdir.string()},
          {"min_verses_per_poet", min_verses_per_poet},
          {"normalization", normalization},
          {"vocab_min_freq", vocab_min_freq},
          {"embedding", embedding},
          {"encoder", enc},
          {"head", {{"hidden", head.hidden}, {"dropout", head.dropout}, {"seed", head.seed}}},
          {"fusion",
           {{"text", fusion.text},
            {"semantic", fusion.semantic},
            {"stylometric", fusion.stylometric},
            {"form", fusion.form},
            {"meter", fusion.meter}}},
          {"train", train},
          {"split", {{"ratios", ratios}, {"seed", split_seed}}},
          {"taus", taus},
          {"threshold", threshold},
          {"confidence", confidence == ConfidenceMode::sum ? "sum" : "mean"}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j, ExperimentConfig c) {
  try {
    if (j.contains("corpus")) c.corpus = j.at("corpus").get<std::string>();
    if (j.contains("workdir")) c.workdir = j.at("workdir").get<std::string>();
    c.min_verses_per_poet = j.value("min_verses_per_poet", c.min_verses_per_poet);
    if (j.contains("normalization")) {
      json merged = c.normalization;
      merged.update(j.at("normalization"));
      c.normalization = merged.get<NormalizationConfig>();
    }
    c.vocab_min_freq = j.value("vocab_min_freq", c.vocab_min_freq);
    if (j.contains("embedding")) {
      json merged = c.embedding;
      merged.update(j.at("embedding"));
      c.embedding = merged.get<EmbeddingConfig>();
    }
    if (j.contains("encoder")) {
      json merged = c.encoder;
      merged.update(j.at("encoder"));
      c.encoder = merged.get<EncoderConfig>();
    }
    if (j.contains("head")) {
      const auto& h = j.at("head");
      c.head.hidden = h.value("hidden", c.head.hidden);
      c.head.dropout = h.value("dropout", c.head.dropout);
      c.head.seed = h.value("seed", c.head.seed);
    }
    if (j.contains("fusion")) {
      const auto& f = j.at("fusion");
      c.fusion.text = f.value("text", c.fusion.text);
      c.fusion.semantic = f.value("semantic", c.fusion.semantic);
      c.fusion.stylometric = f.value("stylometric", c.fusion.stylometric);
      c.fusion.form = f.value("form", c.fusion.form);
      c.fusion.meter = f.value("meter", c.fusion.meter);
    }
    if (j.contains("train")) {
      json merged = c.train;
      merged.update(j.at("train"));
      c.train = merged.get<TrainConfig>();
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      if (s.contains("ratios")) c.ratios = s.at("ratios").get<SplitRatios>();
      c.split_seed = s.value("seed", c.split_seed);
    }
    if (j.contains("taus")) c.taus = j.at("taus").get<std::vector<double>>();
    c.threshold = j.value("threshold", c.threshold);
    const auto conf = j.value("confidence", std::string("mean"));
    if (conf != "mean" && conf != "sum") throw InputError("unknown confidence mode '" + conf + "'");
    c.confidence = conf == "sum" ? ConfidenceMode::sum : ConfidenceMode::mean;
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

Corpus subset(const Corpus& c, const SplitAssignment& a, SplitName which) {
  std::vector<PoemRecord> out;
  for (const auto& e : a.entries) {
    if (e.split != which) continue;
    const auto* r = c.find(e.poem_id);
    if (!r) throw InputError("split references unknown poem '" + e.poem_id + "'");
    out.push_back(*r);
  }
  if (out.empty()) throw InputError("split '" + to_string(which) + "' is empty");
  return Corpus(std::move(out));
}

TextArtifacts train_text_artifacts(const Corpus& train, const ExperimentConfig& cfg) {
  TextArtifacts t{build_vocab(train, cfg.normalization, cfg.vocab_min_freq), {}};
  std::vector<TokenSequence> sentences;
  for (const auto& r : train.records())
    for (const auto& v : r.verses) sentences.push_back(tokenize_verse(v, t.vocab, cfg.encoder.max_len));
  t.embeddings = train_sgns(sentences, t.vocab, cfg.embedding);
  return t;
}

FeatureArtifacts fit_feature_artifacts(const Corpus& train, const LabelIndex& poets,
                                       const NormalizationConfig& norm) {
  std::vector<StylometricVector> rows;
  for (const auto& r : train.records())
    for (const auto& v : r.verses) rows.push_back(stylometric_features(v, norm));
  return {Scaler::fit(rows), build_meter_classes(train), train.form_index(), poets};
}

Featurizer::Featurizer(const Vocabulary& vocab, const EmbeddingMatrix& embeddings,
                       const FeatureArtifacts& artifacts, std::size_t max_len)
    : vocab_(vocab), embeddings_(embeddings), artifacts_(artifacts), max_len_(max_len) {
  if (embeddings.vocab_size != vocab.size())
    throw StaleArtifactError("embeddings", "vocabulary size differs from the embedding matrix");
}

VerseExample Featurizer::featurize(const Verse& v, const PoemRecord& meta, std::size_t label) const {
  VerseExample ex;
  ex.tokens = tokenize_verse(v, vocab_, max_len_);
  ex.semantic = verse_semantic_vector(ex.tokens, embeddings_);
  ex.stylometric = artifacts_.scaler.transform(stylometric_features(v, vocab_.config()));
  ex.form = one_hot_form(meta, artifacts_.form_index);
  ex.meter = one_hot_meter(meta, artifacts_.meter_map);
  ex.label = label;
  ex.poem_id = meta.poem_id;
  return ex;
}

std::vector<VerseExample> Featurizer::featurize(const Corpus& c) const {
  std::vector<VerseExample> out;
  out.reserve(c.verse_count());
  for (const auto& r : c.records()) {
    const auto label = artifacts_.poet_index.at(r.poet);
    for (const auto& v : r.verses) out.push_back(featurize(v, r, label));
  }
  return out;
}

ModelConfig make_model_config(const ExperimentConfig& cfg, const Vocabulary& vocab,
                              const EmbeddingMatrix& embeddings, const FeatureArtifacts& fa) {
  ModelConfig m;
  m.encoder = cfg.encoder;
  m.encoder.vocab_size = vocab.size();
  m.head = cfg.head;
  m.fusion = cfg.fusion;
  m.semantic_dims = embeddings.dims();
  m.stylometric_dims = fa.scaler.dims();
  m.form_dims = fa.form_index.size() + 1;
  m.meter_dims = kMeterClasses;
  m.classes = fa.poet_index.size();
  return m;
}

TrainingRun train_model(const Corpus& corpus, const SplitAssignment& split,
                        const TextArtifacts& text, const ExperimentConfig& cfg) {
  verify_no_leakage(split, corpus);
  const Corpus train = subset(corpus, split, SplitName::train);
  const Corpus valid = subset(corpus, split, SplitName::validation);
  const auto fa = fit_feature_artifacts(train, corpus.poet_index(), text.vocab.config());
  const Featurizer fz(text.vocab, text.embeddings, fa, cfg.encoder.max_len);
  const auto train_x = fz.featurize(train);
  const auto valid_x = fz.featurize(valid);
  const auto model_cfg = make_model_config(cfg, text.vocab, text.embeddings, fa);

  auto result = fit(train_x, valid_x, model_cfg, cfg.train);

  TrainingRun run;
  auto& ck = run.checkpoint;
  ck.model = model_cfg;
  ck.train = cfg.train;
  ck.params = std::move(result.params);
  ck.vocab_hash = text.vocab.hash();
  ck.embeddings_hash = text.embeddings.hash();
  ck.scaler = fa.scaler;
  ck.meter_map = fa.meter_map;
  ck.form_index = fa.form_index;
  ck.poet_index = fa.poet_index;
  ck.training_summary = {{"epochs_run", result.log.size()},
                         {"best_epoch", result.best_epoch},
                         {"best_valid_accuracy", result.best_valid_accuracy},
                         {"stopped_early", result.stopped_early},
                         {"train_verses", train_x.size()},
                         {"valid_verses", valid_x.size()}};
  run.log = std::move(result.log);
  return run;
}

namespace {

// Hashes are checked before the featurizer sees mismatched shapes.
FeatureArtifacts checked_artifacts(const Checkpoint& c, const Vocabulary& vocab,
                                   const EmbeddingMatrix& embeddings) {
  if (vocab.hash() != c.vocab_hash)
    throw StaleArtifactError("vocab.tsv", "vocabulary hash does not match the checkpoint");
  if (embeddings.hash() != c.embeddings_hash)
    throw StaleArtifactError("embeddings.bin", "embedding hash does not match the checkpoint");
  return {c.scaler, c.meter_map, c.form_index, c.poet_index};
}

}  // namespace

Predictor::Predictor(const Checkpoint& ckpt, const Vocabulary& vocab,
                     const EmbeddingMatrix& embeddings)
    : ckpt_(ckpt),
      artifacts_(checked_artifacts(ckpt, vocab, embeddings)),
      featurizer_(vocab, embeddings, artifacts_, ckpt.model.encoder.max_len) {}

VersePrediction Predictor::predict(const VerseExample& ex) const {
  VersePrediction p;
  p.probs = predict_probs(ex, ckpt_.params, ckpt_.model);
  if (!p.probs.allFinite()) throw NumericalError("non-finite prediction for poem " + ex.poem_id);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < p.probs.size(); ++i)
    if (p.probs[i] > p.probs[best]) best = i;
  p.label = static_cast<std::size_t>(best);
  return p;
}

VersePrediction Predictor::predict_verse(const Verse& v, const PoemRecord& meta) const {
  return predict(featurizer_.featurize(v, meta));
}

std::vector<PoemResult> predict_poems(const Predictor& predictor, const Corpus& corpus) {
  const auto& poets = predictor.checkpoint().poet_index;
  std::vector<PoemResult> out;
  for (const auto& r : corpus.records()) {
    PoemResult pr;
    pr.poem_id = r.poem_id;
    pr.truth = poets.find(r.poet).value_or(poets.size());
    for (const auto& v : r.verses) pr.verse_probs.push_back(predictor.predict_verse(v, r).probs);
    out.push_back(std::move(pr));
  }
  return out;
}

Evaluation evaluate(const Predictor& predictor, const Corpus& corpus, double threshold,
                    ConfidenceMode mode) {
  const std::size_t C = predictor.checkpoint().poet_index.size();
  Evaluation ev;
  ev.poems = predict_poems(predictor, corpus);
  std::vector<std::size_t> maj, wei, thr, truth, thr_truth;
  for (const auto& p : ev.poems) {
    if (p.truth >= C) throw InputError("poem '" + p.poem_id + "' has a poet unknown to the model");
    for (const auto& v : verse_votes(p.verse_probs)) {
      ev.verse_preds.push_back(v.label);
      ev.verse_truth.push_back(p.truth);
    }
    for (auto s : {Strategy::majority, Strategy::weighted, Strategy::thresholded})
      ev.poem_predictions.push_back(predict_poem(p.poem_id, p.verse_probs, s, threshold, mode));
    const auto& m = ev.poem_predictions[ev.poem_predictions.size() - 3];
    const auto& w = ev.poem_predictions[ev.poem_predictions.size() - 2];
    const auto& t = ev.poem_predictions.back();
    maj.push_back(*m.label);
    wei.push_back(*w.label);
    truth.push_back(p.truth);
    if (!t.abstained()) {
      thr.push_back(*t.label);
      thr_truth.push_back(p.truth);
    }
  }
  ev.reports[EvalLevel::verse] =
      classification_report(ev.verse_preds, ev.verse_truth, C, EvalLevel::verse);
  ev.reports[EvalLevel::poem_majority] =
      classification_report(maj, truth, C, EvalLevel::poem_majority);
  ev.reports[EvalLevel::poem_weighted] =
      classification_report(wei, truth, C, EvalLevel::poem_weighted);
  EvalReport thr_report;
  if (!thr.empty()) {
    thr_report = classification_report(thr, thr_truth, C, EvalLevel::poem_thresholded);
  } else {
    thr_report.level = EvalLevel::poem_thresholded;
    thr_report.per_class.resize(C);
    thr_report.confusion.assign(C, std::vector<std::size_t>(C, 0));
  }
  thr_report.coverage = static_cast<double>(thr.size()) / static_cast<double>(truth.size());
  ev.reports[EvalLevel::poem_thresholded] = std::move(thr_report);
  return ev;
}

std::vector<SweepRow> sweep(const std::vector<PoemResult>& poems, std::span<const double> taus,
                            ConfidenceMode mode) {
  std::vector<std::vector<Vec>> probs;
  std::vector<std::size_t> labels;
  for (const auto& p : poems) {
    probs.push_back(p.verse_probs);
    labels.push_back(p.truth);
  }
  return sweep_thresholds(probs, labels, taus, mode);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("file not found: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, std::string_view contents) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  out << contents;
}

std::string file_hash(const std::filesystem::path& p) { return hash_hex(read_file(p)); }

}  // namespace beyt
