#include "beyt/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "beyt/error.hpp"
#include "beyt/hash.hpp"
#include "beyt/pipeline.hpp"
#include "beyt/synthetic.hpp"

namespace beyt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Artifact file names inside a work directory.
constexpr const char* kCorpusFile = "corpus.jsonl";
constexpr const char* kSplitCsv = "split.csv";
constexpr const char* kSplitJson = "split.json";
constexpr const char* kVocabFile = "vocab.tsv";
constexpr const char* kEmbeddingsFile = "embeddings.bin";
constexpr const char* kEmbeddingsMeta = "embeddings.json";
constexpr const char* kCheckpointFile = "checkpoint.bin";
constexpr const char* kMeterMapFile = "meter_map.json";
constexpr const char* kScalerFile = "scaler.json";

struct Options {
  std::string config_file;
  std::string workdir;
  // ingest / split / make-synthetic
  std::string corpus;
  std::string out;
  std::size_t min_verses = 50;
  std::uint64_t seed = 0;
  std::vector<double> ratios;
  std::size_t poets = 5, poems = 200;
  // training
  double lr = 0;
  std::size_t epochs = 0, batch_size = 0, patience = 0, dims = 0;
  std::vector<std::string> drop_blocks;
  // evaluation
  double threshold = 0.5;
  std::vector<double> taus;
  std::string input;
};

struct Flags {
  CLI::Option* min_verses = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* ratios = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* epochs = nullptr;
  CLI::Option* batch_size = nullptr;
  CLI::Option* patience = nullptr;
  CLI::Option* dims = nullptr;
  CLI::Option* drop = nullptr;
  CLI::Option* threshold = nullptr;
  CLI::Option* taus = nullptr;
};

bool given(CLI::Option* o) { return o && o->count() > 0; }

ExperimentConfig resolve_config(const Options& o, const Flags& f) {
  ExperimentConfig cfg = ExperimentConfig::desk();
  if (!o.config_file.empty()) {
    json j;
    try {
      j = json::parse(read_file(o.config_file));
    } catch (const json::exception& e) {
      throw InputError("config file: " + std::string(e.what()));
    }
    cfg = ExperimentConfig::from_json(j, cfg);
  }
  if (!o.workdir.empty()) cfg.workdir = o.workdir;
  if (given(f.min_verses)) cfg.min_verses_per_poet = o.min_verses;
  if (given(f.ratios)) {
    if (o.ratios.size() != 3) throw InputError("--ratios needs three comma-separated values");
    cfg.ratios = {o.ratios[0], o.ratios[1], o.ratios[2]};
  }
  if (given(f.lr)) cfg.train.lr = o.lr;
  if (given(f.epochs)) cfg.train.max_epochs = o.epochs;
  if (given(f.batch_size)) cfg.train.batch_size = o.batch_size;
  if (given(f.patience)) cfg.train.patience = o.patience;
  if (given(f.dims)) cfg.embedding.dims = o.dims;
  for (const auto& b : o.drop_blocks) {
    if (b == "text") cfg.fusion.text = false;
    else if (b == "semantic") cfg.fusion.semantic = false;
    else if (b == "stylometric") cfg.fusion.stylometric = false;
    else if (b == "form") cfg.fusion.form = false;
    else if (b == "meter") cfg.fusion.meter = false;
    else throw InputError("unknown fusion block '" + b + "'");
  }
  if (given(f.threshold)) cfg.threshold = o.threshold;
  if (given(f.taus)) cfg.taus = o.taus;
  return cfg;
}

void write_config(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg) {
  write_file(dir / ("config." + command + ".json"), cfg.to_json().dump(2) + "\n");
}

fs::path require_dir(const std::string& dir) {
  if (dir.empty()) throw InputError("a work directory is required (--workdir)");
  if (!fs::is_directory(dir)) throw InputError("work directory not found: " + dir);
  return dir;
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw InputError(p.string() + ": " + e.what());
  }
}

// Loads the corpus and split of a work directory, checking that the split was
// produced from this corpus.
struct Loaded {
  Corpus corpus;
  SplitAssignment split;
  std::string corpus_hash;
  std::string split_hash;
};

Loaded load_corpus_and_split(const fs::path& dir) {
  Loaded l;
  l.corpus = load_corpus(dir / kCorpusFile);
  l.corpus_hash = file_hash(dir / kCorpusFile);
  l.split = load_split(dir / kSplitCsv, dir / kSplitJson);
  l.split_hash = file_hash(dir / kSplitCsv);
  const auto side = read_json(dir / kSplitJson);
  if (side.value("corpus_hash", std::string()) != l.corpus_hash)
    throw StaleArtifactError(kSplitCsv, "was produced from a different corpus.jsonl");
  verify_no_leakage(l.split, l.corpus);
  return l;
}

TextArtifacts load_text(const fs::path& dir, const Loaded& l) {
  TextArtifacts t{load_vocab(dir / kVocabFile), load_embeddings(dir / kEmbeddingsFile)};
  const auto meta = read_json(dir / kEmbeddingsMeta);
  if (meta.value("corpus_hash", std::string()) != l.corpus_hash ||
      meta.value("split_hash", std::string()) != l.split_hash)
    throw StaleArtifactError(kEmbeddingsFile, "was trained on a different corpus or split");
  if (meta.value("vocab_hash", std::string()) != t.vocab.hash())
    throw StaleArtifactError(kVocabFile, "does not match the embeddings metadata");
  if (meta.value("embeddings_hash", std::string()) != t.embeddings.hash())
    throw StaleArtifactError(kEmbeddingsFile, "does not match its metadata");
  return t;
}

Checkpoint load_checked_checkpoint(const fs::path& dir) {
  auto ck = load_checkpoint(dir / kCheckpointFile);
  if (fs::exists(dir / kMeterMapFile)) {
    const auto sidecar = MeterClassMap::from_json(read_json(dir / kMeterMapFile));
    if (sidecar.hash() != ck.meter_map.hash())
      throw StaleArtifactError(kMeterMapFile, "does not match the checkpoint");
  }
  return ck;
}

void check_upstream(const Checkpoint& ck, const Loaded& l) {
  auto it = ck.upstream.find("corpus");
  if (it == ck.upstream.end() || it->second != l.corpus_hash)
    throw StaleArtifactError(kCheckpointFile, "was trained on a different corpus.jsonl");
  it = ck.upstream.find("split");
  if (it == ck.upstream.end() || it->second != l.split_hash)
    throw StaleArtifactError(kCheckpointFile, "was trained on a different split.csv");
}

int cmd_make_synthetic(const Options& o, const Flags& f, std::ostream& out) {
  if (o.out.empty()) throw InputError("--out is required");
  SyntheticConfig sc;
  sc.poets = o.poets;
  sc.poems_per_poet = o.poems;
  if (given(f.seed)) sc.seed = o.seed;
  const auto c = make_synthetic_corpus(sc);
  std::ostringstream os;
  write_corpus(c, os);
  write_file(o.out, os.str());
  out << "wrote " << c.size() << " poems (" << c.verse_count() << " verses) to " << o.out << '\n';
  return kOk;
}

int cmd_ingest(const Options& o, const Flags& f, std::ostream& out) {
  auto cfg = resolve_config(o, f);
  if (o.corpus.empty()) throw InputError("--corpus is required");
  if (o.out.empty()) throw InputError("--out is required");
  cfg.corpus = o.corpus;
  cfg.workdir = o.out;
  if (!fs::exists(o.corpus)) throw InputError("corpus not found: " + o.corpus);
  const auto raw = load_corpus(o.corpus);
  const auto filtered = filter_corpus(raw, cfg.min_verses_per_poet);
  fs::create_directories(o.out);
  const fs::path dir = o.out;
  save_corpus(filtered, dir / kCorpusFile);
  const auto stats = corpus_stats(filtered);
  write_file(dir / "stats.json", stats.to_json().dump(2) + "\n");
  write_file(dir / "stats.txt", stats.to_text());
  write_config(dir, "ingest", cfg);
  out << "kept " << filtered.size() << " of " << raw.size() << " poems, " << stats.poets
      << " poets, " << stats.verses << " verses\n";
  return kOk;
}

int cmd_split(const Options& o, const Flags& f, std::ostream& out) {
  auto cfg = resolve_config(o, f);
  const std::string dir_s = !o.corpus.empty() ? o.corpus : o.workdir;
  const fs::path dir = require_dir(dir_s);
  cfg.workdir = dir;
  if (given(f.seed)) cfg.split_seed = o.seed;
  validate_ratios(cfg.ratios);
  const auto corpus = load_corpus(dir / kCorpusFile);
  const auto a = stratified_poem_split(corpus, cfg.ratios, cfg.split_seed);
  const auto report = verify_no_leakage(a, corpus);
  auto side = a.sidecar();
  side["corpus_hash"] = file_hash(dir / kCorpusFile);
  write_file(dir / kSplitCsv, a.to_csv());
  write_file(dir / kSplitJson, side.dump(2) + "\n");
  write_config(dir, "split", cfg);
  for (const auto& w : a.warnings) out << "warning: " << w << '\n';
  out << "split " << report.poems << " poems; leakage check: 0 violations\n";
  return kOk;
}

int cmd_train_embeddings(const Options& o, const Flags& f, std::ostream& out) {
  auto cfg = resolve_config(o, f);
  const fs::path dir = require_dir(o.workdir);
  if (given(f.seed)) cfg.embedding.seed = o.seed;
  if (given(f.epochs)) cfg.embedding.epochs = o.epochs;
  const auto l = load_corpus_and_split(dir);
  const auto train = subset(l.corpus, l.split, SplitName::train);
  const auto text = train_text_artifacts(train, cfg);
  save_vocab(text.vocab, dir / kVocabFile);
  save_embeddings(text.embeddings, dir / kEmbeddingsFile);
  const json meta = {{"corpus_hash", l.corpus_hash},
                     {"split_hash", l.split_hash},
                     {"vocab_hash", text.vocab.hash()},
                     {"embeddings_hash", text.embeddings.hash()},
                     {"config", text.embeddings.config},
                     {"deterministic", true}};
  write_file(dir / kEmbeddingsMeta, meta.dump(2) + "\n");
  write_config(dir, "train-embeddings", cfg);
  out << "vocabulary " << text.vocab.size() << " tokens, embeddings " << text.embeddings.dims()
      << "-dim\n";
  return kOk;
}

int cmd_train(const Options& o, const Flags& f, std::ostream& out) {
  auto cfg = resolve_config(o, f);
  const fs::path dir = require_dir(o.workdir);
  if (given(f.seed)) cfg.train.seed = o.seed;
  const auto l = load_corpus_and_split(dir);
  const auto text = load_text(dir, l);
  auto run = train_model(l.corpus, l.split, text, cfg);
  run.checkpoint.upstream = {{"corpus", l.corpus_hash}, {"split", l.split_hash}};
  save_checkpoint(run.checkpoint, dir / kCheckpointFile);
  write_file(dir / "training_log.csv", training_log_csv(run.log));
  write_file(dir / kMeterMapFile, run.checkpoint.meter_map.to_json().dump(2) + "\n");
  write_file(dir / kScalerFile, run.checkpoint.scaler.to_json().dump(2) + "\n");
  write_config(dir, "train", cfg);
  const auto& s = run.checkpoint.training_summary;
  out << "trained " << s.at("epochs_run") << " epoch(s); best validation accuracy "
      << s.at("best_valid_accuracy") << " at epoch " << s.at("best_epoch") << '\n';
  return kOk;
}

int cmd_evaluate(const Options& o, const Flags& f, std::ostream& out) {
  auto cfg = resolve_config(o, f);
  const fs::path dir = require_dir(o.workdir);
  const auto l = load_corpus_and_split(dir);
  const auto ck = load_checked_checkpoint(dir);
  check_upstream(ck, l);
  const auto vocab = load_vocab(dir / kVocabFile);
  const auto emb = load_embeddings(dir / kEmbeddingsFile);
  const Predictor predictor(ck, vocab, emb);
  const auto test = subset(l.corpus, l.split, SplitName::test);
  const auto ev = evaluate(predictor, test, cfg.threshold, cfg.confidence);
  const auto& names = ck.poet_index.labels();
  for (const auto& [level, rep] : ev.reports) {
    write_file(dir / ("eval_" + to_string(level) + ".json"), rep.to_json(names).dump(2) + "\n");
    write_file(dir / ("eval_" + to_string(level) + ".txt"), rep.to_text(names));
    out << std::left << std::setw(18) << to_string(level) << " accuracy " << std::fixed
        << std::setprecision(4) << rep.accuracy << "  macro-F1 " << rep.macro_f1;
    if (rep.coverage) out << "  coverage " << *rep.coverage;
    out << '\n';
  }
  write_file(dir / "poem_predictions.csv", poem_predictions_csv(ev.poem_predictions, names));
  write_config(dir, "evaluate", cfg);
  return kOk;
}

int cmd_sweep(const Options& o, const Flags& f, std::ostream& out) {
  auto cfg = resolve_config(o, f);
  const fs::path dir = require_dir(o.workdir);
  if (!std::is_sorted(cfg.taus.begin(), cfg.taus.end()))
    throw InputError("--taus must be sorted ascending");
  for (double t : cfg.taus)
    if (!(t > 0 && t < 1) && cfg.confidence == ConfidenceMode::mean)
      throw InputError("thresholds must lie in (0, 1)");
  const auto l = load_corpus_and_split(dir);
  const auto ck = load_checked_checkpoint(dir);
  check_upstream(ck, l);
  const auto vocab = load_vocab(dir / kVocabFile);
  const auto emb = load_embeddings(dir / kEmbeddingsFile);
  const Predictor predictor(ck, vocab, emb);
  const auto test = subset(l.corpus, l.split, SplitName::test);
  const auto rows = sweep(predict_poems(predictor, test), cfg.taus, cfg.confidence);
  const auto csv = sweep_csv(rows);
  write_file(dir / "sweep.csv", csv);
  write_config(dir, "sweep-thresholds", cfg);
  out << csv;
  return kOk;
}

std::string verse_csv_header(const LabelIndex& poets) {
  std::string h = "poem_id,verse,label";
  for (const auto& p : poets.labels()) h += ",p_" + p;
  return h + "\n";
}

int cmd_predict(const Options& o, const Flags& f, std::ostream& out) {
  auto cfg = resolve_config(o, f);
  const fs::path dir = require_dir(o.workdir);
  const auto ck = load_checked_checkpoint(dir);
  const auto vocab = load_vocab(dir / kVocabFile);
  const auto emb = load_embeddings(dir / kEmbeddingsFile);
  const Predictor predictor(ck, vocab, emb);

  std::string text;
  if (o.input.empty() || o.input == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    text = ss.str();
  } else {
    if (!fs::exists(o.input)) throw InputError("input not found: " + o.input);
    text = read_file(o.input);
  }
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::ostringstream verses;
  verses.precision(10);
  verses << verse_csv_header(ck.poet_index);
  std::vector<PoemPrediction> poems;
  const auto& names = ck.poet_index.labels();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto r = parse_record(line, line_no, /*labelled=*/false);
    std::vector<Vec> probs;
    for (std::size_t i = 0; i < r.verses.size(); ++i) {
      const auto p = predictor.predict_verse(r.verses[i], r);
      verses << r.poem_id << ',' << i << ',' << names[p.label];
      for (Eigen::Index k = 0; k < p.probs.size(); ++k) verses << ',' << p.probs[k];
      verses << '\n';
      probs.push_back(p.probs);
    }
    for (auto s : {Strategy::majority, Strategy::weighted, Strategy::thresholded})
      poems.push_back(predict_poem(r.poem_id, probs, s, cfg.threshold, cfg.confidence));
  }
  if (line_no == 0 || poems.empty()) throw InputError("no verses to predict");
  const auto poem_csv = poem_predictions_csv(poems, names);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "verse_predictions.csv", verses.str());
    write_file(fs::path(o.out) / "poem_predictions.csv", poem_csv);
    write_config(o.out, "predict", cfg);
  } else {
    out << verses.str() << '\n' << poem_csv;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verse-level authorship attribution for classical Persian poetry"};
  app.require_subcommand(1);
  Options o;
  Flags f;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_file, "Experiment config JSON (flags override it)");
  };
  auto add_workdir = [&](CLI::App* sub) {
    sub->add_option("--workdir", o.workdir, "Work directory holding the pipeline artifacts")
        ->required();
  };

  auto* synth = app.add_subcommand("make-synthetic", "Write the desk-scale synthetic corpus");
  synth->add_option("--out", o.out, "Output corpus file")->required();
  synth->add_option("--poets", o.poets, "Number of poets");
  synth->add_option("--poems", o.poems, "Poems per poet");
  auto* synth_seed = synth->add_option("--seed", o.seed, "Generator seed");

  auto* ingest = app.add_subcommand("ingest", "Load, filter and summarize a corpus file");
  add_config(ingest);
  ingest->add_option("--corpus", o.corpus, "Line-delimited corpus file")->required();
  auto* ingest_min = ingest->add_option("--min-verses", o.min_verses, "Minimum verses per poet");
  ingest->add_option("--out", o.out, "Output work directory")->required();

  auto* split = app.add_subcommand("split", "Poem-level stratified train/validation/test split");
  add_config(split);
  split->add_option("--corpus", o.corpus, "Work directory produced by ingest")->required();
  auto* split_seed = split->add_option("--seed", o.seed, "Split seed");
  auto* split_ratios = split->add_option("--ratios", o.ratios, "train,validation,test")
                           ->delimiter(',')
                           ->expected(3);

  auto* emb = app.add_subcommand("train-embeddings", "Build the vocabulary and train embeddings");
  add_config(emb);
  add_workdir(emb);
  auto* emb_seed = emb->add_option("--seed", o.seed, "Embedding seed");
  auto* emb_epochs = emb->add_option("--epochs", o.epochs, "Embedding epochs");
  auto* emb_dims = emb->add_option("--dims", o.dims, "Embedding dimensions");

  auto* train = app.add_subcommand("train", "Train the classifier and write a checkpoint");
  add_config(train);
  add_workdir(train);
  auto* train_seed = train->add_option("--seed", o.seed, "Training seed");
  auto* train_lr = train->add_option("--lr", o.lr, "Peak learning rate");
  auto* train_epochs = train->add_option("--epochs", o.epochs, "Maximum epochs");
  auto* train_batch = train->add_option("--batch-size", o.batch_size, "Batch size");
  auto* train_patience = train->add_option("--patience", o.patience, "Early-stopping patience");
  auto* train_drop = train->add_option("--drop-block", o.drop_blocks,
                                       "Leave a block out of the fusion "
                                       "(text|semantic|stylometric|form|meter)");

  auto* eval = app.add_subcommand("evaluate", "Evaluate on the test split (all four strategies)");
  add_config(eval);
  add_workdir(eval);
  auto* eval_threshold = eval->add_option("--threshold", o.threshold, "Abstention threshold");

  auto* sweep_cmd = app.add_subcommand("sweep-thresholds", "Accuracy/coverage threshold sweep");
  add_config(sweep_cmd);
  add_workdir(sweep_cmd);
  auto* sweep_taus = sweep_cmd->add_option("--taus", o.taus, "Comma-separated thresholds")
                         ->delimiter(',');

  auto* predict = app.add_subcommand("predict", "Predict verses and poems from JSONL input");
  add_config(predict);
  add_workdir(predict);
  predict->add_option("--input", o.input, "Input file, or '-' for standard input");
  predict->add_option("--out", o.out, "Output directory (default: standard output)");
  auto* predict_threshold = predict->add_option("--threshold", o.threshold, "Abstention threshold");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (synth->parsed()) {
      f.seed = synth_seed;
      return cmd_make_synthetic(o, f, out);
    }
    if (ingest->parsed()) {
      f.min_verses = ingest_min;
      return cmd_ingest(o, f, out);
    }
    if (split->parsed()) {
      f.seed = split_seed;
      f.ratios = split_ratios;
      return cmd_split(o, f, out);
    }
    if (emb->parsed()) {
      f.seed = emb_seed;
      f.epochs = emb_epochs;
      f.dims = emb_dims;
      return cmd_train_embeddings(o, f, out);
    }
    if (train->parsed()) {
      f.seed = train_seed;
      f.lr = train_lr;
      f.epochs = train_epochs;
      f.batch_size = train_batch;
      f.patience = train_patience;
      f.drop = train_drop;
      return cmd_train(o, f, out);
    }
    if (eval->parsed()) {
      f.threshold = eval_threshold;
      return cmd_evaluate(o, f, out);
    }
    if (sweep_cmd->parsed()) {
      f.taus = sweep_taus;
      return cmd_sweep(o, f, out);
    }
    if (predict->parsed()) {
      f.threshold = predict_threshold;
      return cmd_predict(o, f, out);
    }
  } catch (const StaleArtifactError& e) {
    err << "error: " << e.what() << '\n';
    return kStaleArtifact;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  err << app.help();
  return kUsageError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace beyt::cli
