#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beyt/tensor.hpp"

namespace beyt {

enum class Strategy { majority, weighted, thresholded };
std::string to_string(Strategy s);

// How a poem-level confidence is derived from the summed verse
// distributions: divided by the verse count (default) or the raw sum.
enum class ConfidenceMode { mean, sum };

struct VerseVote {
  std::size_t label = 0;
  double probability = 0;  // max softmax probability of that verse
};

struct PoemPrediction {
  std::string poem_id;
  Strategy strategy = Strategy::weighted;
  std::optional<std::size_t> label;  // nullopt = ABSTAIN
  double confidence = 0;
  std::vector<VerseVote> verses;

  bool abstained() const { return !label.has_value(); }
};

std::vector<VerseVote> verse_votes(std::span<const Vec> verse_probs);

// Most frequent label; ties go to the larger summed verse probability, then
// to the smallest label id. Throws InputError on an empty list.
std::size_t majority_vote(std::span<const VerseVote> votes);

struct WeightedVote {
  std::size_t label = 0;
  double confidence = 0;
};

// argmax of the summed distributions (smallest id on exact ties).
WeightedVote weighted_vote(std::span<const Vec> verse_probs,
                           ConfidenceMode mode = ConfidenceMode::mean);

// Weighted vote that abstains when the confidence is below tau.
PoemPrediction thresholded_vote(std::span<const Vec> verse_probs, double tau,
                                ConfidenceMode mode = ConfidenceMode::mean);

PoemPrediction predict_poem(const std::string& poem_id, std::span<const Vec> verse_probs,
                            Strategy strategy, double tau = 0.5,
                            ConfidenceMode mode = ConfidenceMode::mean);

struct SweepRow {
  double threshold = 0;
  std::optional<double> accuracy;  // undefined when nothing is covered
  double coverage = 0;
  std::size_t covered = 0;
  std::size_t total = 0;
};

// poem_probs[i] holds the verse distributions of poem i; labels[i] its truth.
// Throws InputError unless taus are sorted ascending.
std::vector<SweepRow> sweep_thresholds(const std::vector<std::vector<Vec>>& poem_probs,
                                       std::span<const std::size_t> labels,
                                       std::span<const double> taus,
                                       ConfidenceMode mode = ConfidenceMode::mean);

// threshold,accuracy,coverage,covered,total; undefined accuracy is "NA".
std::string sweep_csv(std::span<const SweepRow> rows);

// poem_id,strategy,label,confidence,abstained
std::string poem_predictions_csv(std::span<const PoemPrediction> preds,
                                 const std::vector<std::string>& label_names);

}  // namespace beyt
