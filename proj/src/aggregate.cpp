#include "beyt/aggregate.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "beyt/error.hpp"

namespace beyt {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::majority: return "majority";
    case Strategy::thresholded: return "thresholded";
    case Strategy::weighted: break;
  }
  return "weighted";
}

std::vector<VerseVote> verse_votes(std::span<const Vec> verse_probs) {
  std::vector<VerseVote> out;
  out.reserve(verse_probs.size());
  for (const auto& p : verse_probs) {
    if (p.size() == 0) throw InputError("empty verse distribution");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < p.size(); ++i)
      if (p[i] > p[best]) best = i;
    out.push_back({static_cast<std::size_t>(best), p[best]});
  }
  return out;
}

std::size_t majority_vote(std::span<const VerseVote> votes) {
  if (votes.empty()) throw InputError("majority vote over no verses");
  std::map<std::size_t, std::pair<std::size_t, double>> tally;  // label -> (count, mass)
  for (const auto& v : votes) {
    auto& t = tally[v.label];
    ++t.first;
    t.second += v.probability;
  }
  // Map iteration is ascending by label, so strict comparisons keep the
  // smallest id on a full tie.
  auto best = tally.begin();
  for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
    const auto& [count, mass] = it->second;
    if (count > best->second.first || (count == best->second.first && mass > best->second.second))
      best = it;
  }
  return best->first;
}

WeightedVote weighted_vote(std::span<const Vec> verse_probs, ConfidenceMode mode) {
  if (verse_probs.empty()) throw InputError("weighted vote over no verses");
  Vec sum = Vec::Zero(verse_probs.front().size());
  for (const auto& p : verse_probs) {
    if (p.size() != sum.size()) throw InputError("weighted vote: ragged distributions");
    sum += p;
  }
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < sum.size(); ++i)
    if (sum[i] > sum[best]) best = i;
  const double conf =
      mode == ConfidenceMode::mean ? sum[best] / static_cast<double>(verse_probs.size()) : sum[best];
  return {static_cast<std::size_t>(best), conf};
}

PoemPrediction thresholded_vote(std::span<const Vec> verse_probs, double tau, ConfidenceMode mode) {
  if (!(tau > 0.0 && tau < 1.0) && mode == ConfidenceMode::mean)
    throw InputError("threshold must lie in (0, 1)");
  const auto w = weighted_vote(verse_probs, mode);
  PoemPrediction p;
  p.strategy = Strategy::thresholded;
  p.confidence = w.confidence;
  if (w.confidence >= tau) p.label = w.label;
  p.verses = verse_votes(verse_probs);
  return p;
}

PoemPrediction predict_poem(const std::string& poem_id, std::span<const Vec> verse_probs,
                            Strategy strategy, double tau, ConfidenceMode mode) {
  PoemPrediction p;
  switch (strategy) {
    case Strategy::thresholded:
      p = thresholded_vote(verse_probs, tau, mode);
      break;
    case Strategy::weighted: {
      const auto w = weighted_vote(verse_probs, mode);
      p.label = w.label;
      p.confidence = w.confidence;
      p.verses = verse_votes(verse_probs);
      break;
    }
    case Strategy::majority: {
      p.verses = verse_votes(verse_probs);
      const auto label = majority_vote(p.verses);
      std::size_t n = 0;
      for (const auto& v : p.verses) n += v.label == label;
      p.label = label;
      p.confidence = static_cast<double>(n) / static_cast<double>(p.verses.size());
      break;
    }
  }
  p.poem_id = poem_id;
  p.strategy = strategy;
  return p;
}

std::vector<SweepRow> sweep_thresholds(const std::vector<std::vector<Vec>>& poem_probs,
                                       std::span<const std::size_t> labels,
                                       std::span<const double> taus, ConfidenceMode mode) {
  if (poem_probs.size() != labels.size())
    throw InputError("sweep: predictions and labels differ in length");
  if (!std::is_sorted(taus.begin(), taus.end()))
    throw InputError("sweep: thresholds must be sorted ascending");
  std::vector<WeightedVote> votes;
  votes.reserve(poem_probs.size());
  for (const auto& p : poem_probs) votes.push_back(weighted_vote(p, mode));

  std::vector<SweepRow> rows;
  for (double tau : taus) {
    SweepRow r;
    r.threshold = tau;
    r.total = votes.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < votes.size(); ++i) {
      if (votes[i].confidence < tau) continue;
      ++r.covered;
      correct += votes[i].label == labels[i];
    }
    r.coverage = r.total ? static_cast<double>(r.covered) / static_cast<double>(r.total) : 0.0;
    if (r.covered) r.accuracy = static_cast<double>(correct) / static_cast<double>(r.covered);
    rows.push_back(r);
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os.precision(10);
  os << "threshold,accuracy,coverage,covered,total\n";
  for (const auto& r : rows) {
    os << r.threshold << ',';
    if (r.accuracy)
      os << *r.accuracy;
    else
      os << "NA";
    os << ',' << r.coverage << ',' << r.covered << ',' << r.total << '\n';
  }
  return os.str();
}

std::string poem_predictions_csv(std::span<const PoemPrediction> preds,
                                 const std::vector<std::string>& label_names) {
  std::ostringstream os;
  os.precision(10);
  os << "poem_id,strategy,label,confidence,abstained\n";
  for (const auto& p : preds) {
    os << p.poem_id << ',' << to_string(p.strategy) << ',';
    if (p.label)
      os << (*p.label < label_names.size() ? label_names[*p.label] : std::to_string(*p.label));
    else
      os << "ABSTAIN";
    os << ',' << p.confidence << ',' << (p.abstained() ? "true" : "false") << '\n';
  }
  return os.str();
}

}  // namespace beyt
