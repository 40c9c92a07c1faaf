#include "beyt/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "beyt/error.hpp"

namespace beyt {

using nlohmann::json;

std::string to_string(EvalLevel l) {
  switch (l) {
    case EvalLevel::poem_majority: return "poem_majority";
    case EvalLevel::poem_weighted: return "poem_weighted";
    case EvalLevel::poem_thresholded: return "poem_thresholded";
    case EvalLevel::verse: break;
  }
  return "verse";
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds,
                                 std::span<const std::size_t> truth, std::size_t classes) {
  if (preds.size() != truth.size())
    throw InputError("metrics: predictions and truth differ in length");
  if (preds.empty()) throw InputError("metrics: nothing to evaluate");
  ConfusionMatrix m(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= classes || truth[i] >= classes)
      throw InputError("metrics: label out of range");
    ++m[truth[i]][preds[i]];
  }
  return m;
}

EvalReport classification_report(std::span<const std::size_t> preds,
                                  std::span<const std::size_t> truth, std::size_t classes,
                                  EvalLevel level) {
  EvalReport r;
  r.level = level;
  r.confusion = confusion_matrix(preds, truth, classes);
  r.evaluated = preds.size();
  std::size_t diag = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    ClassRow row;
    const std::size_t tp = r.confusion[c][c];
    diag += tp;
    for (std::size_t k = 0; k < classes; ++k) {
      row.support += r.confusion[c][k];
      row.predicted += r.confusion[k][c];
    }
    if (row.predicted)
      row.precision = static_cast<double>(tp) / static_cast<double>(row.predicted);
    if (row.support) row.recall = static_cast<double>(tp) / static_cast<double>(row.support);
    row.zero_division = row.predicted == 0 || row.support == 0;
    if (row.precision + row.recall > 0)
      row.f1 = 2 * row.precision * row.recall / (row.precision + row.recall);
    r.macro_precision += row.precision;
    r.macro_recall += row.recall;
    r.macro_f1 += row.f1;
    r.per_class.push_back(row);
  }
  if (classes) {
    r.macro_precision /= static_cast<double>(classes);
    r.macro_recall /= static_cast<double>(classes);
    r.macro_f1 /= static_cast<double>(classes);
  }
  r.accuracy = static_cast<double>(diag) / static_cast<double>(r.evaluated);
  return r;
}

namespace {

std::string name_of(const std::vector<std::string>& names, std::size_t i) {
  return i < names.size() ? names[i] : std::to_string(i);
}

}  // namespace

json EvalReport::to_json(const std::vector<std::string>& names) const {
  json rows = json::array();
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& row = per_class[c];
    rows.push_back({{"class", name_of(names, c)},
                    {"precision", row.precision},
                    {"recall", row.recall},
                    {"f1", row.f1},
                    {"support", row.support},
                    {"zero_division", row.zero_division}});
  }
  json j = {{"level", to_string(level)},
            {"accuracy", accuracy},
            {"macro_precision", macro_precision},
            {"macro_recall", macro_recall},
            {"macro_f1", macro_f1},
            {"evaluated", evaluated},
            {"per_class", rows},
            {"confusion", confusion}};
  j["coverage"] = coverage ? json(*coverage) : json(nullptr);
  return j;
}

std::string EvalReport::to_text(const std::vector<std::string>& names) const {
  std::size_t width = 4;
  for (std::size_t c = 0; c < per_class.size(); ++c)
    width = std::max(width, name_of(names, c).size());
  const int w = static_cast<int>(width);
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(w) << "Poet" << std::right << std::setw(11) << "Precision"
     << std::setw(9) << "Recall" << std::setw(10) << "F1-Score" << std::setw(9) << "Support"
     << '\n';
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& row = per_class[c];
    os << std::left << std::setw(w) << name_of(names, c) << std::right << std::setw(11)
       << row.precision << std::setw(9) << row.recall << std::setw(10) << row.f1 << std::setw(9)
       << row.support << '\n';
  }
  os << std::left << std::setw(w) << "Macro avg" << std::right << std::setw(11) << macro_precision
     << std::setw(9) << macro_recall << std::setw(10) << macro_f1 << std::setw(9) << evaluated
     << '\n';
  os << "Accuracy: " << std::setprecision(4) << accuracy;
  if (coverage) os << "  Coverage: " << *coverage;
  os << "  (" << to_string(level) << ")\n";
  return os.str();
}

}  // namespace beyt
