#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace beyt {

enum class EvalLevel { verse, poem_majority, poem_weighted, poem_thresholded };
std::string to_string(EvalLevel l);

struct ClassRow {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
  std::size_t predicted = 0;
  // precision or recall had a zero denominator and was reported as 0
  bool zero_division = false;
};

using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

struct EvalReport {
  EvalLevel level = EvalLevel::verse;
  double accuracy = 0;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  std::vector<ClassRow> per_class;
  std::optional<double> coverage;  // thresholded level only
  std::size_t evaluated = 0;
  ConfusionMatrix confusion;

  nlohmann::json to_json(const std::vector<std::string>& class_names = {}) const;
  // Aligned columns: Poet, Precision, Recall, F1-Score, Support.
  std::string to_text(const std::vector<std::string>& class_names = {}) const;
};

// Entry (i, j) counts truth i predicted as j. Throws InputError on a length
// mismatch, empty input or labels outside 0..classes-1.
ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds,
                                 std::span<const std::size_t> truth, std::size_t classes);

// Macro averages include all `classes` rows, zero rows included.
EvalReport classification_report(std::span<const std::size_t> preds,
                                  std::span<const std::size_t> truth, std::size_t classes,
                                  EvalLevel level = EvalLevel::verse);

}  // namespace beyt
