#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beyt/corpus.hpp"
#include "beyt/normalize.hpp"
#include "beyt/tensor.hpp"

namespace beyt {

struct StylometricVector {
  double word_count = 0;
  double distinct_word_count = 0;
  double avg_word_length = 0;
  double hapax_ratio = 0;
  double mean_hemistich_length = 0;
  double punctuation_density = 0;
  double symmetry_ratio = 0;

  static constexpr std::size_t kDims = 7;
  std::array<double, kDims> values() const {
    return {word_count,            distinct_word_count, avg_word_length, hapax_ratio,
            mean_hemistich_length, punctuation_density, symmetry_ratio};
  }
  bool operator==(const StylometricVector&) const = default;
};

// Throws InputError("empty verse") when both hemistichs normalize to nothing.
StylometricVector stylometric_features(const Verse& v, const NormalizationConfig& cfg = {});

// Per-dimension z-scoring fitted on the training split.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<double> mean, std::vector<double> stddev,
         std::vector<std::size_t> constant_dims);

  static Scaler fit(const std::vector<std::vector<double>>& rows);
  static Scaler fit(const std::vector<StylometricVector>& rows);

  std::vector<double> transform(const std::vector<double>& v) const;
  Vec transform(const StylometricVector& v) const;

  std::size_t dims() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }
  // Dimensions with zero variance over the fit set; their stddev is 1.
  const std::vector<std::size_t>& constant_dims() const { return constant_dims_; }

  nlohmann::json to_json() const;
  static Scaler from_json(const nlohmann::json& j);
  bool operator==(const Scaler&) const = default;

 private:
  std::vector<double> mean_;
  std::vector<double> stddev_;
  std::vector<std::size_t> constant_dims_;
};

inline constexpr std::size_t kMeterClasses = 15;
inline constexpr std::size_t kOtherMeterClass = kMeterClasses - 1;

// Fourteen most frequent meters (by poem count) get classes 0..13; every
// other meter, including ones unseen at build time, falls into class 14.
class MeterClassMap {
 public:
  MeterClassMap() = default;
  explicit MeterClassMap(std::map<std::string, std::size_t> classes);

  std::size_t class_of(const std::string& meter) const;
  const std::map<std::string, std::size_t>& classes() const { return classes_; }

  nlohmann::json to_json() const;
  static MeterClassMap from_json(const nlohmann::json& j);
  std::string hash() const;
  bool operator==(const MeterClassMap&) const = default;

 private:
  std::map<std::string, std::size_t> classes_;
};

MeterClassMap build_meter_classes(const Corpus& c);

// Length form_index.size() + 1; the last slot is the unknown-form slot.
Vec one_hot_form(const PoemRecord& record, const LabelIndex& form_index);
// Length 15.
Vec one_hot_meter(const PoemRecord& record, const MeterClassMap& map);

}  // namespace beyt
