#include "beyt/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "beyt/error.hpp"
#include "beyt/hash.hpp"
#include "beyt/utf8.hpp"

namespace beyt {

using nlohmann::json;

StylometricVector stylometric_features(const Verse& v, const NormalizationConfig& cfg) {
  const std::string first = normalize_text(v.hemistich_1, cfg);
  const std::string second = normalize_text(v.hemistich_2, cfg);
  const auto t1 = split_tokens(first);
  const auto t2 = split_tokens(second);
  const std::size_t n = t1.size() + t2.size();
  if (n == 0) throw InputError("empty verse");

  std::map<std::string, std::size_t> freq;
  std::size_t chars = 0;
  for (const auto* half : {&t1, &t2})
    for (const auto& t : *half) {
      ++freq[t];
      chars += utf8::length(t);
    }
  std::size_t hapax = 0;
  for (const auto& [_, c] : freq) hapax += c == 1;

  std::size_t punct = 0, non_space = 0;
  for (const auto* text : {&first, &second})
    for (char32_t c : utf8::decode(*text)) {
      if (utf8::is_space(c)) continue;
      ++non_space;
      punct += utf8::is_punctuation(c);
    }

  const double nd = static_cast<double>(n);
  StylometricVector s;
  s.word_count = nd;
  s.distinct_word_count = static_cast<double>(freq.size());
  s.avg_word_length = static_cast<double>(chars) / nd;
  s.hapax_ratio = static_cast<double>(hapax) / nd;
  s.mean_hemistich_length = nd / 2.0;
  s.punctuation_density =
      non_space == 0 ? 0.0 : static_cast<double>(punct) / static_cast<double>(non_space);
  s.symmetry_ratio = static_cast<double>(t1.size()) /
                     static_cast<double>(std::max<std::size_t>(1, t2.size()));
  return s;
}

Scaler::Scaler(std::vector<double> mean, std::vector<double> stddev,
               std::vector<std::size_t> constant_dims)
    : mean_(std::move(mean)), stddev_(std::move(stddev)), constant_dims_(std::move(constant_dims)) {
  if (mean_.size() != stddev_.size()) throw InputError("scaler: mean/stddev size mismatch");
  for (double s : stddev_)
    if (!(s > 0)) throw InputError("scaler: stddev entries must be positive");
}

Scaler Scaler::fit(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InputError("scaler: cannot fit on an empty set");
  const std::size_t d = rows.front().size();
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw InputError("scaler: ragged input");
    for (std::size_t k = 0; k < d; ++k) mean[k] += r[k];
  }
  const double n = static_cast<double>(rows.size());
  for (auto& m : mean) m /= n;
  for (const auto& r : rows)
    for (std::size_t k = 0; k < d; ++k) var[k] += (r[k] - mean[k]) * (r[k] - mean[k]);
  std::vector<double> sd(d);
  std::vector<std::size_t> constant;
  for (std::size_t k = 0; k < d; ++k) {
    sd[k] = std::sqrt(var[k] / n);
    if (!(sd[k] > 0)) {
      sd[k] = 1.0;
      constant.push_back(k);
    }
  }
  return Scaler(std::move(mean), std::move(sd), std::move(constant));
}

Scaler Scaler::fit(const std::vector<StylometricVector>& rows) {
  std::vector<std::vector<double>> raw;
  raw.reserve(rows.size());
  for (const auto& r : rows) {
    const auto a = r.values();
    raw.emplace_back(a.begin(), a.end());
  }
  return fit(raw);
}

std::vector<double> Scaler::transform(const std::vector<double>& v) const {
  if (v.size() != mean_.size()) throw InputError("scaler: dimension mismatch");
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = (v[k] - mean_[k]) / stddev_[k];
  return out;
}

Vec Scaler::transform(const StylometricVector& v) const {
  const auto a = v.values();
  const auto t = transform(std::vector<double>(a.begin(), a.end()));
  return Eigen::Map<const Vec>(t.data(), static_cast<Eigen::Index>(t.size()));
}

json Scaler::to_json() const {
  return {{"mean", mean_}, {"std", stddev_}, {"constant_dims", constant_dims_}};
}

Scaler Scaler::from_json(const json& j) {
  return Scaler(j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>(),
                j.value("constant_dims", std::vector<std::size_t>{}));
}

MeterClassMap::MeterClassMap(std::map<std::string, std::size_t> classes)
    : classes_(std::move(classes)) {
  for (const auto& [m, c] : classes_)
    if (c >= kMeterClasses) throw InputError("meter class out of range for '" + m + "'");
}

std::size_t MeterClassMap::class_of(const std::string& meter) const {
  auto it = classes_.find(meter);
  return it == classes_.end() ? kOtherMeterClass : it->second;
}

json MeterClassMap::to_json() const { return {{"classes", classes_}, {"num_classes", kMeterClasses}}; }

MeterClassMap MeterClassMap::from_json(const json& j) {
  if (j.value("num_classes", kMeterClasses) != kMeterClasses)
    throw InputError("meter map: unexpected class count");
  return MeterClassMap(j.at("classes").get<std::map<std::string, std::size_t>>());
}

std::string MeterClassMap::hash() const { return hash_hex(to_json().dump()); }

MeterClassMap build_meter_classes(const Corpus& c) {
  std::map<std::string, std::size_t> freq;
  for (const auto& r : c.records()) ++freq[r.meter];
  if (freq.empty()) throw InputError("corpus has no meters");
  std::vector<std::pair<std::string, std::size_t>> sorted(freq.begin(), freq.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<std::string, std::size_t> classes;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    classes[sorted[i].first] = std::min(i, kOtherMeterClass);
  return MeterClassMap(std::move(classes));
}

Vec one_hot_form(const PoemRecord& record, const LabelIndex& form_index) {
  Vec v = Vec::Zero(static_cast<Eigen::Index>(form_index.size() + 1));
  const auto id = form_index.find(record.form).value_or(form_index.size());
  v[static_cast<Eigen::Index>(id)] = 1.0;
  return v;
}

Vec one_hot_meter(const PoemRecord& record, const MeterClassMap& map) {
  Vec v = Vec::Zero(static_cast<Eigen::Index>(kMeterClasses));
  v[static_cast<Eigen::Index>(map.class_of(record.meter))] = 1.0;
  return v;
}

}  // namespace beyt
