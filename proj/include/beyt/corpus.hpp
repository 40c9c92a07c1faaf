#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace beyt {

enum class AttributionStatus { confirmed, contested, anonymous, ambiguous };

std::string to_string(AttributionStatus s);
std::optional<AttributionStatus> parse_status(const std::string& s);

// One beyt. hemistich_2 is empty for irregular single-hemistich lines.
struct Verse {
  std::string hemistich_1;
  std::string hemistich_2;

  bool operator==(const Verse&) const = default;
};

struct PoemRecord {
  std::string poem_id;
  std::string poet;
  std::string title;
  std::string form;
  std::string meter;
  AttributionStatus status = AttributionStatus::confirmed;
  std::vector<Verse> verses;

  bool operator==(const PoemRecord&) const = default;
};

// Dense, sorted label encoding: label i is the i-th distinct value in
// lexicographic order.
class LabelIndex {
 public:
  LabelIndex() = default;
  explicit LabelIndex(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  std::optional<std::size_t> find(const std::string& label) const;
  std::size_t at(const std::string& label) const;  // throws InputError
  const std::string& label(std::size_t id) const { return labels_.at(id); }
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const LabelIndex& o) const { return labels_ == o.labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> ids_;
};

class Corpus {
 public:
  Corpus() = default;
  // Validates invariants (unique ids, non-empty verses) and builds indices.
  explicit Corpus(std::vector<PoemRecord> records);

  const std::vector<PoemRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::size_t verse_count() const;

  const LabelIndex& poet_index() const { return poet_index_; }
  const LabelIndex& form_index() const { return form_index_; }
  const LabelIndex& meter_index() const { return meter_index_; }

  const PoemRecord* find(const std::string& poem_id) const;

  bool operator==(const Corpus& o) const { return records_ == o.records_; }

 private:
  std::vector<PoemRecord> records_;
  std::map<std::string, std::size_t> by_id_;
  LabelIndex poet_index_;
  LabelIndex form_index_;
  LabelIndex meter_index_;
};

// Line-delimited JSON objects with keys poem_id, poet, title, form, meter,
// status, verses. Errors name the 1-based line number and the field.
Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);

// With `labelled` off, poet and status may be omitted (inference input).
PoemRecord parse_record(const std::string& line, std::size_t line_no, bool labelled = true);
std::string record_to_json_line(const PoemRecord& r);
void write_corpus(const Corpus& c, std::ostream& out);
void save_corpus(const Corpus& c, const std::filesystem::path& path);

// Keeps confirmed records of poets with at least `min_verses_per_poet`
// confirmed verses. Throws InputError("no poets survive filtering").
Corpus filter_corpus(const Corpus& c, std::size_t min_verses_per_poet = 50);

struct Summary {
  double mean = 0, median = 0, max = 0, stddev = 0;
};
Summary summarize(std::vector<double> values);

struct StatsReport {
  std::size_t poets = 0, poems = 0, verses = 0;
  std::map<std::string, std::size_t> poems_per_poet;
  std::map<std::string, std::size_t> verses_per_poet;
  Summary verses_per_poem;
  std::map<std::string, std::size_t> form_distribution;   // poems per form
  std::map<std::string, std::size_t> meter_distribution;  // poems per meter
  std::map<std::string, std::size_t> meters_per_poet;     // distinct meters

  nlohmann::json to_json() const;
  std::string to_text() const;
};

StatsReport corpus_stats(const Corpus& c);

}  // namespace beyt
