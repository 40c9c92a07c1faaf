#include "beyt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "beyt/error.hpp"

namespace beyt {

using nlohmann::json;

std::string to_string(AttributionStatus s) {
  switch (s) {
    case AttributionStatus::confirmed: return "confirmed";
    case AttributionStatus::contested: return "contested";
    case AttributionStatus::anonymous: return "anonymous";
    case AttributionStatus::ambiguous: return "ambiguous";
  }
  return "confirmed";
}

std::optional<AttributionStatus> parse_status(const std::string& s) {
  if (s == "confirmed") return AttributionStatus::confirmed;
  if (s == "contested") return AttributionStatus::contested;
  if (s == "anonymous") return AttributionStatus::anonymous;
  if (s == "ambiguous") return AttributionStatus::ambiguous;
  return std::nullopt;
}

LabelIndex::LabelIndex(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  labels_ = std::move(labels);
  for (std::size_t i = 0; i < labels_.size(); ++i) ids_.emplace(labels_[i], i);
}

std::optional<std::size_t> LabelIndex::find(const std::string& label) const {
  auto it = ids_.find(label);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelIndex::at(const std::string& label) const {
  auto id = find(label);
  if (!id) throw InputError("unknown label '" + label + "'");
  return *id;
}

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

Corpus::Corpus(std::vector<PoemRecord> records) : records_(std::move(records)) {
  std::vector<std::string> poets, forms, meters;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.poem_id.empty()) throw InputError("record " + std::to_string(i) + ": empty poem_id");
    if (!by_id_.emplace(r.poem_id, i).second)
      throw InputError("duplicate poem_id '" + r.poem_id + "'");
    if (r.verses.empty()) throw InputError("poem '" + r.poem_id + "' has no verses");
    for (const auto& v : r.verses)
      if (blank(v.hemistich_1))
        throw InputError("poem '" + r.poem_id + "' has an empty first hemistich");
    poets.push_back(r.poet);
    forms.push_back(r.form);
    meters.push_back(r.meter);
  }
  poet_index_ = LabelIndex(std::move(poets));
  form_index_ = LabelIndex(std::move(forms));
  meter_index_ = LabelIndex(std::move(meters));
}

std::size_t Corpus::verse_count() const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.verses.size();
  return n;
}

const PoemRecord* Corpus::find(const std::string& poem_id) const {
  auto it = by_id_.find(poem_id);
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

PoemRecord parse_record(const std::string& line, std::size_t line_no, bool labelled) {
  const std::string where = "line " + std::to_string(line_no);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InputError(where + ": malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw InputError(where + ": record is not an object");

  auto str_field = [&](const char* key, bool required) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
      if (required) throw InputError(where + ": missing field '" + key + "'");
      return {};
    }
    if (!it->is_string()) throw InputError(where + ": field '" + key + "' must be a string");
    return it->get<std::string>();
  };

  PoemRecord r;
  r.poem_id = str_field("poem_id", true);
  r.poet = str_field("poet", labelled);
  r.title = str_field("title", false);
  r.form = str_field("form", true);
  r.meter = str_field("meter", true);
  auto status = str_field("status", labelled);
  if (status.empty() && !labelled) status = "confirmed";
  auto parsed = parse_status(status);
  if (!parsed) throw InputError(where + ": field 'status' has unknown value '" + status + "'");
  r.status = *parsed;

  auto vit = j.find("verses");
  if (vit == j.end()) throw InputError(where + ": missing field 'verses'");
  if (!vit->is_array() || vit->empty())
    throw InputError(where + ": field 'verses' must be a non-empty list");
  for (const auto& v : *vit) {
    if (!v.is_array() || v.empty() || v.size() > 2 || !v[0].is_string() ||
        (v.size() == 2 && !v[1].is_string()))
      throw InputError(where + ": field 'verses' entries must be [hemistich_1, hemistich_2]");
    Verse verse{v[0].get<std::string>(), v.size() == 2 ? v[1].get<std::string>() : ""};
    if (blank(verse.hemistich_1))
      throw InputError(where + ": field 'verses' has an empty first hemistich");
    r.verses.push_back(std::move(verse));
  }
  return r;
}

Corpus parse_corpus(std::istream& in) {
  std::vector<PoemRecord> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    auto r = parse_record(line, line_no);
    if (!seen.insert(r.poem_id).second)
      throw InputError("line " + std::to_string(line_no) + ": duplicate poem_id '" +
                       r.poem_id + "'");
    records.push_back(std::move(r));
  }
  if (records.empty()) throw InputError("empty corpus");
  return Corpus(std::move(records));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("corpus not found: " + path.string());
  return parse_corpus(in);
}

std::string record_to_json_line(const PoemRecord& r) {
  json verses = json::array();
  for (const auto& v : r.verses) verses.push_back({v.hemistich_1, v.hemistich_2});
  json j = {{"poem_id", r.poem_id}, {"poet", r.poet},   {"title", r.title},
            {"form", r.form},       {"meter", r.meter}, {"status", to_string(r.status)},
            {"verses", verses}};
  return j.dump();
}

void write_corpus(const Corpus& c, std::ostream& out) {
  for (const auto& r : c.records()) out << record_to_json_line(r) << '\n';
}

void save_corpus(const Corpus& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_corpus(c, out);
}

Corpus filter_corpus(const Corpus& c, std::size_t min_verses_per_poet) {
  std::map<std::string, std::size_t> verses;
  for (const auto& r : c.records())
    if (r.status == AttributionStatus::confirmed) verses[r.poet] += r.verses.size();

  std::vector<PoemRecord> kept;
  for (const auto& r : c.records()) {
    if (r.status != AttributionStatus::confirmed) continue;
    if (verses[r.poet] < min_verses_per_poet) continue;
    kept.push_back(r);
  }
  if (kept.empty()) throw InputError("no poets survive filtering");
  return Corpus(std::move(kept));
}

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / n);
  std::sort(values.begin(), values.end());
  const auto m = values.size() / 2;
  s.median = values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
  s.max = values.back();
  return s;
}

StatsReport corpus_stats(const Corpus& c) {
  StatsReport rep;
  rep.poets = c.poet_index().size();
  rep.poems = c.size();
  rep.verses = c.verse_count();
  std::map<std::string, std::set<std::string>> meters_of;
  std::vector<double> lengths;
  for (const auto& r : c.records()) {
    ++rep.poems_per_poet[r.poet];
    rep.verses_per_poet[r.poet] += r.verses.size();
    ++rep.form_distribution[r.form];
    ++rep.meter_distribution[r.meter];
    meters_of[r.poet].insert(r.meter);
    lengths.push_back(static_cast<double>(r.verses.size()));
  }
  for (const auto& [poet, set] : meters_of) rep.meters_per_poet[poet] = set.size();
  rep.verses_per_poem = summarize(std::move(lengths));
  return rep;
}

json StatsReport::to_json() const {
  return {
      {"poets", poets},
      {"poems", poems},
      {"verses", verses},
      {"poems_per_poet", poems_per_poet},
      {"verses_per_poet", verses_per_poet},
      {"verses_per_poem",
       {{"mean", verses_per_poem.mean},
        {"median", verses_per_poem.median},
        {"max", verses_per_poem.max},
        {"std", verses_per_poem.stddev}}},
      {"form_distribution", form_distribution},
      {"meter_distribution", meter_distribution},
      {"meters_per_poet", meters_per_poet},
  };
}

namespace {

void table(std::ostream& os, const std::string& title, const std::string& key_header,
           const std::string& value_header,
           const std::map<std::string, std::size_t>& rows) {
  // Descending by count, then by key.
  std::vector<std::pair<std::string, std::size_t>> sorted(rows.begin(), rows.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::size_t width = key_header.size();
  for (const auto& [k, _] : sorted) width = std::max(width, k.size());
  os << '\n' << title << '\n';
  os << std::left << std::setw(static_cast<int>(width)) << key_header << "  "
     << std::right << std::setw(8) << value_header << '\n';
  for (const auto& [k, v] : sorted)
    os << std::left << std::setw(static_cast<int>(width)) << k << "  " << std::right
       << std::setw(8) << v << '\n';
}

}  // namespace

std::string StatsReport::to_text() const {
  std::ostringstream os;
  os << "Total poets:  " << poets << '\n'
     << "Total poems:  " << poems << '\n'
     << "Total verses: " << verses << '\n'
     << std::fixed << std::setprecision(2) << "Verses per poem: mean " << verses_per_poem.mean
     << ", median " << verses_per_poem.median << ", max " << verses_per_poem.max
     << ", std " << verses_per_poem.stddev << '\n';
  table(os, "Distribution of poems per poet", "Poet", "Poems", poems_per_poet);
  table(os, "Distribution of poetic forms", "Form", "Poems", form_distribution);
  table(os, "Distribution of meters", "Meter", "Poems", meter_distribution);
  table(os, "Meter diversity per poet", "Poet", "Meters", meters_per_poet);
  return os.str();
}

}  // namespace beyt
