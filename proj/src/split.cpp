#include "beyt/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "beyt/error.hpp"
#include "beyt/rng.hpp"

namespace beyt {

using nlohmann::json;

std::string to_string(SplitName s) {
  switch (s) {
    case SplitName::validation: return "validation";
    case SplitName::test: return "test";
    case SplitName::train: break;
  }
  return "train";
}

SplitName parse_split(const std::string& s) {
  if (s == "train") return SplitName::train;
  if (s == "validation") return SplitName::validation;
  if (s == "test") return SplitName::test;
  throw InputError("unknown split '" + s + "'");
}

void validate_ratios(const SplitRatios& r) {
  for (double x : r)
    if (!(x > 0)) throw InputError("split ratios must be positive");
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw InputError("split ratios must sum to 1");
}

std::array<std::size_t, 3> largest_remainder(std::size_t n, const SplitRatios& r) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = static_cast<double>(n) * r[i];
    counts[i] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    frac[i] = quota - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  while (assigned > n) {
    // Only reachable through the epsilon above; take from the largest split.
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

std::vector<std::string> SplitAssignment::ids_in(SplitName s) const {
  std::vector<std::string> ids;
  for (const auto& e : entries)
    if (e.split == s) ids.push_back(e.poem_id);
  return ids;
}

SplitAssignment stratified_poem_split(const Corpus& c, const SplitRatios& ratios,
                                      std::uint64_t seed) {
  validate_ratios(ratios);
  std::map<std::string, std::vector<std::size_t>> by_poet;
  for (std::size_t i = 0; i < c.size(); ++i) by_poet[c.records()[i].poet].push_back(i);

  SplitAssignment a;
  a.ratios = ratios;
  a.seed = seed;
  std::vector<SplitName> split_of(c.size(), SplitName::train);
  Rng rng(seed);
  for (auto& [poet, poems] : by_poet) {
    rng.shuffle(poems.begin(), poems.end());
    const std::size_t n = poems.size();
    std::array<std::size_t, 3> counts{};
    if (n < 3) {
      for (std::size_t k = 0; k < n; ++k) counts[k] = 1;
      a.warnings.push_back("poet '" + poet + "' has only " + std::to_string(n) +
                           " poem(s); validation/test coverage incomplete");
    } else {
      counts = largest_remainder(n, ratios);
      for (std::size_t s = 0; s < 3; ++s)
        while (counts[s] == 0) {
          ++counts[s];
          --*std::max_element(counts.begin(), counts.end());
        }
    }
    std::size_t at = 0;
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t k = 0; k < counts[s]; ++k) split_of[poems[at++]] = static_cast<SplitName>(s);
    a.per_poet[poet] = counts;
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& r = c.records()[i];
    a.entries.push_back({r.poem_id, split_of[i], r.poet});
  }
  return a;
}

LeakageReport verify_no_leakage(const SplitAssignment& a, const Corpus& c) {
  std::map<std::string, std::set<SplitName>> seen;
  for (const auto& e : a.entries) seen[e.poem_id].insert(e.split);

  std::set<std::string> offending;
  std::map<std::string, std::size_t> occurrences;
  for (const auto& e : a.entries) ++occurrences[e.poem_id];
  for (const auto& [id, n] : occurrences)
    if (n != 1 || seen[id].size() != 1 || !c.find(id)) offending.insert(id);
  for (const auto& r : c.records())
    if (!occurrences.count(r.poem_id)) offending.insert(r.poem_id);

  if (!offending.empty()) {
    std::string msg = "split leakage: " + std::to_string(offending.size()) + " offending poem(s):";
    for (const auto& id : offending) msg += " " + id;
    throw InputError(msg);
  }

  LeakageReport rep;
  rep.poems = a.entries.size();
  for (const auto& e : a.entries) {
    const auto* r = c.find(e.poem_id);
    ++rep.coverage[r->poet][static_cast<std::size_t>(e.split)];
  }
  return rep;
}

std::string SplitAssignment::to_csv() const {
  std::ostringstream os;
  os << "poem_id,split,poet\n";
  for (const auto& e : entries) os << e.poem_id << ',' << to_string(e.split) << ',' << e.poet << '\n';
  return os.str();
}

json SplitAssignment::sidecar() const {
  json counts = json::object();
  for (const auto& [poet, c] : per_poet) counts[poet] = c;
  return {{"seed", seed}, {"ratios", ratios}, {"per_poet", counts}, {"warnings", warnings}};
}

SplitAssignment SplitAssignment::from_csv(const std::string& csv, const json& sidecar) {
  SplitAssignment a;
  a.seed = sidecar.value("seed", std::uint64_t{0});
  if (sidecar.contains("ratios")) a.ratios = sidecar.at("ratios").get<SplitRatios>();
  a.warnings = sidecar.value("warnings", std::vector<std::string>{});
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line) || line != "poem_id,split,poet")
    throw InputError("split CSV: missing header");
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw InputError("split CSV: malformed line " + std::to_string(line_no));
    SplitEntry e{line.substr(0, c1), parse_split(line.substr(c1 + 1, c2 - c1 - 1)),
                 line.substr(c2 + 1)};
    ++a.per_poet[e.poet][static_cast<std::size_t>(e.split)];
    a.entries.push_back(std::move(e));
  }
  return a;
}

void save_split(const SplitAssignment& a, const std::filesystem::path& csv_path,
                const std::filesystem::path& sidecar_path) {
  std::ofstream csv(csv_path, std::ios::binary), side(sidecar_path, std::ios::binary);
  if (!csv || !side) throw InputError("cannot write split files");
  csv << a.to_csv();
  side << a.sidecar().dump(2) << '\n';
}

SplitAssignment load_split(const std::filesystem::path& csv_path,
                           const std::filesystem::path& sidecar_path) {
  std::ifstream csv(csv_path, std::ios::binary), side(sidecar_path, std::ios::binary);
  if (!csv) throw InputError("split not found: " + csv_path.string());
  if (!side) throw InputError("split sidecar not found: " + sidecar_path.string());
  std::ostringstream ss;
  ss << csv.rdbuf();
  json j;
  try {
    j = json::parse(side);
  } catch (const json::exception& e) {
    throw InputError(std::string("split sidecar: ") + e.what());
  }
  return SplitAssignment::from_csv(ss.str(), j);
}

}  // namespace beyt
