#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beyt/corpus.hpp"

namespace beyt {

enum class SplitName { train = 0, validation = 1, test = 2 };

std::string to_string(SplitName s);
SplitName parse_split(const std::string& s);

using SplitRatios = std::array<double, 3>;

struct SplitEntry {
  std::string poem_id;
  SplitName split;
  std::string poet;
};

struct SplitAssignment {
  std::vector<SplitEntry> entries;  // corpus order
  SplitRatios ratios{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
  std::map<std::string, std::array<std::size_t, 3>> per_poet;  // poem counts per split
  std::vector<std::string> warnings;

  std::vector<std::string> ids_in(SplitName s) const;
  std::string to_csv() const;
  nlohmann::json sidecar() const;
  static SplitAssignment from_csv(const std::string& csv, const nlohmann::json& sidecar);
};

// Throws InputError unless all ratios are positive and sum to 1 (within 1e-9).
void validate_ratios(const SplitRatios& r);

// Largest-remainder integer split of n items. Ties go to the earlier split.
std::array<std::size_t, 3> largest_remainder(std::size_t n, const SplitRatios& r);

// Per poet: shuffle poems with a seeded generator, then cut by the
// largest-remainder counts. Poets with >= 3 poems get at least one poem in
// every split; smaller poets fill train, then validation, then test, and a
// warning is recorded.
SplitAssignment stratified_poem_split(const Corpus& c, const SplitRatios& ratios = {0.8, 0.1, 0.1},
                                      std::uint64_t seed = 0);

struct LeakageReport {
  std::size_t poems = 0;
  std::size_t violations = 0;
  std::map<std::string, std::array<std::size_t, 3>> coverage;  // per poet
};

// Throws InputError listing offending poem ids when a poem is assigned to
// more than one split, is missing, or is unknown to the corpus.
LeakageReport verify_no_leakage(const SplitAssignment& a, const Corpus& c);

void save_split(const SplitAssignment& a, const std::filesystem::path& csv_path,
                const std::filesystem::path& sidecar_path);
SplitAssignment load_split(const std::filesystem::path& csv_path,
                           const std::filesystem::path& sidecar_path);

}  // namespace beyt
