#include <gtest/gtest.h>

#include <set>

#include "beyt/error.hpp"
#include "beyt/split.hpp"
#include "beyt/synthetic.hpp"
#include "support.hpp"

using namespace beyt;

namespace {

std::array<std::size_t, 3> counts_for(const SplitAssignment& a, const std::string& poet) {
  std::array<std::size_t, 3> n{};
  for (const auto& e : a.entries)
    if (e.poet == poet) ++n[static_cast<int>(e.split)];
  return n;
}

}  // namespace

TEST(LargestRemainder, Examples) {
  using A = std::array<std::size_t, 3>;
  EXPECT_EQ(largest_remainder(10, {0.8, 0.1, 0.1}), (A{8, 1, 1}));
  EXPECT_EQ(largest_remainder(100, {0.8, 0.1, 0.1}), (A{80, 10, 10}));
  // 5.6 / 0.7 / 0.7: both leftover poems go to the larger remainders.
  EXPECT_EQ(largest_remainder(7, {0.8, 0.1, 0.1}), (A{5, 1, 1}));
  EXPECT_EQ(largest_remainder(5, {0.8, 0.1, 0.1}), (A{4, 1, 0}));
  for (std::size_t n = 0; n < 200; ++n) {
    const auto c = largest_remainder(n, {0.7, 0.2, 0.1});
    EXPECT_EQ(c[0] + c[1] + c[2], n);
  }
}

TEST(Split, TenPoemPoet) {
  const auto a = stratified_poem_split(test::poets_with({10}), {0.8, 0.1, 0.1}, 1);
  EXPECT_EQ(counts_for(a, "poet0"), (std::array<std::size_t, 3>{8, 1, 1}));
  EXPECT_TRUE(a.warnings.empty());
}

TEST(Split, HundredPoemPoet) {
  const auto a = stratified_poem_split(test::poets_with({100}), {0.8, 0.1, 0.1}, 1);
  EXPECT_EQ(counts_for(a, "poet0"), (std::array<std::size_t, 3>{80, 10, 10}));
}

TEST(Split, SinglePoemPoetGoesToTrainWithWarning) {
  const auto a = stratified_poem_split(test::poets_with({10, 1}), {0.8, 0.1, 0.1}, 1);
  EXPECT_EQ(counts_for(a, "poet1"), (std::array<std::size_t, 3>{1, 0, 0}));
  ASSERT_EQ(a.warnings.size(), 1u);
  EXPECT_NE(a.warnings[0].find("poet1"), std::string::npos);
}

TEST(Split, SmallPoetsStillReachEverySplit) {
  const auto a = stratified_poem_split(test::poets_with({3, 5}), {0.8, 0.1, 0.1}, 4);
  EXPECT_EQ(counts_for(a, "poet0"), (std::array<std::size_t, 3>{1, 1, 1}));
  EXPECT_EQ(counts_for(a, "poet1"), (std::array<std::size_t, 3>{3, 1, 1}));
}

TEST(Split, SeedChangesMembershipNotCounts) {
  const auto c = test::poets_with({40, 30});
  const auto a = stratified_poem_split(c, {0.8, 0.1, 0.1}, 1);
  const auto b = stratified_poem_split(c, {0.8, 0.1, 0.1}, 2);
  EXPECT_EQ(a.per_poet, b.per_poet);
  EXPECT_NE(a.ids_in(SplitName::test), b.ids_in(SplitName::test));
  EXPECT_EQ(a.to_csv(), stratified_poem_split(c, {0.8, 0.1, 0.1}, 1).to_csv());
}

TEST(Split, RejectsBadRatios) {
  EXPECT_THROW(validate_ratios({0.8, 0.1, 0.2}), InputError);
  EXPECT_THROW(validate_ratios({1.0, 0.0, 0.0}), InputError);
  EXPECT_NO_THROW(validate_ratios({0.7, 0.2, 0.1}));
  EXPECT_THROW(stratified_poem_split(test::poets_with({10}), {0.5, 0.5, 0.5}, 0), InputError);
}

TEST(Leakage, ValidAssignmentPasses) {
  const auto c = test::poets_with({12, 9, 30});
  const auto r = verify_no_leakage(stratified_poem_split(c, {0.8, 0.1, 0.1}, 3), c);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.poems, 51u);
}

TEST(Leakage, DuplicatedPoemIsNamed) {
  const auto c = test::poets_with({10});
  auto a = stratified_poem_split(c, {0.8, 0.1, 0.1}, 3);
  auto dup = a.entries[0];
  dup.split = dup.split == SplitName::test ? SplitName::train : SplitName::test;
  a.entries.push_back(dup);
  try {
    verify_no_leakage(a, c);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(dup.poem_id), std::string::npos);
  }
}

TEST(Leakage, MissingAndUnknownPoems) {
  const auto c = test::poets_with({10});
  auto a = stratified_poem_split(c, {0.8, 0.1, 0.1}, 3);
  auto missing = a;
  missing.entries.pop_back();
  EXPECT_THROW(verify_no_leakage(missing, c), InputError);
  a.entries.push_back({"stranger", SplitName::train, "poet0"});
  EXPECT_THROW(verify_no_leakage(a, c), InputError);
}

TEST(Leakage, ManySeedsOnSyntheticCorpus) {
  const auto c = make_synthetic_corpus();
  ASSERT_EQ(c.size(), 1000u);
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    EXPECT_EQ(verify_no_leakage(stratified_poem_split(c, {0.8, 0.1, 0.1}, seed), c).violations, 0u);
}

TEST(SplitFile, RoundTrip) {
  const auto c = test::poets_with({10, 4});
  const auto a = stratified_poem_split(c, {0.8, 0.1, 0.1}, 9);
  test::TempDir dir;
  save_split(a, dir / "split.csv", dir / "split.json");
  const auto b = load_split(dir / "split.csv", dir / "split.json");
  EXPECT_EQ(b.to_csv(), a.to_csv());
  EXPECT_EQ(b.seed, 9u);
  EXPECT_EQ(b.per_poet, a.per_poet);
  EXPECT_EQ(a.to_csv().substr(0, 19), "poem_id,split,poet\n");
}
