#include <gtest/gtest.h>

#include <random>

#include "beyt/error.hpp"
#include "beyt/metrics.hpp"

using namespace beyt;

using Labels = std::vector<std::size_t>;

TEST(Report, PerfectPredictions) {
  const Labels y{0, 1, 2, 1};
  const auto r = classification_report(y, y, 3);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 1.0);
}

TEST(Report, AllPredictedAsFirstClass) {
  const auto r = classification_report(Labels{0, 0, 0, 0}, Labels{0, 0, 1, 1}, 2);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class[0].precision, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class[0].recall, 1.0);
  EXPECT_NEAR(r.per_class[0].f1, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(r.per_class[1].precision, 0.0);
  EXPECT_EQ(r.per_class[1].recall, 0.0);
  EXPECT_EQ(r.per_class[1].f1, 0.0);
  EXPECT_TRUE(r.per_class[1].zero_division);
  EXPECT_NEAR(r.macro_f1, 1.0 / 3.0, 1e-15);
}

TEST(Report, ZeroSupportRowCountsInMacroMean) {
  const auto r = classification_report(Labels{0, 1, 1}, Labels{0, 1, 0}, 3);
  EXPECT_EQ(r.per_class[2].support, 0u);
  EXPECT_EQ(r.per_class[2].f1, 0.0);
  // Class 0: P 1, R 1/2, F1 2/3. Class 1: P 1/2, R 1, F1 2/3. Class 2: 0.
  EXPECT_NEAR(r.macro_precision, (1.0 + 0.5) / 3.0, 1e-15);
  EXPECT_NEAR(r.macro_recall, (0.5 + 1.0) / 3.0, 1e-15);
  EXPECT_NEAR(r.macro_f1, (4.0 / 3.0) / 3.0, 1e-15);
  const auto text = r.to_text({"a", "b", "c"});
  EXPECT_NE(text.find("F1-Score"), std::string::npos);
  EXPECT_NE(text.find("0.00"), std::string::npos);
  EXPECT_EQ(r.to_json({"a", "b", "c"}).at("per_class").size(), 3u);
}

TEST(Confusion, Shapes) {
  const Labels y{0, 1, 0};
  EXPECT_EQ(confusion_matrix(y, y, 2), (ConfusionMatrix{{2, 0}, {0, 1}}));
  EXPECT_EQ(confusion_matrix(Labels{1, 0, 1}, y, 2), (ConfusionMatrix{{0, 2}, {1, 0}}));
  EXPECT_THROW(confusion_matrix(Labels{0}, y, 2), InputError);
  EXPECT_THROW(confusion_matrix(Labels{}, Labels{}, 2), InputError);
  EXPECT_THROW(confusion_matrix(Labels{3}, Labels{0}, 2), InputError);
}

TEST(Confusion, RowSumsAreSupports) {
  std::mt19937 gen(8);
  Labels p, t;
  for (int i = 0; i < 500; ++i) {
    p.push_back(gen() % 5);
    t.push_back(gen() % 5);
  }
  const auto m = confusion_matrix(p, t, 5);
  const auto r = classification_report(p, t, 5);
  for (std::size_t c = 0; c < 5; ++c) {
    std::size_t support = 0, row = 0;
    for (auto y : t) support += y == c;
    for (auto n : m[c]) row += n;
    EXPECT_EQ(row, support);
    EXPECT_EQ(r.per_class[c].support, support);
  }
}
