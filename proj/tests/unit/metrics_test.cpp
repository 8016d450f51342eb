#include <algorithm>

#include <gtest/gtest.h>

#include "cola/metrics.hpp"
#include "expect_error.hpp"
#include "test_support.hpp"

namespace cola {
namespace {

using testing::expect_error;
using testing::Gen;

TEST(Evaluate, AllCorrect) {
  const std::vector<std::size_t> truth{0, 0, 0, 1, 2, 2};
  const auto r = evaluate(truth, truth, 3);
  EXPECT_EQ(r.per_class_accuracy, (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_DOUBLE_EQ(r.average, 1.0);
  EXPECT_DOUBLE_EQ(r.overall, 1.0);
}

TEST(Evaluate, AbsentClassExcludedFromAverage) {
  const std::vector<std::size_t> truth{0, 0, 2, 2};
  const std::vector<std::size_t> pred{0, 1, 2, 2};
  const auto r = evaluate(pred, truth, 3);
  EXPECT_EQ(r.n_per_class, (std::vector<std::size_t>{2, 0, 2}));
  EXPECT_DOUBLE_EQ(r.average, (0.5 + 1.0) / 2.0);
  EXPECT_DOUBLE_EQ(r.overall, 0.75);
}

TEST(Evaluate, MatchesCountingOracle) {
  Gen gen(1);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t c = 2 + gen() % 6, n = 1 + gen() % 60;
    const auto truth = testing::random_labels(n, c, gen);
    const auto pred = testing::random_labels(n, c, gen);
    const auto r = evaluate(pred, truth, c);
    double sum = 0.0;
    int present = 0;
    for (std::size_t k = 0; k < c; ++k) {
      int hit = 0, tot = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (truth[i] != k) continue;
        ++tot;
        hit += pred[i] == k;
      }
      ASSERT_EQ(r.n_per_class[k], static_cast<std::size_t>(tot));
      if (tot > 0) {
        ASSERT_DOUBLE_EQ(r.per_class_accuracy[k], static_cast<double>(hit) / tot);
        sum += static_cast<double>(hit) / tot;
        ++present;
      }
    }
    ASSERT_NEAR(r.average, sum / present, 1e-15);
  }
}

TEST(Evaluate, LengthMismatch) {
  expect_error(ErrorKind::kShape, [] { (void)evaluate(std::vector<std::size_t>{0}, std::vector<std::size_t>{}, 2); });
}

TEST(HarmonicMean, ReferenceArithmetic) {
  EXPECT_NEAR(harmonic_mean(96.2, 92.6), 94.4, 0.05);
  EXPECT_DOUBLE_EQ(harmonic_mean(1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(harmonic_mean(0.0, 0.0), 0.0);
}

TEST(HarmonicMean, Properties) {
  Gen gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double a = u(gen), b = u(gen);
    ASSERT_NEAR(harmonic_mean(a, a), a, 1e-15);
    ASSERT_EQ(harmonic_mean(a, b), harmonic_mean(b, a));
    ASSERT_LE(harmonic_mean(a, b), (a + b) / 2.0 + 1e-15);
  }
}

TEST(Split, FirstHalfAndParity) {
  const auto first = base_to_new_split(12, SplitScheme::kFirstHalf);
  EXPECT_EQ(first.base, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(first.novel, (std::vector<std::size_t>{6, 7, 8, 9, 10, 11}));
  const auto parity = base_to_new_split(12, SplitScheme::kParity);
  EXPECT_EQ(parity.base, (std::vector<std::size_t>{0, 2, 4, 6, 8, 10}));
  EXPECT_EQ(parity.novel, (std::vector<std::size_t>{1, 3, 5, 7, 9, 11}));
  EXPECT_EQ(base_to_new_split(5, SplitScheme::kFirstHalf).base.size(), 3u);
}

TEST(Split, AccuracyRankedTakesMostAccurateClasses) {
  EvalResult zs;
  zs.per_class_accuracy = {0.2, 0.9, 0.5, 0.9};
  const auto s = base_to_new_split(4, SplitScheme::kAccuracyRanked, &zs);
  EXPECT_EQ(s.base, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(s.novel, (std::vector<std::size_t>{0, 2}));
  expect_error(ErrorKind::kConfig, [] { (void)base_to_new_split(4, SplitScheme::kAccuracyRanked); });
}

TEST(Split, SwappedIsExactComplement) {
  EvalResult zs;
  Gen gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t c = 2; c <= 13; ++c) {
    zs.per_class_accuracy.resize(c);
    for (auto& a : zs.per_class_accuracy) a = u(gen);
    const std::pair<SplitScheme, SplitScheme> pairs[] = {
        {SplitScheme::kFirstHalf, SplitScheme::kSwappedFirstHalf},
        {SplitScheme::kParity, SplitScheme::kSwappedParity},
        {SplitScheme::kAccuracyRanked, SplitScheme::kSwappedAccuracyRanked}};
    for (auto [plain, swapped] : pairs) {
      const auto a = base_to_new_split(c, plain, &zs);
      const auto b = base_to_new_split(c, swapped, &zs);
      EXPECT_EQ(a.base, b.novel);
      EXPECT_EQ(a.novel, b.base);
      std::vector<std::size_t> all = a.base;
      all.insert(all.end(), a.novel.begin(), a.novel.end());
      std::sort(all.begin(), all.end());
      ASSERT_EQ(all.size(), c);
      for (std::size_t k = 0; k < c; ++k) ASSERT_EQ(all[k], k);
    }
  }
}

TEST(Split, Errors) {
  expect_error(ErrorKind::kParameter, [] { (void)base_to_new_split(1, SplitScheme::kFirstHalf); });
  expect_error(ErrorKind::kConfig, [] { (void)parse_split_scheme("halves"); });
  EXPECT_EQ(parse_split_scheme("swapped-parity"), SplitScheme::kSwappedParity);
  EXPECT_EQ(split_scheme_name(SplitScheme::kAccuracyRanked), "accuracy-ranked");
}

}  // namespace
}  // namespace cola
