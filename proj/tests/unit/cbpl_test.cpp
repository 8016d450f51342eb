#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "cola/cbpl.hpp"
#include "expect_error.hpp"
#include "test_support.hpp"

namespace cola {
namespace {

using testing::expect_error;
using testing::Gen;
using testing::synthetic_predictions;

TEST(RetentionCount, CeilingWithFloorOfOne) {
  EXPECT_EQ(retention_count(0.5, 3), 2u);
  EXPECT_EQ(retention_count(0.75, 4), 3u);
  EXPECT_EQ(retention_count(0.2, 1), 1u);
  EXPECT_EQ(retention_count(0.2, 10), 2u);  // 0.2 * 10 is 2.0000000000000004 in binary
  EXPECT_EQ(retention_count(1.0, 7), 7u);
  EXPECT_EQ(retention_count(0.5, 0), 0u);
}

TEST(Cbpl, WorkedExample) {
  // class 0: 0.95, 0.80, 0.60; class 1: 0.90, 0.70, 0.50
  const auto preds = synthetic_predictions({0, 1, 0, 1, 0, 1}, {0.95, 0.90, 0.80, 0.70, 0.60, 0.50}, 2);
  const auto ds = cbpl_filter(preds, {0.75, 0.5});
  EXPECT_DOUBLE_EQ(*ds.threshold_set.thresholds[0], 0.75);
  EXPECT_DOUBLE_EQ(*ds.threshold_set.thresholds[1], 0.70);
  EXPECT_EQ(ds.indices, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(ds.labels, (std::vector<std::size_t>{0, 1, 0, 1}));
  EXPECT_EQ(ds.confidences, (std::vector<double>{0.95, 0.90, 0.80, 0.70}));
  EXPECT_EQ(class_histogram(ds, 2), (std::vector<std::size_t>{2, 2}));
}

TEST(Cbpl, RetentionOneKeepsEverything) {
  Gen gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + gen() % 40;
    const auto labels = testing::random_labels(n, 4, gen);
    std::vector<double> conf(n);
    for (auto& c : conf) c = u(gen);
    const auto ds = cbpl_filter(synthetic_predictions(labels, conf, 4), {0.5 + 0.5 * u(gen), 1.0});
    ASSERT_EQ(ds.size(), n);
  }
}

TEST(Cbpl, ConfidentSamplesAllKept) {
  const auto preds = synthetic_predictions({0, 0, 1, 1, 1}, {0.9, 0.8, 0.99, 0.76, 0.8}, 2);
  EXPECT_EQ(cbpl_filter(preds, {0.75, 0.2}).size(), 5u);
}

TEST(Cbpl, TiesCanExceedKeepCount) {
  const auto preds = synthetic_predictions({0, 0, 0, 0}, {0.9, 0.9, 0.9, 0.9}, 2);
  const auto ds = cbpl_filter(preds, {0.95, 0.25});
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_FALSE(ds.threshold_set.thresholds[1].has_value());
  EXPECT_EQ(ds.threshold_set.empty_classes(), std::vector<std::size_t>{1});
}

TEST(Cbpl, MaxLogitSource) {
  auto preds = synthetic_predictions({0, 0, 0}, {0.9, 0.9, 0.9}, 2);
  preds[0].max_logit = 0.3;
  preds[1].max_logit = 0.2;
  preds[2].max_logit = 0.1;
  const auto ds = cbpl_filter(preds, {0.75, 0.5, ConfidenceSource::kMaxLogit});
  EXPECT_DOUBLE_EQ(*ds.threshold_set.thresholds[0], 0.2);
  EXPECT_EQ(ds.indices, (std::vector<std::size_t>{0, 1}));
}

TEST(Cbpl, Errors) {
  expect_error(ErrorKind::kEmptyInput, [] { (void)cbpl_filter({}, {}); });
  const auto preds = synthetic_predictions({0}, {0.5}, 2);
  expect_error(ErrorKind::kParameter, [&] { (void)cbpl_filter(preds, {0.0, 0.5}); });
  expect_error(ErrorKind::kParameter, [&] { (void)cbpl_filter(preds, {1.5, 0.5}); });
  expect_error(ErrorKind::kParameter, [&] { (void)cbpl_filter(preds, {0.75, 0.0}); });
  expect_error(ErrorKind::kParameter, [&] { (void)cbpl_filter(preds, {0.75, 1.01}); });
}

TEST(Histogram, Basics) {
  FilteredDataset empty;
  EXPECT_EQ(class_histogram(empty, 3), (std::vector<std::size_t>{0, 0, 0}));
  FilteredDataset one;
  one.labels = {2, 0, 1};
  EXPECT_EQ(class_histogram(one, 3), (std::vector<std::size_t>{1, 1, 1}));
}

/// Random instance; some draws come from a coarse grid so ties are common.
struct Instance {
  std::vector<std::size_t> labels;
  std::vector<double> conf;
  std::size_t classes;
};

Instance random_instance(Gen& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance in;
  in.classes = 1 + gen() % 5;
  const std::size_t n = 1 + gen() % 50;
  in.labels = testing::random_labels(n, in.classes, gen);
  const bool coarse = gen() % 2 == 0;
  for (std::size_t i = 0; i < n; ++i) in.conf.push_back(coarse ? std::floor(u(gen) * 8.0) / 8.0 : u(gen));
  return in;
}

TEST(CbplProperties, MatchesQuadraticOracle) {
  Gen gen(2);
  std::uniform_real_distribution<double> tg(0.5, 0.95);
  const double qs[] = {0.2, 0.5, 0.75, 1.0};
  for (int rep = 0; rep < 1000; ++rep) {
    const auto in = random_instance(gen);
    const CbplConfig cfg{tg(gen), qs[gen() % 4]};
    const auto got = cbpl_filter(synthetic_predictions(in.labels, in.conf, in.classes), cfg);
    const auto want = testing::naive_cbpl(in.labels, in.conf, in.classes, cfg.global_threshold, cfg.retention_ratio);
    ASSERT_EQ(got.indices, want.kept);
    ASSERT_EQ(got.threshold_set.thresholds, want.thresholds);
  }
}

TEST(CbplProperties, InvariantsHold) {
  Gen gen(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const auto in = random_instance(gen);
    const auto preds = synthetic_predictions(in.labels, in.conf, in.classes);
    const double t_g = u(gen);
    const double q1 = u(gen), q2 = std::min(1.0, q1 + u(gen));
    const auto small = cbpl_filter(preds, {t_g, q1});
    const auto large = cbpl_filter(preds, {t_g, q2});
    // Monotone in Q.
    ASSERT_TRUE(std::includes(large.indices.begin(), large.indices.end(), small.indices.begin(), small.indices.end()));
    // No duplicates, every kept sample clears its class threshold, thresholds bounded by T_g.
    ASSERT_EQ(std::set<std::size_t>(small.indices.begin(), small.indices.end()).size(), small.size());
    for (std::size_t p = 0; p < small.size(); ++p) {
      ASSERT_GE(small.confidences[p], *small.threshold_set.thresholds[small.labels[p]]);
    }
    const auto hist = class_histogram(small, in.classes);
    for (std::size_t k = 0; k < in.classes; ++k) {
      const bool present = std::find(in.labels.begin(), in.labels.end(), k) != in.labels.end();
      ASSERT_EQ(small.threshold_set.thresholds[k].has_value(), present);
      if (present) {
        ASSERT_LE(*small.threshold_set.thresholds[k], t_g);
        ASSERT_GE(hist[k], 1u);  // no class with predictions is starved
      }
    }
  }
}

}  // namespace
}  // namespace cola
