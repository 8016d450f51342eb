#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cola/classifier.hpp"

namespace cola {

/// What CBPL ranks and thresholds on.
enum class ConfidenceSource {
  kProbability,  ///< max softmax probability (default)
  kMaxLogit,     ///< max raw cosine similarity
};

struct CbplConfig {
  /// T_g in (0, 1].
  double global_threshold = 0.75;
  /// Q in (0, 1]: fraction of each class's predictions that sets T_s.
  double retention_ratio = 0.75;
  ConfidenceSource source = ConfidenceSource::kProbability;

  void validate() const;
};

/// Per-class thresholds t_k; std::nullopt for classes nothing was predicted as.
struct ThresholdSet {
  std::vector<std::optional<double>> thresholds;

  std::size_t num_classes() const noexcept { return thresholds.size(); }
  std::vector<std::size_t> empty_classes() const;
};

/// The retained training set D'. Entries are ordered by source index.
struct FilteredDataset {
  std::vector<std::size_t> indices;
  std::vector<std::size_t> labels;
  std::vector<double> confidences;
  ThresholdSet threshold_set;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
};

/// ceil(Q * count) with a floor of one, tolerant of Q * count landing a few
/// ulps above an integer.
std::size_t retention_count(double retention_ratio, std::size_t count);

/// Class-balanced pseudo-label filtering. For each class k, the predictions
/// S_k are ranked by confidence (descending, ties by lower index), T_s is the
/// confidence of the retention_count-th entry, t_k = min(T_g, T_s), and every
/// member of S_k with confidence >= t_k is retained.
FilteredDataset cbpl_filter(const std::vector<Prediction>& preds, const CbplConfig& config);

std::vector<std::size_t> class_histogram(const FilteredDataset& ds, std::size_t num_classes);

}  // namespace cola
