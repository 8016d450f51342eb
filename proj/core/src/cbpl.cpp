#include "cola/cbpl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cola {

void CbplConfig::validate() const {
  if (!(global_threshold > 0.0 && global_threshold <= 1.0)) {
    throw Error(ErrorKind::kParameter, "global threshold must lie in (0, 1]");
  }
  if (!(retention_ratio > 0.0 && retention_ratio <= 1.0)) {
    throw Error(ErrorKind::kParameter, "retention ratio must lie in (0, 1]");
  }
}

std::vector<std::size_t> ThresholdSet::empty_classes() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    if (!thresholds[k]) out.push_back(k);
  }
  return out;
}

std::size_t retention_count(double retention_ratio, std::size_t count) {
  if (count == 0) return 0;
  const auto keep = static_cast<std::size_t>(std::ceil(retention_ratio * static_cast<double>(count) - 1e-9));
  return std::clamp<std::size_t>(keep, 1, count);
}

FilteredDataset cbpl_filter(const std::vector<Prediction>& preds, const CbplConfig& config) {
  config.validate();
  if (preds.empty()) throw Error(ErrorKind::kEmptyInput, "pseudo-label filtering needs at least one prediction");
  const std::size_t num_classes = preds.front().probabilities.size();

  auto score = [&](const Prediction& p) {
    return config.source == ConfidenceSource::kProbability ? p.confidence : p.max_logit;
  };

  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].label >= num_classes) {
      throw Error(ErrorKind::kIndex, "prediction " + std::to_string(i) + " has label out of range");
    }
    members[preds[i].label].push_back(i);
  }

  FilteredDataset out;
  out.threshold_set.thresholds.assign(num_classes, std::nullopt);
  for (std::size_t k = 0; k < num_classes; ++k) {
    auto& s = members[k];
    if (s.empty()) continue;
    // Members arrive in ascending index order; a stable sort keeps that as the tie-break.
    std::stable_sort(s.begin(), s.end(),
                     [&](std::size_t a, std::size_t b) { return score(preds[a]) > score(preds[b]); });
    const std::size_t keep = retention_count(config.retention_ratio, s.size());
    const double retention_threshold = score(preds[s[keep - 1]]);
    out.threshold_set.thresholds[k] = std::min(config.global_threshold, retention_threshold);
  }

  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double t = *out.threshold_set.thresholds[preds[i].label];
    const double c = score(preds[i]);
    if (c >= t) {
      out.indices.push_back(i);
      out.labels.push_back(preds[i].label);
      out.confidences.push_back(c);
    }
  }
  return out;
}

std::vector<std::size_t> class_histogram(const FilteredDataset& ds, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t label : ds.labels) {
    if (label >= num_classes) throw Error(ErrorKind::kIndex, "label " + std::to_string(label) + " out of range");
    ++counts[label];
  }
  return counts;
}

}  // namespace cola
