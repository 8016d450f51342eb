#include "cola/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace cola {

EvalResult evaluate(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth,
                    std::size_t num_classes) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::kShape, std::to_string(predicted.size()) + " predictions for " +
                                       std::to_string(truth.size()) + " ground-truth labels");
  }
  EvalResult r;
  r.per_class_accuracy.assign(num_classes, 0.0);
  r.n_per_class.assign(num_classes, 0);
  std::vector<std::size_t> correct(num_classes, 0);
  std::size_t total_correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes) throw Error(ErrorKind::kIndex, "ground-truth label out of range");
    ++r.n_per_class[truth[i]];
    if (predicted[i] == truth[i]) {
      ++correct[truth[i]];
      ++total_correct;
    }
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (r.n_per_class[k] == 0) continue;
    r.per_class_accuracy[k] = static_cast<double>(correct[k]) / static_cast<double>(r.n_per_class[k]);
    sum += r.per_class_accuracy[k];
    ++present;
  }
  r.average = present ? sum / static_cast<double>(present) : 0.0;
  r.overall = truth.empty() ? 0.0 : static_cast<double>(total_correct) / static_cast<double>(truth.size());
  return r;
}

EvalResult evaluate(const std::vector<Prediction>& preds, const std::vector<std::size_t>& truth,
                    std::size_t num_classes) {
  return evaluate(labels_of(preds), truth, num_classes);
}

double harmonic_mean(double a, double b) noexcept {
  const double s = a + b;
  return s > 0.0 ? 2.0 * a * b / s : 0.0;
}

SplitScheme parse_split_scheme(std::string_view text) {
  if (text == "first-half") return SplitScheme::kFirstHalf;
  if (text == "parity") return SplitScheme::kParity;
  if (text == "accuracy-ranked") return SplitScheme::kAccuracyRanked;
  if (text == "swapped-first-half") return SplitScheme::kSwappedFirstHalf;
  if (text == "swapped-parity") return SplitScheme::kSwappedParity;
  if (text == "swapped-accuracy-ranked") return SplitScheme::kSwappedAccuracyRanked;
  throw Error(ErrorKind::kConfig, "unknown split scheme '" + std::string(text) + "'");
}

std::string_view split_scheme_name(SplitScheme scheme) noexcept {
  switch (scheme) {
    case SplitScheme::kFirstHalf: return "first-half";
    case SplitScheme::kParity: return "parity";
    case SplitScheme::kAccuracyRanked: return "accuracy-ranked";
    case SplitScheme::kSwappedFirstHalf: return "swapped-first-half";
    case SplitScheme::kSwappedParity: return "swapped-parity";
    case SplitScheme::kSwappedAccuracyRanked: return "swapped-accuracy-ranked";
  }
  return "unknown";
}

ClassSplit base_to_new_split(std::size_t num_classes, SplitScheme scheme, const EvalResult* zero_shot) {
  if (num_classes < 2) throw Error(ErrorKind::kParameter, "base-to-new split needs at least two classes");
  const std::size_t base_size = (num_classes + 1) / 2;
  std::vector<bool> in_base(num_classes, false);

  switch (scheme) {
    case SplitScheme::kFirstHalf:
    case SplitScheme::kSwappedFirstHalf:
      for (std::size_t k = 0; k < base_size; ++k) in_base[k] = true;
      break;
    case SplitScheme::kParity:
    case SplitScheme::kSwappedParity:
      for (std::size_t k = 0; k < num_classes; k += 2) in_base[k] = true;
      break;
    case SplitScheme::kAccuracyRanked:
    case SplitScheme::kSwappedAccuracyRanked: {
      if (zero_shot == nullptr || zero_shot->per_class_accuracy.size() != num_classes) {
        throw Error(ErrorKind::kConfig, "accuracy-ranked split needs a zero-shot result over all classes");
      }
      std::vector<std::size_t> order(num_classes);
      std::iota(order.begin(), order.end(), 0);
      const auto& acc = zero_shot->per_class_accuracy;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return acc[a] > acc[b]; });
      for (std::size_t k = 0; k < base_size; ++k) in_base[order[k]] = true;
      break;
    }
  }

  const bool swapped = scheme == SplitScheme::kSwappedFirstHalf || scheme == SplitScheme::kSwappedParity ||
                       scheme == SplitScheme::kSwappedAccuracyRanked;
  ClassSplit split;
  for (std::size_t k = 0; k < num_classes; ++k) {
    (in_base[k] != swapped ? split.base : split.novel).push_back(k);
  }
  return split;
}

}  // namespace cola
