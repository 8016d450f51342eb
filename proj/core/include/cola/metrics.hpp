#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "cola/classifier.hpp"

namespace cola {

struct EvalResult {
  /// correct / total per class; 0 for classes absent from the ground truth.
  std::vector<double> per_class_accuracy;
  std::vector<std::size_t> n_per_class;
  /// Unweighted mean over classes with n > 0.
  double average = 0.0;
  /// Fraction of all samples classified correctly (sample-weighted).
  double overall = 0.0;
};

struct BaseNewResult {
  double base_accuracy = 0.0;
  double new_accuracy = 0.0;
  double harmonic_mean = 0.0;
};

EvalResult evaluate(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth,
                    std::size_t num_classes);
EvalResult evaluate(const std::vector<Prediction>& preds, const std::vector<std::size_t>& truth,
                    std::size_t num_classes);

/// 2ab / (a + b), or 0 when a + b = 0.
double harmonic_mean(double a, double b) noexcept;

enum class SplitScheme {
  kFirstHalf,
  kParity,
  kAccuracyRanked,
  kSwappedFirstHalf,
  kSwappedParity,
  kSwappedAccuracyRanked,
};

SplitScheme parse_split_scheme(std::string_view text);
std::string_view split_scheme_name(SplitScheme scheme) noexcept;

struct ClassSplit {
  std::vector<std::size_t> base;
  std::vector<std::size_t> novel;
};

/// Partitions classes 0..C-1. first-half puts the first ceil(C/2) classes in
/// base; parity puts even indices in base; accuracy-ranked puts the ceil(C/2)
/// classes with the highest zero-shot accuracy in base (ties to the lower
/// index) and needs `zero_shot`. Swapped variants exchange base and novel.
/// Both lists are sorted ascending.
ClassSplit base_to_new_split(std::size_t num_classes, SplitScheme scheme,
                             const EvalResult* zero_shot = nullptr);

}  // namespace cola
