#pragma once

#include <cstddef>
#include <cstdint>

#include "cola/classifier.hpp"
#include "cola/io.hpp"

namespace cola {

/// Desk-scale stand-in for an encoder-side domain shift.
///
/// Prototypes are random unit directions with pairwise cosine below
/// 1 - prototype_spread. Each target sample is its class prototype plus
/// isotropic Gaussian noise of expected norm intra_class_noise, rotated by
/// domain_shift * rotation_gain radians in d/2 random orthogonal planes,
/// translated by domain_shift * translation_gain along a random unit
/// direction, and finally unit-normalized. Sample order is shuffled.
struct SynthConfig {
  std::size_t classes = 12;
  std::size_t dim = 64;
  std::size_t n_per_class = 200;
  double prototype_spread = 0.6;
  double intra_class_noise = 0.7;
  double domain_shift = 1.0;
  double rotation_gain = 0.5;
  double translation_gain = 2.2;
  std::uint32_t seed = 2024;

  void validate() const;
};

struct SyntheticData {
  FeatureSet target;
  ClassPrototypes prototypes;
};

SyntheticData generate_synthetic(const SynthConfig& config);

}  // namespace cola
