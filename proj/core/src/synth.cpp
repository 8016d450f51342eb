#include "cola/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "cola/rng.hpp"

namespace cola {

namespace {

using Vec = std::vector<double>;

// Sequential accumulation keeps the arithmetic identical to the reference script.
double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vec unit(const Vec& v) {
  const double n = std::sqrt(dot(v, v));
  if (!(n > 0.0)) throw Error(ErrorKind::kGeneration, "degenerate zero vector during generation");
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

Vec gaussian(Rng& rng, std::size_t d) {
  Vec v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

std::string class_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "class_%02zu", k);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (classes < 2) throw Error(ErrorKind::kParameter, "synthetic benchmark needs at least two classes");
  if (dim < 2) throw Error(ErrorKind::kParameter, "synthetic dimension must be at least 2");
  if (n_per_class == 0) throw Error(ErrorKind::kParameter, "n_per_class must be positive");
  if (!(prototype_spread > 0.0 && prototype_spread <= 2.0)) {
    throw Error(ErrorKind::kParameter, "prototype spread must lie in (0, 2]");
  }
  if (!(intra_class_noise >= 0.0) || !(domain_shift >= 0.0) || !(rotation_gain >= 0.0) ||
      !(translation_gain >= 0.0)) {
    throw Error(ErrorKind::kParameter, "noise, shift and gains must be nonnegative");
  }
  if (classes * n_per_class > UINT32_MAX) throw Error(ErrorKind::kParameter, "too many samples");
}

SyntheticData generate_synthetic(const SynthConfig& config) {
  config.validate();
  const std::size_t c = config.classes;
  const std::size_t d = config.dim;
  Rng rng(config.seed);
  const double max_cos = 1.0 - config.prototype_spread;

  std::vector<Vec> protos;
  for (std::size_t k = 0; k < c; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      Vec v = unit(gaussian(rng, d));
      bool separated = true;
      for (const Vec& p : protos) separated = separated && dot(v, p) < max_cos;
      if (separated) {
        protos.push_back(std::move(v));
        placed = true;
      }
    }
    if (!placed) {
      throw Error(ErrorKind::kGeneration, "cannot place " + std::to_string(c) + " prototypes in dimension " +
                                              std::to_string(d) + " with pairwise cosine below " +
                                              std::to_string(max_cos));
    }
  }

  std::vector<Vec> basis;
  for (std::size_t r = 0; r < d; ++r) {
    Vec v = gaussian(rng, d);
    for (const Vec& q : basis) {
      const double proj = dot(q, v);
      for (std::size_t j = 0; j < d; ++j) v[j] = v[j] - proj * q[j];
    }
    basis.push_back(unit(v));
  }
  const Vec direction = unit(gaussian(rng, d));

  const double theta = config.domain_shift * config.rotation_gain;
  const double cos_minus_one = std::cos(theta) - 1.0;
  const double sin_theta = std::sin(theta);
  const double shift = config.domain_shift * config.translation_gain;
  Vec translation(d);
  for (std::size_t j = 0; j < d; ++j) translation[j] = shift * direction[j];
  const double sigma = config.intra_class_noise / std::sqrt(static_cast<double>(d));

  const std::size_t n = c * config.n_per_class;
  std::vector<std::vector<float>> rows;
  std::vector<std::size_t> labels;
  rows.reserve(n);
  labels.reserve(n);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t s = 0; s < config.n_per_class; ++s) {
      Vec x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = protos[k][j] + sigma * rng.normal();
      Vec y = x;
      for (std::size_t m = 0; m < d / 2; ++m) {
        const Vec& q0 = basis[2 * m];
        const Vec& q1 = basis[2 * m + 1];
        const double a = dot(q0, x);
        const double b = dot(q1, x);
        const double ca = cos_minus_one * a - sin_theta * b;
        const double cb = cos_minus_one * b + sin_theta * a;
        for (std::size_t j = 0; j < d; ++j) y[j] = y[j] + ca * q0[j] + cb * q1[j];
      }
      for (std::size_t j = 0; j < d; ++j) y[j] = y[j] + translation[j];
      const Vec u = unit(y);
      rows.emplace_back(u.begin(), u.end());
      labels.push_back(k);
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));

  Matrix features(n, d);
  std::vector<std::size_t> shuffled_labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(rows[order[i]].begin(), rows[order[i]].end(), features.row(i).begin());
    shuffled_labels[i] = labels[order[i]];
  }

  Matrix proto_matrix(c, d);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t j = 0; j < d; ++j) proto_matrix(k, j) = static_cast<float>(protos[k][j]);
    names.push_back(class_name(k));
  }
  return SyntheticData{FeatureSet{std::move(features), std::move(shuffled_labels)},
                       ClassPrototypes(std::move(names), std::move(proto_matrix))};
}

}  // namespace cola
