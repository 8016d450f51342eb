#pragma once

// Helpers shared by the unit tests and the acceptance binary. Everything that
// acts as an oracle here is written with plain loops and deliberately avoids
// the library's own kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "cola/cam.hpp"
#include "cola/cbpl.hpp"
#include "cola/classifier.hpp"
#include "cola/layers.hpp"
#include "cola/matrix.hpp"

namespace cola::testing {

inline std::filesystem::path data_dir() { return COLA_TEST_DATA_DIR; }

using Gen = std::mt19937_64;

template <class T = float>
BasicMatrix<T> random_matrix(std::size_t rows, std::size_t cols, Gen& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  BasicMatrix<T> m(rows, cols);
  for (T& v : m.values()) v = static_cast<T>(u(gen));
  return m;
}

inline std::vector<std::size_t> random_labels(std::size_t n, std::size_t classes, Gen& gen) {
  std::uniform_int_distribution<std::size_t> u(0, classes - 1);
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = u(gen);
  return out;
}

inline std::vector<std::string> class_names(std::size_t c) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < c; ++k) out.push_back("c" + std::to_string(k));
  return out;
}

/// Gaussian directions normalized in double, then rounded to float.
inline ClassPrototypes random_prototypes(std::size_t c, std::size_t d, Gen& gen) {
  std::normal_distribution<double> g;
  Matrix m(c, d);
  for (std::size_t k = 0; k < c; ++k) {
    std::vector<double> v(d);
    double norm = 0.0;
    for (double& x : v) {
      x = g(gen);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < d; ++j) m(k, j) = static_cast<float>(v[j] / norm);
  }
  return ClassPrototypes(class_names(c), std::move(m), 1e-4);
}

template <class T>
BasicMatrix<double> naive_matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  BasicMatrix<double> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += static_cast<double>(a(i, k)) * static_cast<double>(b(k, j));
      out(i, j) = acc;
    }
  }
  return out;
}

// --------------------------------------------------------------- CBPL oracle

struct NaiveCbpl {
  std::vector<std::size_t> kept;
  std::vector<std::optional<double>> thresholds;
};

/// Quadratic reading of the filtering algorithm: a sample's rank inside its
/// class is the number of members that beat it (higher confidence, or equal
/// confidence and lower index).
inline NaiveCbpl naive_cbpl(const std::vector<std::size_t>& labels, const std::vector<double>& conf,
                            std::size_t classes, double tg, double q) {
  NaiveCbpl out;
  out.thresholds.assign(classes, std::nullopt);
  for (std::size_t k = 0; k < classes; ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == k) members.push_back(i);
    }
    if (members.empty()) continue;
    auto keep = static_cast<long>(std::ceil(q * static_cast<double>(members.size()) - 1e-9));
    keep = std::max(1L, std::min(keep, static_cast<long>(members.size())));
    double ts = 0.0;
    for (std::size_t i : members) {
      long rank = 0;
      for (std::size_t j : members) {
        if (conf[j] > conf[i] || (conf[j] == conf[i] && j < i)) ++rank;
      }
      if (rank == keep - 1) ts = conf[i];
    }
    out.thresholds[k] = std::min(tg, ts);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (conf[i] >= *out.thresholds[labels[i]]) out.kept.push_back(i);
  }
  return out;
}

/// Predictions carrying only what the filter reads.
inline std::vector<Prediction> synthetic_predictions(const std::vector<std::size_t>& labels,
                                                     const std::vector<double>& conf, std::size_t classes) {
  std::vector<Prediction> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i].label = labels[i];
    out[i].confidence = conf[i];
    out[i].max_logit = conf[i];
    out[i].probabilities.assign(classes, 0.0);
  }
  return out;
}

// ------------------------------------------------------------------- hashing

inline std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

// ------------------------------------------------------------ gradient check

/// cam_forward -> cosine logits / tau -> mean cross-entropy.
template <class T>
struct LossProblem {
  CamParameters<T> params;
  BasicMatrix<T> features;
  BasicMatrix<T> prototypes;
  std::vector<std::size_t> labels;
  T tau;

  template <class U>
  LossProblem<U> cast() const {
    return {params.template cast<U>(), features.template cast<U>(), prototypes.template cast<U>(), labels,
            static_cast<U>(tau)};
  }
};

template <class T>
T full_loss(const LossProblem<T>& p) {
  ContextAwareModule<T> cam(p.params);
  BasicMatrix<T> logits = matmul_transpose_b(cam.evaluate(p.features, MeanMode::kBatch), p.prototypes);
  for (T& v : logits.values()) v /= p.tau;
  return softmax_cross_entropy(logits, p.labels).loss;
}

/// Analytic gradient of every trainable tensor, in CamParameters::parameters() order.
template <class T>
std::vector<std::vector<T>> analytic_gradients(const LossProblem<T>& p) {
  ContextAwareModule<T> cam(p.params);
  cam.params().zero_grad();
  BasicMatrix<T> logits = matmul_transpose_b(cam.forward(p.features), p.prototypes);
  for (T& v : logits.values()) v /= p.tau;
  auto ce = softmax_cross_entropy(logits, p.labels);
  for (T& v : ce.grad_logits.values()) v /= p.tau;
  cam.backward(matmul(ce.grad_logits, p.prototypes));
  std::vector<std::vector<T>> out;
  for (const auto& ref : cam.params().parameters()) out.emplace_back(ref.grad.begin(), ref.grad.end());
  return out;
}

/// Which ReLU inputs are positive, for the adapter and every hidden CAU layer.
inline std::vector<bool> relu_pattern(const LossProblem<double>& p) {
  ContextAwareModule<double> cam(p.params);
  (void)cam.forward(p.features);
  std::vector<bool> out;
  for (double v : cam.cache().adapter_hidden_pre.values()) out.push_back(v > 0.0);
  for (const auto& m : cam.cache().cau_hidden_pre)
    for (double v : m.values()) out.push_back(v > 0.0);
  return out;
}

/// Fourth-order central differences of the double-precision loss. A stencil
/// that straddles a ReLU kink is retried with a step ten times smaller.
inline std::vector<std::vector<double>> numeric_gradients(const LossProblem<double>& p, double h) {
  LossProblem<double> work = p;
  const auto base_pattern = relu_pattern(p);
  std::vector<std::vector<double>> out;
  auto refs = work.params.parameters();
  for (const auto& ref : refs) {
    std::vector<double> g(ref.value.size());
    for (std::size_t i = 0; i < ref.value.size(); ++i) {
      const double saved = ref.value[i];
      double step = h;
      for (int attempt = 0; attempt < 4; ++attempt, step /= 10.0) {
        bool smooth = true;
        auto at = [&](double delta) {
          ref.value[i] = saved + delta;
          smooth = smooth && relu_pattern(work) == base_pattern;
          return full_loss(work);
        };
        const double d1 = at(step) - at(-step);
        const double d2 = at(2 * step) - at(-2 * step);
        g[i] = (8.0 * d1 - d2) / (12.0 * step);
        if (smooth) break;
      }
      ref.value[i] = saved;
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// ||a - b|| / max(||a||, ||b||), or 0 when both vanish.
template <class T>
double relative_error(const std::vector<T>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]);
    diff += (x - b[i]) * (x - b[i]);
    na += x * x;
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale < 1e-12 ? 0.0 : std::sqrt(diff) / scale;
}

struct GradientCheckConfig {
  std::size_t batch = 8;
  std::size_t dim = 8;
  std::size_t classes = 3;
  std::size_t hidden = 0;
  std::size_t depth = 2;
  FusionCoefficients fusion;
  bool normalize_output = true;
  double tau = 0.01;
};

/// Every weight, bias, and lambda drawn at random so no branch is dead.
inline LossProblem<double> random_problem(const GradientCheckConfig& c, Gen& gen) {
  CamConfig cc;
  cc.dim = c.dim;
  cc.hidden_dim = c.hidden;
  cc.cau_depth = c.depth;
  cc.fusion = c.fusion;
  cc.normalize_output = c.normalize_output;
  Rng rng(static_cast<std::uint32_t>(gen()));
  auto params = CamParameters<double>::initialize(cc, rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& ref : params.parameters()) {
    for (double& v : ref.value) v = static_cast<double>(static_cast<float>(u(gen)));
  }
  params.lambda = static_cast<double>(static_cast<float>(2.0 * u(gen)));

  LossProblem<double> p;
  p.params = std::move(params);
  p.features = random_matrix<float>(c.batch, c.dim, gen).cast<double>();
  p.prototypes = random_prototypes(c.classes, c.dim, gen).embeddings().cast<double>();
  p.labels = random_labels(c.batch, c.classes, gen);
  p.tau = c.tau;
  return p;
}

struct GradientCheckResult {
  double worst_float = 0.0;
  double worst_double = 0.0;
};

/// The float and double analytic gradients are both scored against the same
/// double-precision numeric gradient, taken at the float problem's exact values.
inline GradientCheckResult check_gradients(const LossProblem<double>& p, double h = 1e-4) {
  const auto numeric = numeric_gradients(p, h);
  const auto exact = analytic_gradients(p);
  const auto single = analytic_gradients(p.cast<float>());
  GradientCheckResult r;
  for (std::size_t k = 0; k < numeric.size(); ++k) {
    r.worst_double = std::max(r.worst_double, relative_error(exact[k], numeric[k]));
    r.worst_float = std::max(r.worst_float, relative_error(single[k], numeric[k]));
  }
  return r;
}

}  // namespace cola::testing
