#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cola/layers.hpp"
#include "cola/matrix.hpp"
#include "cola/rng.hpp"

namespace cola {

/// Where the CAU takes its context vector f_bar from at inference time.
enum class MeanMode : std::uint8_t {
  kBatch = 0,            ///< mean of whatever batch is passed in
  kFrozenPrototype = 1,  ///< mean stored at the end of adaptation
};

std::string_view mean_mode_name(MeanMode mode) noexcept;
MeanMode parse_mean_mode(std::string_view text);

struct FusionCoefficients {
  double alpha = 0.1;  ///< raw encoder feature
  double beta = 0.5;   ///< adapter output
  double gamma = 1.0;  ///< CAU output
};

struct CamConfig {
  std::size_t dim = 0;
  /// 0 selects ceil(dim / 4).
  std::size_t hidden_dim = 0;
  /// Number of linear layers in the CAU MLP, 2..4.
  std::size_t cau_depth = 2;
  FusionCoefficients fusion;
  /// Unit-normalize fused rows before they reach the cosine classifier.
  bool normalize_output = true;

  std::size_t resolved_hidden_dim() const noexcept { return hidden_dim != 0 ? hidden_dim : (dim + 3) / 4; }
  void validate() const;
};

/// All trainable and fixed state of the context-aware module.
template <class T>
struct CamParameters {
  std::array<LinearLayer<T>, 2> adapter;
  std::vector<LinearLayer<T>> cau_mlp;
  T lambda{0};
  T lambda_grad{0};
  T alpha{0};
  T beta{0};
  T gamma{0};
  bool normalize_output = true;
  MeanMode mode = MeanMode::kBatch;
  std::optional<std::vector<T>> frozen_mean;

  /// Adapter layer 1 and the hidden CAU layers draw uniform(+-1/sqrt(in)) from
  /// `rng` in that order; both final layers and lambda start at zero.
  static CamParameters initialize(const CamConfig& config, Rng& rng);

  std::size_t dim() const noexcept { return adapter[0].in_dim(); }
  std::size_t hidden_dim() const noexcept { return adapter[0].out_dim(); }
  std::size_t cau_depth() const noexcept { return cau_mlp.size(); }

  /// Adapter layers, CAU layers (weight then bias each), then lambda.
  std::vector<ParamRef<T>> parameters();
  void zero_grad();

  template <class U>
  CamParameters<U> cast() const;

  /// Compares values only, never gradients.
  bool same_values(const CamParameters& other) const;
};

template <class T>
struct CamForwardCache {
  BasicMatrix<T> input;
  BasicMatrix<T> adapter_hidden_pre;
  BasicMatrix<T> adapter_out;
  std::vector<T> mean;
  bool mean_from_batch = true;
  /// Pre-activation of each hidden CAU layer (all but the last).
  std::vector<BasicMatrix<T>> cau_hidden_pre;
  std::vector<T> cau_out;
  BasicMatrix<T> fused;
  std::optional<RowNormalized<T>> normalized;
};

template <class T>
T sigmoid(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

/// Task-aware adapter + context-aware unit + residual fusion:
///   f_A   = Linear2(ReLU(Linear1(f)))
///   f_CAU = MLP(f_bar) + sigmoid(lambda) * f_bar      (one vector, broadcast to every row)
///   f_CAM = alpha * f + beta * f_A + gamma * f_CAU   (then unit-normalized per row)
template <class T>
class ContextAwareModule {
 public:
  explicit ContextAwareModule(CamParameters<T> params) : params_(std::move(params)) {}

  CamParameters<T>& params() noexcept { return params_; }
  const CamParameters<T>& params() const noexcept { return params_; }

  BasicMatrix<T> adapter_forward(const BasicMatrix<T>& features) const;
  /// MLP(mean) + sigmoid(lambda) * mean.
  std::vector<T> cau_vector(std::span<const T> mean) const;
  /// Batch-mean CAU output broadcast to features.rows() rows.
  BasicMatrix<T> cau_forward(const BasicMatrix<T>& features) const;

  /// Training forward pass; always uses the batch mean and fills the cache.
  BasicMatrix<T> forward(const BasicMatrix<T>& features);
  /// Cache-free forward with an explicit mean source.
  BasicMatrix<T> evaluate(const BasicMatrix<T>& features, MeanMode mode) const;

  /// Accumulates gradients for every trainable parameter, consumes the cache,
  /// and returns dL/dfeatures (including the 1/n share routed through f_bar).
  BasicMatrix<T> backward(const BasicMatrix<T>& grad_out);

  bool has_cache() const noexcept { return cache_.has_value(); }
  const CamForwardCache<T>& cache() const;

 private:
  BasicMatrix<T> fuse(const BasicMatrix<T>& features, const BasicMatrix<T>& adapter_out,
                      std::span<const T> cau) const;
  std::vector<T> resolve_mean(const BasicMatrix<T>& features, MeanMode mode) const;

  CamParameters<T> params_;
  std::optional<CamForwardCache<T>> cache_;
};

}  // namespace cola
