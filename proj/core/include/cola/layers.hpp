#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cola/matrix.hpp"
#include "cola/rng.hpp"

namespace cola {

/// Mutable view of one trainable tensor and its gradient accumulator.
template <class T>
struct ParamRef {
  std::span<T> value;
  std::span<T> grad;
};

/// Affine map y = x W + b with W stored as (in_dim x out_dim).
template <class T>
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(std::size_t in_dim, std::size_t out_dim);

  /// Weights and bias uniform in +-1/sqrt(in_dim); weight draws first
  /// (row-major), then bias.
  static LinearLayer uniform_init(std::size_t in_dim, std::size_t out_dim, Rng& rng);
  static LinearLayer zeros(std::size_t in_dim, std::size_t out_dim) { return {in_dim, out_dim}; }

  std::size_t in_dim() const noexcept { return weight_.rows(); }
  std::size_t out_dim() const noexcept { return weight_.cols(); }

  /// Caches `input` for the following backward().
  BasicMatrix<T> forward(const BasicMatrix<T>& input);
  /// Forward without touching the cache.
  BasicMatrix<T> apply(const BasicMatrix<T>& input) const;
  /// Accumulates dW, db and returns dL/dinput. Consumes the cache.
  BasicMatrix<T> backward(const BasicMatrix<T>& grad_out);

  bool has_cache() const noexcept { return cached_input_.has_value(); }
  void clear_cache() noexcept { cached_input_.reset(); }
  void zero_grad();

  BasicMatrix<T>& weight() noexcept { return weight_; }
  const BasicMatrix<T>& weight() const noexcept { return weight_; }
  std::vector<T>& bias() noexcept { return bias_; }
  const std::vector<T>& bias() const noexcept { return bias_; }
  const BasicMatrix<T>& weight_grad() const noexcept { return weight_grad_; }
  const std::vector<T>& bias_grad() const noexcept { return bias_grad_; }

  /// (weight, bias) in that order.
  void append_parameters(std::vector<ParamRef<T>>& out);

  template <class U>
  LinearLayer<U> cast() const {
    LinearLayer<U> out(in_dim(), out_dim());
    out.weight() = weight_.template cast<U>();
    for (std::size_t i = 0; i < bias_.size(); ++i) out.bias()[i] = static_cast<U>(bias_[i]);
    return out;
  }

  friend bool operator==(const LinearLayer& a, const LinearLayer& b) {
    return a.weight_ == b.weight_ && a.bias_ == b.bias_;
  }

 private:
  BasicMatrix<T> weight_;
  std::vector<T> bias_;
  BasicMatrix<T> weight_grad_;
  std::vector<T> bias_grad_;
  std::optional<BasicMatrix<T>> cached_input_;
};

template <class T>
BasicMatrix<T> relu_forward(const BasicMatrix<T>& x);

/// Gradient passes where the forward input was strictly positive.
template <class T>
BasicMatrix<T> relu_backward(const BasicMatrix<T>& grad_out, const BasicMatrix<T>& pre_activation);

/// Column means. A single row is returned bit-for-bit.
template <class T>
std::vector<T> batch_mean_forward(const BasicMatrix<T>& input);

template <class T>
BasicMatrix<T> batch_mean_backward(std::span<const T> grad_mean, std::size_t n);

template <class T>
struct CrossEntropyResult {
  T loss;
  BasicMatrix<T> grad_logits;
};

/// Mean negative log-likelihood of `labels` under row softmax of `logits`.
template <class T>
CrossEntropyResult<T> softmax_cross_entropy(const BasicMatrix<T>& logits, std::span<const std::size_t> labels);

template <class T>
std::vector<T> softmax(std::span<const T> logits);

template <class T>
struct RowNormalized {
  BasicMatrix<T> output;
  std::vector<T> norms;
  /// Rows whose norm fell below 1e-12; emitted as zeros.
  std::vector<std::size_t> degenerate_rows;
};

template <class T>
RowNormalized<T> normalize_rows_forward(const BasicMatrix<T>& x);

/// Backward of y = x / |x| given the forward result.
template <class T>
BasicMatrix<T> normalize_rows_backward(const BasicMatrix<T>& grad_out, const RowNormalized<T>& fwd);

}  // namespace cola
