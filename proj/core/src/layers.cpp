#include "cola/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cola {

template <class T>
LinearLayer<T>::LinearLayer(std::size_t in_dim, std::size_t out_dim)
    : weight_(in_dim, out_dim),
      bias_(out_dim, T{0}),
      weight_grad_(in_dim, out_dim),
      bias_grad_(out_dim, T{0}) {}

template <class T>
LinearLayer<T> LinearLayer<T>::uniform_init(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  LinearLayer layer(in_dim, out_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  // Draws are rounded to float first so both widths start from the same values.
  for (T& w : layer.weight_.values()) w = static_cast<T>(static_cast<float>(rng.uniform(-bound, bound)));
  for (T& b : layer.bias_) b = static_cast<T>(static_cast<float>(rng.uniform(-bound, bound)));
  return layer;
}

template <class T>
BasicMatrix<T> LinearLayer<T>::apply(const BasicMatrix<T>& input) const {
  require_shape(input.cols() == in_dim(), "linear layer expects " + std::to_string(in_dim()) +
                                              " input columns, got " + std::to_string(input.cols()));
  BasicMatrix<T> out = matmul(input, weight_);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias_[j];
  }
  return out;
}

template <class T>
BasicMatrix<T> LinearLayer<T>::forward(const BasicMatrix<T>& input) {
  BasicMatrix<T> out = apply(input);
  cached_input_ = input;
  return out;
}

template <class T>
BasicMatrix<T> LinearLayer<T>::backward(const BasicMatrix<T>& grad_out) {
  if (!cached_input_) throw Error(ErrorKind::kState, "linear backward called before forward");
  const BasicMatrix<T>& input = *cached_input_;
  require_shape(grad_out.rows() == input.rows() && grad_out.cols() == out_dim(),
                "linear backward gradient shape does not match forward output");

  const BasicMatrix<T> dw = matmul_transpose_a(input, grad_out);
  auto acc = weight_grad_.values();
  auto add = dw.values();
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add[i];
  const std::vector<T> db = column_sum(grad_out);
  for (std::size_t j = 0; j < db.size(); ++j) bias_grad_[j] += db[j];

  BasicMatrix<T> grad_in = matmul_transpose_b(grad_out, weight_);
  cached_input_.reset();
  return grad_in;
}

template <class T>
void LinearLayer<T>::zero_grad() {
  weight_grad_.fill(T{0});
  std::fill(bias_grad_.begin(), bias_grad_.end(), T{0});
}

template <class T>
void LinearLayer<T>::append_parameters(std::vector<ParamRef<T>>& out) {
  out.push_back({weight_.values(), weight_grad_.values()});
  out.push_back({std::span<T>(bias_), std::span<T>(bias_grad_)});
}

template <class T>
BasicMatrix<T> relu_forward(const BasicMatrix<T>& x) {
  BasicMatrix<T> out = x;
  for (T& v : out.values()) v = v > T{0} ? v : T{0};
  return out;
}

template <class T>
BasicMatrix<T> relu_backward(const BasicMatrix<T>& grad_out, const BasicMatrix<T>& pre_activation) {
  require_shape(grad_out.rows() == pre_activation.rows() && grad_out.cols() == pre_activation.cols(),
                "relu backward shape mismatch");
  BasicMatrix<T> out = grad_out;
  auto pre = pre_activation.values();
  auto g = out.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(pre[i] > T{0})) g[i] = T{0};
  }
  return out;
}

template <class T>
std::vector<T> batch_mean_forward(const BasicMatrix<T>& input) {
  if (input.rows() == 0) throw Error(ErrorKind::kEmptyBatch, "batch mean over zero rows");
  auto first = input.row(0);
  std::vector<T> mean(first.begin(), first.end());
  for (std::size_t i = 1; i < input.rows(); ++i) {
    auto r = input.row(i);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += r[j];
  }
  const T n = static_cast<T>(input.rows());
  for (T& v : mean) v /= n;
  return mean;
}

template <class T>
BasicMatrix<T> batch_mean_backward(std::span<const T> grad_mean, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kEmptyBatch, "batch mean backward with zero rows");
  BasicMatrix<T> out(n, grad_mean.size());
  const T scale = static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = grad_mean[j] / scale;
  }
  return out;
}

template <class T>
std::vector<T> softmax(std::span<const T> logits) {
  std::vector<T> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const T peak = *std::max_element(p.begin(), p.end());
  T total{0};
  for (T& v : p) {
    v = std::exp(v - peak);
    total += v;
  }
  for (T& v : p) v /= total;
  return p;
}

template <class T>
CrossEntropyResult<T> softmax_cross_entropy(const BasicMatrix<T>& logits, std::span<const std::size_t> labels) {
  require_shape(logits.rows() == labels.size(), "cross entropy: " + std::to_string(logits.rows()) +
                                                    " logit rows vs " + std::to_string(labels.size()) + " labels");
  if (logits.rows() == 0) throw Error(ErrorKind::kEmptyBatch, "cross entropy over zero rows");
  CrossEntropyResult<T> result{T{0}, BasicMatrix<T>(logits.rows(), logits.cols())};
  const T n = static_cast<T>(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (labels[i] >= logits.cols()) {
      throw Error(ErrorKind::kIndex, "label " + std::to_string(labels[i]) + " out of range for " +
                                         std::to_string(logits.cols()) + " classes");
    }
    auto row = logits.row(i);
    const T peak = *std::max_element(row.begin(), row.end());
    T total{0};
    for (T v : row) total += std::exp(v - peak);
    const T log_total = std::log(total);
    result.loss += -(row[labels[i]] - peak - log_total);
    auto g = result.grad_logits.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) g[j] = std::exp(row[j] - peak - log_total) / n;
    g[labels[i]] -= T{1} / n;
  }
  result.loss /= n;
  return result;
}

template <class T>
RowNormalized<T> normalize_rows_forward(const BasicMatrix<T>& x) {
  RowNormalized<T> out{BasicMatrix<T>(x.rows(), x.cols()), std::vector<T>(x.rows(), T{0}), {}};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto src = x.row(i);
    const T norm = std::sqrt(dot<T>(src, src));
    out.norms[i] = norm;
    if (!(norm >= T(1e-12))) {
      out.degenerate_rows.push_back(i);
      continue;
    }
    auto dst = out.output.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] / norm;
  }
  return out;
}

template <class T>
BasicMatrix<T> normalize_rows_backward(const BasicMatrix<T>& grad_out, const RowNormalized<T>& fwd) {
  require_shape(grad_out.rows() == fwd.output.rows() && grad_out.cols() == fwd.output.cols(),
                "normalize backward shape mismatch");
  BasicMatrix<T> grad_in(grad_out.rows(), grad_out.cols());
  for (std::size_t i = 0; i < grad_out.rows(); ++i) {
    const T norm = fwd.norms[i];
    if (!(norm >= T(1e-12))) continue;
    auto y = fwd.output.row(i);
    auto g = grad_out.row(i);
    const T proj = dot<T>(y, g);
    auto dst = grad_in.row(i);
    for (std::size_t j = 0; j < g.size(); ++j) dst[j] = (g[j] - y[j] * proj) / norm;
  }
  return grad_in;
}

#define COLA_INSTANTIATE(T)                                                                              \
  template class LinearLayer<T>;                                                                         \
  template BasicMatrix<T> relu_forward(const BasicMatrix<T>&);                                           \
  template BasicMatrix<T> relu_backward(const BasicMatrix<T>&, const BasicMatrix<T>&);                   \
  template std::vector<T> batch_mean_forward(const BasicMatrix<T>&);                                     \
  template BasicMatrix<T> batch_mean_backward(std::span<const T>, std::size_t);                          \
  template std::vector<T> softmax(std::span<const T>);                                                   \
  template CrossEntropyResult<T> softmax_cross_entropy(const BasicMatrix<T>&, std::span<const std::size_t>); \
  template RowNormalized<T> normalize_rows_forward(const BasicMatrix<T>&);                               \
  template BasicMatrix<T> normalize_rows_backward(const BasicMatrix<T>&, const RowNormalized<T>&);

COLA_INSTANTIATE(float)
COLA_INSTANTIATE(double)

#undef COLA_INSTANTIATE

}  // namespace cola
