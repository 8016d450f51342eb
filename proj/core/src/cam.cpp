#include "cola/cam.hpp"

#include <cmath>
#include <string>

namespace cola {

std::string_view mean_mode_name(MeanMode mode) noexcept {
  return mode == MeanMode::kBatch ? "batch" : "frozen-prototype";
}

MeanMode parse_mean_mode(std::string_view text) {
  if (text == "batch") return MeanMode::kBatch;
  if (text == "frozen-prototype") return MeanMode::kFrozenPrototype;
  throw Error(ErrorKind::kConfig, "unknown inference mode '" + std::string(text) + "'");
}

void CamConfig::validate() const {
  if (dim == 0) throw Error(ErrorKind::kParameter, "feature dimension must be positive");
  if (cau_depth < 2 || cau_depth > 4) throw Error(ErrorKind::kParameter, "CAU depth must be between 2 and 4");
  if (!(fusion.alpha >= 0.0 && fusion.beta >= 0.0 && fusion.gamma >= 0.0)) {
    throw Error(ErrorKind::kParameter, "fusion coefficients must be nonnegative");
  }
}

template <class T>
CamParameters<T> CamParameters<T>::initialize(const CamConfig& config, Rng& rng) {
  config.validate();
  const std::size_t d = config.dim;
  const std::size_t h = config.resolved_hidden_dim();
  CamParameters p;
  p.adapter[0] = LinearLayer<T>::uniform_init(d, h, rng);
  p.adapter[1] = LinearLayer<T>::zeros(h, d);
  for (std::size_t layer = 0; layer < config.cau_depth; ++layer) {
    const std::size_t in = layer == 0 ? d : h;
    const bool last = layer + 1 == config.cau_depth;
    p.cau_mlp.push_back(last ? LinearLayer<T>::zeros(in, d) : LinearLayer<T>::uniform_init(in, h, rng));
  }
  p.alpha = static_cast<T>(config.fusion.alpha);
  p.beta = static_cast<T>(config.fusion.beta);
  p.gamma = static_cast<T>(config.fusion.gamma);
  p.normalize_output = config.normalize_output;
  return p;
}

template <class T>
std::vector<ParamRef<T>> CamParameters<T>::parameters() {
  std::vector<ParamRef<T>> out;
  for (auto& layer : adapter) layer.append_parameters(out);
  for (auto& layer : cau_mlp) layer.append_parameters(out);
  out.push_back({std::span<T>(&lambda, 1), std::span<T>(&lambda_grad, 1)});
  return out;
}

template <class T>
void CamParameters<T>::zero_grad() {
  for (auto& layer : adapter) layer.zero_grad();
  for (auto& layer : cau_mlp) layer.zero_grad();
  lambda_grad = T{0};
}

template <class T>
template <class U>
CamParameters<U> CamParameters<T>::cast() const {
  CamParameters<U> out;
  out.adapter[0] = adapter[0].template cast<U>();
  out.adapter[1] = adapter[1].template cast<U>();
  for (const auto& layer : cau_mlp) out.cau_mlp.push_back(layer.template cast<U>());
  out.lambda = static_cast<U>(lambda);
  out.alpha = static_cast<U>(alpha);
  out.beta = static_cast<U>(beta);
  out.gamma = static_cast<U>(gamma);
  out.normalize_output = normalize_output;
  out.mode = mode;
  if (frozen_mean) out.frozen_mean = std::vector<U>(frozen_mean->begin(), frozen_mean->end());
  return out;
}

template <class T>
bool CamParameters<T>::same_values(const CamParameters& other) const {
  return adapter == other.adapter && cau_mlp == other.cau_mlp && lambda == other.lambda &&
         alpha == other.alpha && beta == other.beta && gamma == other.gamma &&
         normalize_output == other.normalize_output && mode == other.mode && frozen_mean == other.frozen_mean;
}

template <class T>
BasicMatrix<T> ContextAwareModule<T>::adapter_forward(const BasicMatrix<T>& features) const {
  return params_.adapter[1].apply(relu_forward(params_.adapter[0].apply(features)));
}

template <class T>
std::vector<T> ContextAwareModule<T>::cau_vector(std::span<const T> mean) const {
  BasicMatrix<T> z(1, mean.size(), std::vector<T>(mean.begin(), mean.end()));
  const auto& mlp = params_.cau_mlp;
  for (std::size_t layer = 0; layer < mlp.size(); ++layer) {
    z = mlp[layer].apply(z);
    if (layer + 1 < mlp.size()) z = relu_forward(z);
  }
  const T gate = sigmoid(params_.lambda);
  std::vector<T> out(mean.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = z(0, j) + gate * mean[j];
  return out;
}

template <class T>
BasicMatrix<T> ContextAwareModule<T>::cau_forward(const BasicMatrix<T>& features) const {
  const std::vector<T> cau = cau_vector(batch_mean_forward(features));
  BasicMatrix<T> out(features.rows(), cau.size());
  for (std::size_t i = 0; i < out.rows(); ++i) std::copy(cau.begin(), cau.end(), out.row(i).begin());
  return out;
}

template <class T>
BasicMatrix<T> ContextAwareModule<T>::fuse(const BasicMatrix<T>& features, const BasicMatrix<T>& adapter_out,
                                           std::span<const T> cau) const {
  BasicMatrix<T> fused(features.rows(), features.cols());
  for (std::size_t i = 0; i < fused.rows(); ++i) {
    auto f = features.row(i);
    auto a = adapter_out.row(i);
    auto dst = fused.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) {
      dst[j] = params_.alpha * f[j] + params_.beta * a[j] + params_.gamma * cau[j];
    }
  }
  return fused;
}

template <class T>
std::vector<T> ContextAwareModule<T>::resolve_mean(const BasicMatrix<T>& features, MeanMode mode) const {
  if (mode == MeanMode::kBatch) return batch_mean_forward(features);
  if (!params_.frozen_mean) {
    throw Error(ErrorKind::kState, "frozen-prototype inference requires a stored adaptation mean");
  }
  require_shape(params_.frozen_mean->size() == features.cols(), "stored mean has the wrong dimension");
  return *params_.frozen_mean;
}

template <class T>
BasicMatrix<T> ContextAwareModule<T>::evaluate(const BasicMatrix<T>& features, MeanMode mode) const {
  require_shape(features.cols() == params_.dim(), "CAM expects " + std::to_string(params_.dim()) +
                                                      " feature columns, got " + std::to_string(features.cols()));
  const std::vector<T> mean = resolve_mean(features, mode);
  const BasicMatrix<T> fused = fuse(features, adapter_forward(features), cau_vector(mean));
  if (!params_.normalize_output) return fused;
  return normalize_rows_forward(fused).output;
}

template <class T>
BasicMatrix<T> ContextAwareModule<T>::forward(const BasicMatrix<T>& features) {
  require_shape(features.cols() == params_.dim(), "CAM expects " + std::to_string(params_.dim()) +
                                                      " feature columns, got " + std::to_string(features.cols()));
  CamForwardCache<T> c;
  c.input = features;
  c.adapter_hidden_pre = params_.adapter[0].forward(features);
  c.adapter_out = params_.adapter[1].forward(relu_forward(c.adapter_hidden_pre));

  c.mean = batch_mean_forward(features);
  c.mean_from_batch = true;
  BasicMatrix<T> z(1, c.mean.size(), c.mean);
  auto& mlp = params_.cau_mlp;
  for (std::size_t layer = 0; layer < mlp.size(); ++layer) {
    z = mlp[layer].forward(z);
    if (layer + 1 < mlp.size()) {
      c.cau_hidden_pre.push_back(z);
      z = relu_forward(z);
    }
  }
  const T gate = sigmoid(params_.lambda);
  c.cau_out.resize(c.mean.size());
  for (std::size_t j = 0; j < c.cau_out.size(); ++j) c.cau_out[j] = z(0, j) + gate * c.mean[j];

  c.fused = fuse(features, c.adapter_out, c.cau_out);
  BasicMatrix<T> out;
  if (params_.normalize_output) {
    c.normalized = normalize_rows_forward(c.fused);
    out = c.normalized->output;
  } else {
    out = c.fused;
  }
  cache_ = std::move(c);
  return out;
}

template <class T>
const CamForwardCache<T>& ContextAwareModule<T>::cache() const {
  if (!cache_) throw Error(ErrorKind::kState, "no CAM forward cache");
  return *cache_;
}

template <class T>
BasicMatrix<T> ContextAwareModule<T>::backward(const BasicMatrix<T>& grad_out) {
  if (!cache_) throw Error(ErrorKind::kState, "CAM backward called without a forward pass");
  CamForwardCache<T> c = std::move(*cache_);
  cache_.reset();
  require_shape(grad_out.rows() == c.fused.rows() && grad_out.cols() == c.fused.cols(),
                "CAM backward gradient shape does not match forward output");

  const BasicMatrix<T> grad_fused = c.normalized ? normalize_rows_backward(grad_out, *c.normalized) : grad_out;
  const std::size_t n = grad_fused.rows();
  const std::size_t d = grad_fused.cols();

  BasicMatrix<T> grad_input(n, d);
  BasicMatrix<T> grad_adapter(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto g = grad_fused.row(i);
    auto gi = grad_input.row(i);
    auto ga = grad_adapter.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      gi[j] = params_.alpha * g[j];
      ga[j] = params_.beta * g[j];
    }
  }

  const BasicMatrix<T> grad_hidden = params_.adapter[1].backward(grad_adapter);
  const BasicMatrix<T> grad_from_adapter =
      params_.adapter[0].backward(relu_backward(grad_hidden, c.adapter_hidden_pre));
  for (std::size_t k = 0; k < grad_input.size(); ++k) grad_input.values()[k] += grad_from_adapter.values()[k];

  // f_CAU is broadcast, so its gradient is the column sum.
  std::vector<T> grad_cau = column_sum(grad_fused);
  for (T& v : grad_cau) v *= params_.gamma;

  const T gate = sigmoid(params_.lambda);
  params_.lambda_grad += gate * (T{1} - gate) * dot<T>(grad_cau, c.mean);

  BasicMatrix<T> g(1, d, grad_cau);
  auto& mlp = params_.cau_mlp;
  for (std::size_t layer = mlp.size(); layer-- > 0;) {
    g = mlp[layer].backward(g);
    if (layer > 0) g = relu_backward(g, c.cau_hidden_pre[layer - 1]);
  }
  std::vector<T> grad_mean(d);
  for (std::size_t j = 0; j < d; ++j) grad_mean[j] = g(0, j) + gate * grad_cau[j];

  if (c.mean_from_batch) {
    const BasicMatrix<T> spread = batch_mean_backward<T>(grad_mean, n);
    for (std::size_t k = 0; k < grad_input.size(); ++k) grad_input.values()[k] += spread.values()[k];
  }
  return grad_input;
}

template struct CamParameters<float>;
template struct CamParameters<double>;
template CamParameters<double> CamParameters<float>::cast<double>() const;
template CamParameters<float> CamParameters<double>::cast<float>() const;
template CamParameters<float> CamParameters<float>::cast<float>() const;
template class ContextAwareModule<float>;
template class ContextAwareModule<double>;

}  // namespace cola
