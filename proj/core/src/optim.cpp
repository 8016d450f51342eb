#include "cola/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cola {

double cosine_lr(std::size_t epoch, std::size_t total, double eta_max, double eta_min) {
  if (total == 0) throw Error(ErrorKind::kRange, "cosine schedule needs at least one epoch");
  if (epoch > total) {
    throw Error(ErrorKind::kRange,
                "epoch " + std::to_string(epoch) + " beyond schedule length " + std::to_string(total));
  }
  const double phase = std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(total);
  return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(phase));
}

template <class T>
SgdState<T>::SgdState(double learning_rate_max, double momentum, double weight_decay, std::size_t total_epochs)
    : learning_rate_max_(learning_rate_max),
      momentum_(momentum),
      weight_decay_(weight_decay),
      total_epochs_(total_epochs) {
  if (!(learning_rate_max > 0.0)) throw Error(ErrorKind::kParameter, "learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorKind::kParameter, "momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw Error(ErrorKind::kParameter, "weight decay must be nonnegative");
  if (total_epochs == 0) throw Error(ErrorKind::kParameter, "total epochs must be at least 1");
}

template <class T>
void SgdState<T>::set_epoch(std::size_t epoch) {
  if (epoch > total_epochs_) throw Error(ErrorKind::kRange, "epoch index beyond schedule");
  epoch_index_ = epoch;
}

template <class T>
double SgdState<T>::learning_rate() const {
  return cosine_lr(epoch_index_, total_epochs_, learning_rate_max_, 0.0);
}

template <class T>
void SgdState<T>::step(std::span<const ParamRef<T>> params) {
  if (velocity_.empty()) {
    velocity_.reserve(params.size());
    for (const auto& p : params) velocity_.emplace_back(p.value.size(), T{0});
  }
  require_shape(velocity_.size() == params.size(), "optimizer saw a different parameter count");
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_shape(params[k].value.size() == velocity_[k].size() && params[k].grad.size() == params[k].value.size(),
                  "optimizer parameter " + std::to_string(k) + " changed shape");
  }

  const T lr = static_cast<T>(learning_rate());
  const T mom = static_cast<T>(momentum_);
  const T wd = static_cast<T>(weight_decay_);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto value = params[k].value;
    auto grad = params[k].grad;
    auto& vel = velocity_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      vel[i] = mom * vel[i] + grad[i] + wd * value[i];
      value[i] -= lr * vel[i];
    }
    std::fill(grad.begin(), grad.end(), T{0});
  }
}

template class SgdState<float>;
template class SgdState<double>;

}  // namespace cola
