#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cola/layers.hpp"

namespace cola {

/// eta_min + (eta_max - eta_min)(1 + cos(pi * epoch / total)) / 2.
double cosine_lr(std::size_t epoch, std::size_t total, double eta_max, double eta_min = 0.0);

/// SGD with heavy-ball momentum and L2 weight decay folded into the velocity:
///   v <- momentum * v + grad + weight_decay * param
///   param <- param - lr * v
template <class T>
class SgdState {
 public:
  SgdState(double learning_rate_max, double momentum, double weight_decay, std::size_t total_epochs);

  double learning_rate_max() const noexcept { return learning_rate_max_; }
  double momentum() const noexcept { return momentum_; }
  double weight_decay() const noexcept { return weight_decay_; }
  std::size_t epoch_index() const noexcept { return epoch_index_; }
  std::size_t total_epochs() const noexcept { return total_epochs_; }
  void set_epoch(std::size_t epoch);

  /// cosine_lr(epoch_index, total_epochs, learning_rate_max, 0).
  double learning_rate() const;

  /// Applies one update to every parameter and zeroes its gradient. Velocity
  /// buffers are created on the first call and must keep the same shapes.
  void step(std::span<const ParamRef<T>> params);

  const std::vector<std::vector<T>>& velocity() const noexcept { return velocity_; }

 private:
  double learning_rate_max_;
  double momentum_;
  double weight_decay_;
  std::size_t epoch_index_ = 0;
  std::size_t total_epochs_;
  std::vector<std::vector<T>> velocity_;
};

}  // namespace cola
