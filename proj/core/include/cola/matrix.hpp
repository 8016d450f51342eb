#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cola/error.hpp"

namespace cola {

/// Dense row-major matrix. `T` is float in production and double in the
/// gradient-check builds.
template <class T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw Error(ErrorKind::kShape, "matrix data length " + std::to_string(data_.size()) +
                                         " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const noexcept {
    for (T v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  /// Rows `indices` gathered in order.
  BasicMatrix gather_rows(std::span<const std::size_t> indices) const;

  template <class U>
  BasicMatrix<U> cast() const {
    BasicMatrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.values()[i] = static_cast<U>(data_[i]);
    return out;
  }

  friend bool operator==(const BasicMatrix& a, const BasicMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<float>;

template <class T>
BasicMatrix<T> BasicMatrix<T>::gather_rows(std::span<const std::size_t> indices) const {
  BasicMatrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) {
      throw Error(ErrorKind::kIndex, "row index " + std::to_string(indices[i]) + " out of range");
    }
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

// Products. Every reduction runs in ascending index order so results are
// reproducible bit-for-bit on one platform.

/// a (n x k) * b (k x m)
template <class T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

/// a^T (k x n)^T * b (k x m) -> (n x m)
template <class T>
BasicMatrix<T> matmul_transpose_a(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

/// a (n x k) * b^T (m x k)^T -> (n x m)
template <class T>
BasicMatrix<T> matmul_transpose_b(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

template <class T>
std::vector<T> column_sum(const BasicMatrix<T>& m);

template <class T>
T dot(std::span<const T> a, std::span<const T> b) {
  T acc{0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void require_shape(bool ok, const std::string& what);

}  // namespace cola
