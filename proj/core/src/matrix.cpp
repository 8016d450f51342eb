#include "cola/matrix.hpp"

namespace cola {

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kShape, what);
}

namespace {

std::string dims(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

template <class T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  require_shape(a.cols() == b.rows(), "matmul " + dims(a.rows(), a.cols()) + " * " + dims(b.rows(), b.cols()));
  BasicMatrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

template <class T>
BasicMatrix<T> matmul_transpose_a(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  require_shape(a.rows() == b.rows(),
                "matmul_transpose_a " + dims(a.rows(), a.cols()) + "^T * " + dims(b.rows(), b.cols()));
  BasicMatrix<T> out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const T aki = arow[i];
      auto dst = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aki * brow[j];
    }
  }
  return out;
}

template <class T>
BasicMatrix<T> matmul_transpose_b(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  require_shape(a.cols() == b.cols(),
                "matmul_transpose_b " + dims(a.rows(), a.cols()) + " * " + dims(b.rows(), b.cols()) + "^T");
  BasicMatrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot<T>(a.row(i), b.row(j));
  }
  return out;
}

template <class T>
std::vector<T> column_sum(const BasicMatrix<T>& m) {
  std::vector<T> out(m.cols(), T{0});
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += r[j];
  }
  return out;
}

template BasicMatrix<float> matmul(const BasicMatrix<float>&, const BasicMatrix<float>&);
template BasicMatrix<double> matmul(const BasicMatrix<double>&, const BasicMatrix<double>&);
template BasicMatrix<float> matmul_transpose_a(const BasicMatrix<float>&, const BasicMatrix<float>&);
template BasicMatrix<double> matmul_transpose_a(const BasicMatrix<double>&, const BasicMatrix<double>&);
template BasicMatrix<float> matmul_transpose_b(const BasicMatrix<float>&, const BasicMatrix<float>&);
template BasicMatrix<double> matmul_transpose_b(const BasicMatrix<double>&, const BasicMatrix<double>&);
template std::vector<float> column_sum(const BasicMatrix<float>&);
template std::vector<double> column_sum(const BasicMatrix<double>&);

}  // namespace cola
