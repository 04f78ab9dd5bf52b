#ifndef SMT_DENSE_HPP
#define SMT_DENSE_HPP

#include <cstddef>
#include <vector>

#include "smt/errors.hpp"

namespace smt {

using Vector = std::vector<double>;

// Row-major dense matrix. Kept deliberately small: the library only needs
// plain products with a fixed, reproducible accumulation order.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// C = A * B. Accumulates over the inner index in ascending order.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeMismatch("matmul: inner dimensions disagree");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// C = A^T * B (A is rows x m, B is rows x n, C is m x n).
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeMismatch("matmul_at_b: row counts disagree");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(k, j) += aik * b(i, j);
    }
  return c;
}

// C = A * B^T (A is rows x m, B is n x m, C is rows x n).
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeMismatch("matmul_a_bt: column counts disagree");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  return c;
}

inline void add_row_vector(Matrix& m, const Vector& v) {
  if (m.cols() != v.size()) throw ShapeMismatch("add_row_vector: size disagrees");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += v[j];
}

inline Vector column_sums(const Matrix& m) {
  Vector s(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s[j] += m(i, j);
  return s;
}

inline void hadamard_in_place(Matrix& m, const Matrix& mask) {
  if (!m.same_shape(mask)) throw ShapeMismatch("hadamard: shapes disagree");
  for (std::size_t i = 0; i < m.data().size(); ++i) m.data()[i] *= mask.data()[i];
}

inline void add_in_place(Matrix& acc, const Matrix& other) {
  if (!acc.same_shape(other)) throw ShapeMismatch("add_in_place: shapes disagree");
  for (std::size_t i = 0; i < acc.data().size(); ++i) acc.data()[i] += other.data()[i];
}

inline void add_in_place(Vector& acc, const Vector& other) {
  if (acc.size() != other.size()) throw ShapeMismatch("add_in_place: sizes disagree");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += other[i];
}

}  // namespace smt

#endif  // SMT_DENSE_HPP
