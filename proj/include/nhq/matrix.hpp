#pragma once

#include "nhq/complex.hpp"

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace nhq {

/// Dense row-major matrix over a real or complex scalar.
template <class T>
class Matrix {
public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, scalar_zero<T>()) {}
  Matrix(std::size_t rows, std::size_t cols, const T& fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = scalar_one<T>();
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r ? rows.begin()->size() : 0;
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw std::invalid_argument("Matrix::from_rows: ragged rows");
      std::size_t j = 0;
      for (const auto& v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  const T& operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  T* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const T* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(const T& s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, const T& s) { return a *= s; }
  friend Matrix operator*(const T& s, Matrix a) { return a *= s; }
  friend Matrix operator-(Matrix a) {
    for (auto& v : a.data_) v = -v;
    return a;
  }

  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) throw std::out_of_range("Matrix::block");
    Matrix m(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) m(i, j) = (*this)(r0 + i, c0 + j);
    return m;
  }

  void set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
    if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) throw std::out_of_range("Matrix::set_block");
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
  }

  /// Rows and columns picked by index lists.
  Matrix select(const std::vector<std::size_t>& ri, const std::vector<std::size_t>& ci) const {
    Matrix m(ri.size(), ci.size());
    for (std::size_t i = 0; i < ri.size(); ++i)
      for (std::size_t j = 0; j < ci.size(); ++j) m(i, j) = (*this)(ri[i], ci[j]);
    return m;
  }

private:
  void check_same(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("Matrix: shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <class R>
using CMatrix = Matrix<Complex<R>>;
template <class R>
using RMatrix = Matrix<R>;

template <class T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

template <class T>
Matrix<T> adjoint(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = conj(a(i, j));
  return t;
}

template <class T>
Matrix<T> conjugate(const Matrix<T>& a) {
  Matrix<T> t = a;
  for (auto& v : t.storage()) v = conj(v);
  return t;
}

/// Plain i-k-j product; the multiprecision complex case is overridden in
/// gemm.hpp with a fixed-point kernel.
template <class T>
Matrix<T> multiply_naive(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
  Matrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* ci = c.row_ptr(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T& aik = a(i, k);
      if (is_zero(aik)) continue;
      const T* bk = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols(); ++j) mac(ci[j], aik, bk[j]);
    }
  }
  return c;
}

template <class T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b);

template <class T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
  return multiply(a, b);
}

template <class T>
std::vector<T> apply(const Matrix<T>& a, const std::vector<T>& x) {
  if (a.cols() != x.size()) throw std::invalid_argument("apply: dimension mismatch");
  std::vector<T> y(a.rows(), scalar_zero<T>());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const T* ai = a.row_ptr(i);
    for (std::size_t k = 0; k < a.cols(); ++k) mac(y[i], ai[k], x[k]);
  }
  return y;
}

template <class T>
real_t<T> frobenius_norm(const Matrix<T>& a) {
  using std::sqrt;
  real_t<T> s = from_int<real_t<T>>(0);
  for (const auto& v : a.storage()) s += norm2(v);
  return sqrt(s);
}

/// Largest entry magnitude (max of |re|, |im| per entry).
template <class T>
real_t<T> max_abs(const Matrix<T>& a) {
  real_t<T> m = from_int<real_t<T>>(0);
  for (const auto& v : a.storage()) {
    real_t<T> x = abs1(v);
    if (x > m) m = x;
  }
  return m;
}

/// Max absolute row sum.
template <class T>
real_t<T> inf_norm(const Matrix<T>& a) {
  real_t<T> m = from_int<real_t<T>>(0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    real_t<T> s = from_int<real_t<T>>(0);
    for (std::size_t j = 0; j < a.cols(); ++j) s += abs1(a(i, j));
    if (s > m) m = s;
  }
  return m;
}

/// Max absolute column sum.
template <class T>
real_t<T> one_norm(const Matrix<T>& a) {
  real_t<T> m = from_int<real_t<T>>(0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    real_t<T> s = from_int<real_t<T>>(0);
    for (std::size_t i = 0; i < a.rows(); ++i) s += abs1(a(i, j));
    if (s > m) m = s;
  }
  return m;
}

/// max |a - b| entrywise.
template <class T>
real_t<T> max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
  return max_abs(a - b);
}

template <class T>
bool all_finite(const Matrix<T>& a) {
  for (const auto& v : a.storage()) {
    if (!is_finite(real_part(v)) || !is_finite(imag_part(v))) return false;
  }
  return true;
}

/// Embeds a real matrix into the complex type.
template <class R>
CMatrix<R> complexify(const RMatrix<R>& a) {
  CMatrix<R> c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = Complex<R>(a(i, j));
  return c;
}

/// Converts between real types (e.g. double -> Mp) entrywise.
template <class To, class From>
CMatrix<To> convert(const CMatrix<From>& a) {
  CMatrix<To> c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if constexpr (std::is_same_v<To, From>) {
        c(i, j) = a(i, j);
      } else if constexpr (is_mp_v<To>) {
        c(i, j) = Complex<To>(To(a(i, j).re), To(a(i, j).im));
      } else {
        c(i, j) = Complex<To>(to_double(a(i, j).re), to_double(a(i, j).im));
      }
    }
  return c;
}

}  // namespace nhq
