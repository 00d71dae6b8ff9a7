#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "sfb/point.hpp"

namespace sfb {

// Small dense row-major matrix. Everything here targets desk-scale dimensions;
// eigenvalue bounds come from power iteration, not a factorization library.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }

  double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  Point apply(const Point& x) const {
    if (x.size() != cols)
      throw std::invalid_argument("Matrix::apply: dimension mismatch");
    Point r(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) s += at(i, j) * x[j];
      r[i] = s;
    }
    return r;
  }

  Point apply_transposed(const Point& x) const {
    if (x.size() != rows)
      throw std::invalid_argument("Matrix::apply_transposed: dimension mismatch");
    Point r(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) r[j] += at(i, j) * x[i];
    return r;
  }

  Matrix transposed() const {
    Matrix t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
    return t;
  }

  bool square() const { return rows == cols; }
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("Matrix product: dimension mismatch");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double v = a.at(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) c.at(i, j) += v * b.at(k, j);
    }
  return c;
}

inline Matrix symmetric_part(const Matrix& m) {
  if (!m.square()) throw std::invalid_argument("symmetric_part: square matrix required");
  Matrix s(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      s.at(i, j) = 0.5 * (m.at(i, j) + m.at(j, i));
  return s;
}

inline bool is_symmetric(const Matrix& m, double tol = 1e-12) {
  if (!m.square()) return false;
  double scale = 0.0;
  for (double v : m.a) scale = std::max(scale, std::fabs(v));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = i + 1; j < m.cols; ++j)
      if (std::fabs(m.at(i, j) - m.at(j, i)) > tol * std::max(1.0, scale)) return false;
  return true;
}

namespace detail {

// Largest eigenvalue of a symmetric positive semidefinite matrix via power
// iteration: deterministic start vector, relative tolerance 1e-10, at most
// 10^4 iterations. Returns 0 for the zero matrix.
inline double lambda_max_psd(const Matrix& s) {
  const std::size_t n = s.rows;
  Point v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 / static_cast<double>(i + 1);
  double lam = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Point w = s.apply(v);
    const double nw = norm(w);
    if (nw == 0.0) return 0.0;
    for (auto& x : w) x /= nw;
    const double lam_new = dot(w, s.apply(w));
    if (std::fabs(lam_new - lam) <= 1e-10 * std::fabs(lam_new)) return lam_new;
    lam = lam_new;
    v = std::move(w);
  }
  return lam;
}

}  // namespace detail

// sqrt(lambda_max(M^T M))
inline double operator_norm(const Matrix& m) {
  Matrix mtm = m.transposed() * m;
  return std::sqrt(std::max(0.0, detail::lambda_max_psd(mtm)));
}

// Extreme eigenvalues of a symmetric matrix, possibly indefinite. Shift by the
// spectral radius so power iteration always sees a PSD matrix.
inline double sym_eigen_min(const Matrix& s) {
  const double rho = std::sqrt(std::max(0.0, detail::lambda_max_psd(s * s)));
  if (rho == 0.0) return 0.0;
  Matrix shifted(s.rows, s.cols);
  for (std::size_t i = 0; i < s.rows; ++i)
    for (std::size_t j = 0; j < s.cols; ++j)
      shifted.at(i, j) = (i == j ? rho : 0.0) - s.at(i, j);
  return rho - detail::lambda_max_psd(shifted);
}

inline double sym_eigen_max(const Matrix& s) {
  const double rho = std::sqrt(std::max(0.0, detail::lambda_max_psd(s * s)));
  if (rho == 0.0) return 0.0;
  Matrix shifted(s.rows, s.cols);
  for (std::size_t i = 0; i < s.rows; ++i)
    for (std::size_t j = 0; j < s.cols; ++j)
      shifted.at(i, j) = s.at(i, j) + (i == j ? rho : 0.0);
  return detail::lambda_max_psd(shifted) - rho;
}

}  // namespace sfb
