#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfb {

// Dense point in R^d; the dimension is the vector length.
using Point = std::vector<double>;

inline void check_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b)
    throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
}

inline void check_same_dim(const Point& a, const Point& b, const char* where) {
  check_same_dim(a.size(), b.size(), where);
}

inline void validate_finite(const Point& p, const char* what) {
  for (double x : p)
    if (!std::isfinite(x))
      throw std::invalid_argument(std::string(what) + ": non-finite coordinate");
}

inline double dot(const Point& a, const Point& b) {
  check_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(const Point& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

inline double norm(const Point& a) { return std::sqrt(norm_sq(a)); }

inline double distance_sq(const Point& a, const Point& b) {
  check_same_dim(a, b, "distance_sq");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double distance(const Point& a, const Point& b) {
  return std::sqrt(distance_sq(a, b));
}

// alpha*a + beta*b
inline Point combine(double alpha, const Point& a, double beta, const Point& b) {
  check_same_dim(a, b, "combine");
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = alpha * a[i] + beta * b[i];
  return r;
}

// a + t*b
inline Point add_scaled(const Point& a, double t, const Point& b) {
  check_same_dim(a, b, "add_scaled");
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + t * b[i];
  return r;
}

inline Point scaled(const Point& a, double t) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = t * a[i];
  return r;
}

inline Point subtract(const Point& a, const Point& b) {
  return combine(1.0, a, -1.0, b);
}

}  // namespace sfb
