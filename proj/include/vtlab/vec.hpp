#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace vtlab {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(const Vec& a) { return dot(a, a); }

inline double norm(const Vec& a) { return std::sqrt(norm_sq(a)); }

inline double norm_inf(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline void axpy(double alpha, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline double dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool all_finite(const Vec& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Largest 1-based index of a non-zero coordinate, 0 for the zero vector.
inline int progress_index(const Vec& x) {
  for (int i = static_cast<int>(x.size()); i >= 1; --i) {
    if (x[static_cast<std::size_t>(i - 1)] != 0.0) return i;
  }
  return 0;
}

inline std::vector<int> support(const Vec& x) {
  std::vector<int> s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) s.push_back(static_cast<int>(i));
  }
  return s;
}

// Dense row-major matrix, just enough for datasets and small references.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  const double* row(std::size_t r) const { return data.data() + r * cols; }
};

}  // namespace vtlab
