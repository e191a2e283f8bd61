#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "adsm/error.hpp"

namespace adsm {

/// Dense row-major matrix of doubles. The shared currency of the pipeline:
/// per-clip feature matrices, centroid tables, tag matrices, embedding stacks.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool empty() const { return rows == 0 || cols == 0; }

  bool operator==(const Matrix&) const = default;

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// Stack matrices with equal column counts on top of each other.
  static Matrix vstack(std::span<const Matrix> parts) {
    Matrix out;
    for (const Matrix& m : parts) {
      if (m.empty()) continue;
      if (out.cols == 0) out.cols = m.cols;
      if (m.cols != out.cols) throw ShapeError("vstack: column count mismatch");
      out.rows += m.rows;
      out.data.insert(out.data.end(), m.data.begin(), m.data.end());
    }
    return out;
  }
};

inline double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

inline double norm(std::span<const double> u) {
  double s = 0.0;
  for (double x : u) s += x * x;
  return std::sqrt(s);
}

inline double squared_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("squared_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return s;
}

/// Cosine similarity. Returns 0 when either vector has zero norm; that
/// convention keeps silence-like clips rankable instead of erroring.
inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("cosine: length mismatch");
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

}  // namespace adsm
