#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nubox/error.hpp"

namespace nubox {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Small and value-semantic; the networks
/// handled here rarely exceed a few hundred neurons per layer.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                           " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Vector matvec(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) {
    throw DimensionError("matvec: matrix has " + std::to_string(m.cols()) +
                         " columns, vector has " + std::to_string(x.size()));
  }
  Vector out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
  return out;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

// m * diag(d): scales column c by d[c].
inline Matrix scale_columns(const Matrix& m, std::span<const double> d) {
  if (d.size() != m.cols()) throw DimensionError("scale_columns: length mismatch");
  Matrix out = m;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] *= d[c];
  }
  return out;
}

// diag(d) * m: scales row r by d[r].
inline Matrix scale_rows(const Matrix& m, std::span<const double> d) {
  if (d.size() != m.rows()) throw DimensionError("scale_rows: length mismatch");
  Matrix out = m;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (double& v : out.row(r)) v *= d[r];
  return out;
}

inline Matrix abs(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = std::fabs(v);
  return out;
}

struct PosNegSplit {
  Matrix pos;
  Matrix neg;
};

/// Splits M into its positive part max(M, 0) and negative part min(M, 0).
inline PosNegSplit split_pos_neg(const Matrix& m) {
  PosNegSplit s{Matrix(m.rows(), m.cols()), Matrix(m.rows(), m.cols())};
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    const double v = m.data()[i];
    if (v > 0.0) s.pos.data()[i] = v;
    else if (v < 0.0) s.neg.data()[i] = v;
  }
  return s;
}

inline void add_in_place(Vector& a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("vector add: length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

inline void add_in_place(Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("matrix add: shape mismatch");
  for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] += b.data()[i];
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace nubox
