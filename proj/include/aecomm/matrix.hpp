#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace aecomm {

/// Dense row-major matrix of doubles. Rows index batch or alphabet items,
/// columns index features.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace kernels {

// All kernels overwrite `out`, which must already have the right shape.
// Zero entries of the left operand are skipped, so one-hot inputs cost a
// row gather rather than a full product.

/// out = a * b
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
/// out = a^T * b
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
/// out = a * b^T
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);

}  // namespace kernels

}  // namespace aecomm
