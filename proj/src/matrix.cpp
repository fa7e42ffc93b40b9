#include "aecomm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace aecomm {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw std::invalid_argument("Matrix: ragged initializer");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace kernels {

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace

// Register-blocked product out = op(a) * b, where op(a)(i, k) is a(i, k) or
// a(k, i). Every output entry accumulates over k in increasing order, the
// same order as the sparse path, so both paths give identical bits.
template <bool TransA>
void blocked_product(const double* a, std::size_t lda, const double* b, std::size_t n,
                     double* out, std::size_t m, std::size_t depth) {
  constexpr std::size_t kRows = 4;
  constexpr std::size_t kCols = 8;
  auto at = [&](std::size_t i, std::size_t k) { return TransA ? a[k * lda + i] : a[i * lda + k]; };

  // Row panels of op(a) are read as panel[k * stride + r].
  std::vector<double> packed(TransA ? 0 : depth * kRows);
  std::size_t i0 = 0;
  for (; i0 + kRows <= m; i0 += kRows) {
    const double* panel = a + i0;
    std::size_t stride = lda;
    if constexpr (!TransA) {
      for (std::size_t r = 0; r < kRows; ++r) {
        for (std::size_t k = 0; k < depth; ++k) packed[k * kRows + r] = a[(i0 + r) * lda + k];
      }
      panel = packed.data();
      stride = kRows;
    }
    std::size_t j0 = 0;
    for (; j0 + kCols <= n; j0 += kCols) {
      double acc[kRows][kCols] = {};
      for (std::size_t k = 0; k < depth; ++k) {
        const double* br = b + k * n + j0;
        const double* av = panel + k * stride;
        for (std::size_t r = 0; r < kRows; ++r) {
          for (std::size_t c = 0; c < kCols; ++c) acc[r][c] += av[r] * br[c];
        }
      }
      for (std::size_t r = 0; r < kRows; ++r) {
        for (std::size_t c = 0; c < kCols; ++c) out[(i0 + r) * n + j0 + c] = acc[r][c];
      }
    }
    for (std::size_t r = 0; r < kRows && j0 < n; ++r) {
      double* o = out + (i0 + r) * n;
      for (std::size_t j = j0; j < n; ++j) o[j] = 0.0;
      for (std::size_t k = 0; k < depth; ++k) {
        const double av = at(i0 + r, k);
        const double* br = b + k * n;
        for (std::size_t j = j0; j < n; ++j) o[j] += av * br[j];
      }
    }
  }
  for (; i0 < m; ++i0) {
    double* o = out + i0 * n;
    for (std::size_t j = 0; j < n; ++j) o[j] = 0.0;
    for (std::size_t k = 0; k < depth; ++k) {
      const double av = at(i0, k);
      const double* br = b + k * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
}

// Share of nonzero entries below which the zero-skipping path wins.
constexpr double kSparseDensity = 0.25;

bool is_sparse(const Matrix& a) {
  if (a.empty()) return true;
  std::size_t nnz = 0;
  for (double v : a.values()) nnz += v != 0.0;
  return static_cast<double>(nnz) < kSparseDensity * static_cast<double>(a.size());
}

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.cols() == b.rows() && out.rows() == a.rows() && out.cols() == b.cols(),
          "matmul: shape mismatch");
  if (!is_sparse(a)) {
    blocked_product<false>(a.values().data(), a.cols(), b.values().data(), b.cols(),
                           out.values().data(), out.rows(), b.rows());
    return;
  }
  const std::size_t n = b.cols();
  out.fill(0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    const auto ar = a.row(i);
    for (std::size_t k = 0; k < ar.size(); ++k) {
      const double aik = ar[k];
      if (aik == 0.0) continue;
      const double* br = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * br[j];
    }
  }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.rows() == b.rows() && out.rows() == a.cols() && out.cols() == b.cols(),
          "matmul_tn: shape mismatch");
  if (!is_sparse(a)) {
    blocked_product<true>(a.values().data(), a.cols(), b.values().data(), b.cols(),
                          out.values().data(), out.rows(), b.rows());
    return;
  }
  const std::size_t n = b.cols();
  out.fill(0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto ar = a.row(r);
    const double* br = b.row(r).data();
    for (std::size_t i = 0; i < ar.size(); ++i) {
      const double ari = ar[i];
      if (ari == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += ari * br[j];
    }
  }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.cols() == b.cols() && out.rows() == a.rows() && out.cols() == b.rows(),
          "matmul_nt: shape mismatch");
  // Transposed copy keeps the inner loop contiguous.
  Matrix bt(b.cols(), b.rows());
  for (std::size_t r = 0; r < b.rows(); ++r) {
    for (std::size_t c = 0; c < b.cols(); ++c) bt(c, r) = b(r, c);
  }
  matmul(a, bt, out);
}

}  // namespace kernels
}  // namespace aecomm
