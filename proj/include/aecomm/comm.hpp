#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aecomm/matrix.hpp"
#include "aecomm/random.hpp"

namespace aecomm {

/// Raised when a normalization would divide by a zero norm.
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class NormalizationMode { FixedPower, AveragePowerBatch, AveragePowerAlphabet };

std::string to_string(NormalizationMode mode);

/// AWGN channel setting. SNR is defined as P / sigma2.
struct ChannelParams {
  double snr_db = 0.0;
  double power = 1.0;
  double sigma2 = 1.0;

  static ChannelParams from_snr(double snr_db, double power);
};

double noise_variance(double power, double snr_db);

/// M complex points stored as an M x 2 matrix (re, im).
struct Constellation {
  Matrix points;
  double power = 1.0;

  std::size_t size() const { return points.rows(); }
  double average_power() const;
};

bool is_power_of_two(std::size_t m);

/// P = Eb * log2(M).
double power_from_eb(std::size_t m, double eb);

/// Scales every row to |x_i|^2 = P.
Matrix normalize_fixed(const Matrix& x, double power);
Matrix normalize_fixed_backward(const Matrix& dx_norm, const Matrix& x, double power);

struct AverageNormalized {
  Matrix x;
  double scale = 1.0;
};

/// Scales all rows by one factor s so that the mean row power is P.
AverageNormalized normalize_average(const Matrix& x, double power);

/// dX_j = s (dX'_j - x_j <dX', X> / Q), Q = sum_k |x_k|^2. Every row of the
/// result depends on every row of dX'.
Matrix normalize_average_backward(const Matrix& dx_norm, const Matrix& x, double scale,
                                  double power);

/// Row k of the result is row indices[k] of `x`. Duplicates are allowed.
Matrix gather(const Matrix& x, std::span<const std::size_t> indices);

/// Scatter-add of batch rows back into an `m`-row matrix.
Matrix gather_backward(const Matrix& dx_batch, std::span<const std::size_t> indices, std::size_t m);

/// Rows of the m x m identity selected by `indices`.
Matrix one_hot(std::span<const std::size_t> indices, std::size_t m);

/// i.i.d. complex Gaussian noise with total variance sigma2 (sigma2/2 per component).
Matrix sample_noise(std::size_t rows, double sigma2, Rng& rng);

Matrix awgn(const Matrix& x, double sigma2, Rng& rng);

/// Row-wise argmax; ties go to the lowest index.
std::vector<std::size_t> decode(const Matrix& logits);

/// QPSK at (+-a, +-a) with 2a^2 = P.
Constellation qpsk(double power);

/// CSV with header `index,re,im` and 17 significant digits.
void write_constellation_csv(std::ostream& os, const Constellation& c);

/// "%.17g" formatting used by every numeric output.
std::string format_real(double v);

}  // namespace aecomm
