#include "aecomm/comm.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace aecomm {

std::string to_string(NormalizationMode mode) {
  switch (mode) {
    case NormalizationMode::FixedPower:
      return "fixed";
    case NormalizationMode::AveragePowerBatch:
      return "average-batch";
    case NormalizationMode::AveragePowerAlphabet:
      return "average-alphabet";
  }
  return "unknown";
}

double noise_variance(double power, double snr_db) {
  if (!(power > 0.0)) throw std::invalid_argument("noise_variance: power must be positive");
  return power * std::pow(10.0, -snr_db / 10.0);
}

ChannelParams ChannelParams::from_snr(double snr_db, double power) {
  return ChannelParams{snr_db, power, noise_variance(power, snr_db)};
}

double Constellation::average_power() const {
  double sum = 0.0;
  for (double v : points.values()) sum += v * v;
  return sum / static_cast<double>(points.rows());
}

bool is_power_of_two(std::size_t m) { return m != 0 && (m & (m - 1)) == 0; }

double power_from_eb(std::size_t m, double eb) {
  if (m < 2 || !is_power_of_two(m)) {
    throw std::invalid_argument("power_from_eb: M must be a power of two >= 2");
  }
  if (!(eb > 0.0)) throw std::invalid_argument("power_from_eb: Eb must be positive");
  return eb * std::log2(static_cast<double>(m));
}

namespace {

void require_complex(const Matrix& x, const char* who) {
  if (x.cols() != 2) throw std::invalid_argument(std::string(who) + ": expected N x 2 input");
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(who) + ": shape mismatch");
  }
}

double squared_norm(std::span<const double> r) { return r[0] * r[0] + r[1] * r[1]; }

}  // namespace

Matrix normalize_fixed(const Matrix& x, double power) {
  require_complex(x, "normalize_fixed");
  Matrix out(x.rows(), 2);
  const double amp = std::sqrt(power);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double n2 = squared_norm(x.row(i));
    if (!(n2 > 0.0)) throw DegenerateInputError("normalize_fixed: zero-norm row");
    const double f = amp / std::sqrt(n2);
    out(i, 0) = x(i, 0) * f;
    out(i, 1) = x(i, 1) * f;
  }
  return out;
}

Matrix normalize_fixed_backward(const Matrix& dx_norm, const Matrix& x, double power) {
  require_complex(x, "normalize_fixed_backward");
  require_same_shape(dx_norm, x, "normalize_fixed_backward");
  Matrix dx(x.rows(), 2);
  const double amp = std::sqrt(power);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double n2 = squared_norm(x.row(i));
    if (!(n2 > 0.0)) throw DegenerateInputError("normalize_fixed_backward: zero-norm row");
    const double n = std::sqrt(n2);
    const double dot = dx_norm(i, 0) * x(i, 0) + dx_norm(i, 1) * x(i, 1);
    for (std::size_t c = 0; c < 2; ++c) {
      dx(i, c) = amp / n * (dx_norm(i, c) - x(i, c) * dot / n2);
    }
  }
  return dx;
}

AverageNormalized normalize_average(const Matrix& x, double power) {
  require_complex(x, "normalize_average");
  double q = 0.0;
  for (double v : x.values()) q += v * v;
  if (!(q > 0.0)) throw DegenerateInputError("normalize_average: all-zero input");
  const double s = std::sqrt(static_cast<double>(x.rows()) * power / q);
  AverageNormalized out{Matrix(x.rows(), 2), s};
  auto src = x.values();
  auto dst = out.x.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = s * src[i];
  return out;
}

Matrix normalize_average_backward(const Matrix& dx_norm, const Matrix& x, double scale,
                                  double /*power*/) {
  require_complex(x, "normalize_average_backward");
  require_same_shape(dx_norm, x, "normalize_average_backward");
  auto xv = x.values();
  auto gv = dx_norm.values();
  double q = 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    q += xv[i] * xv[i];
    dot += gv[i] * xv[i];
  }
  if (!(q > 0.0)) throw DegenerateInputError("normalize_average_backward: all-zero input");
  const double coupling = dot / q;
  Matrix dx(x.rows(), 2);
  auto dv = dx.values();
  for (std::size_t i = 0; i < xv.size(); ++i) dv[i] = scale * (gv[i] - xv[i] * coupling);
  return dx;
}

Matrix gather(const Matrix& x, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), x.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= x.rows()) throw std::invalid_argument("gather: index out of range");
    auto src = x.row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

Matrix gather_backward(const Matrix& dx_batch, std::span<const std::size_t> indices, std::size_t m) {
  if (dx_batch.rows() != indices.size()) {
    throw std::invalid_argument("gather_backward: index count mismatch");
  }
  Matrix out(m, dx_batch.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= m) throw std::invalid_argument("gather_backward: index out of range");
    auto src = dx_batch.row(k);
    auto dst = out.row(indices[k]);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
  return out;
}

Matrix one_hot(std::span<const std::size_t> indices, std::size_t m) {
  Matrix out(indices.size(), m);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= m) throw std::invalid_argument("one_hot: index out of range");
    out(k, indices[k]) = 1.0;
  }
  return out;
}

Matrix sample_noise(std::size_t rows, double sigma2, Rng& rng) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sample_noise: sigma2 must be positive");
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma2 / 2.0));
  Matrix z(rows, 2);
  for (double& v : z.values()) v = normal(rng);
  return z;
}

Matrix awgn(const Matrix& x, double sigma2, Rng& rng) {
  require_complex(x, "awgn");
  Matrix y = sample_noise(x.rows(), sigma2, rng);
  auto yv = y.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] += xv[i];
  return y;
}

std::vector<std::size_t> decode(const Matrix& logits) {
  std::vector<std::size_t> out(logits.rows(), 0);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto r = logits.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[i] = best;
  }
  return out;
}

Constellation qpsk(double power) {
  const double a = std::sqrt(power / 2.0);
  return Constellation{Matrix{{a, a}, {-a, a}, {-a, -a}, {a, -a}}, power};
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_constellation_csv(std::ostream& os, const Constellation& c) {
  os << "index,re,im\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    os << i << ',' << format_real(c.points(i, 0)) << ',' << format_real(c.points(i, 1)) << '\n';
  }
}

}  // namespace aecomm
