#include "aecomm/metrics.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "aecomm/train.hpp"

namespace aecomm {

namespace {

double mean_distance(const Matrix& a, const Matrix& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double dr = a(i, 0) - b(i, 0);
    const double di = a(i, 1) - b(i, 1);
    sum += std::sqrt(dr * dr + di * di);
  }
  return sum / static_cast<double>(a.rows());
}

int resolve_workers(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

// Exceptions must not escape an OpenMP region; keep the first and rethrow.
class FirstError {
 public:
  template <class F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
#pragma omp critical(aecomm_first_error)
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

}  // namespace

double normalization_error(const MlpParams& tx, std::span<const std::size_t> batch, std::size_t m,
                           double power) {
  if (batch.empty()) throw std::invalid_argument("normalization_error: empty batch");
  Matrix batch_scope = normalize_average(mlp_apply(one_hot(batch, m), tx), power).x;
  Matrix alphabet_scope =
      gather(normalize_average(mlp_apply(Matrix::identity(m), tx), power).x, batch);
  return mean_distance(batch_scope, alphabet_scope);
}

AlphabetOutputs alphabet_outputs(const MlpParams& tx, std::size_t m, double power) {
  AlphabetOutputs out{mlp_apply(Matrix::identity(m), tx), 1.0, power};
  out.scale = normalize_average(out.raw, power).scale;
  return out;
}

double normalization_error(const AlphabetOutputs& alphabet, std::span<const std::size_t> batch) {
  if (batch.empty()) throw std::invalid_argument("normalization_error: empty batch");
  Matrix raw = gather(alphabet.raw, batch);
  Matrix batch_scope = normalize_average(raw, alphabet.power).x;
  for (double& v : raw.values()) v *= alphabet.scale;
  return mean_distance(batch_scope, raw);
}

namespace {

Rng cell_rng(std::uint64_t seed, Stream stream, std::size_t m, std::size_t init, std::size_t bs) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),  static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(m),
                    static_cast<std::uint32_t>(init),   static_cast<std::uint32_t>(bs)};
  return Rng(seq);
}

// Mean error over n_batches for every batch size, for one (M, init) cell.
std::vector<double> norm_error_cell(const NormErrorSweep& sweep, std::size_t m, std::size_t init) {
  Rng init_rng = cell_rng(sweep.seed, Stream::Init, m, init, 0);
  MlpParams tx = make_mlp(m, sweep.tx_hidden, 2, init_rng);
  const auto alphabet = alphabet_outputs(tx, m, power_from_eb(m, sweep.eb));
  std::vector<double> means;
  means.reserve(sweep.batch_sizes.size());
  for (std::size_t bs : sweep.batch_sizes) {
    Rng rng = cell_rng(sweep.seed, Stream::Sweep, m, init, bs);
    double sum = 0.0;
    for (std::size_t k = 0; k < sweep.n_batches; ++k) {
      sum += normalization_error(alphabet, sample_batch(m, bs, rng));
    }
    means.push_back(sum / static_cast<double>(sweep.n_batches));
  }
  return means;
}

void check_sweep(const NormErrorSweep& sweep) {
  if (sweep.m_values.empty() || sweep.batch_sizes.empty()) {
    throw std::invalid_argument("norm_error_experiment: empty sweep");
  }
  if (sweep.n_inits == 0 || sweep.n_batches == 0) {
    throw std::invalid_argument("norm_error_experiment: n_inits and n_batches must be >= 1");
  }
  for (auto bs : sweep.batch_sizes) {
    if (bs == 0) throw std::invalid_argument("norm_error_experiment: batch size 0");
  }
  for (auto m : sweep.m_values) power_from_eb(m, sweep.eb);
}

// cells[mi * n_inits + init][bsi] holds one init's mean error; reduce over inits.
std::vector<NormErrorStats> reduce_cells(const NormErrorSweep& sweep,
                                         const std::vector<std::vector<double>>& cells) {
  std::vector<NormErrorStats> rows;
  const double n = static_cast<double>(sweep.n_inits);
  for (std::size_t mi = 0; mi < sweep.m_values.size(); ++mi) {
    for (std::size_t bi = 0; bi < sweep.batch_sizes.size(); ++bi) {
      double sum = 0.0;
      for (std::size_t init = 0; init < sweep.n_inits; ++init) {
        sum += cells[mi * sweep.n_inits + init][bi];
      }
      const double mean = sum / n;
      double ss = 0.0;
      for (std::size_t init = 0; init < sweep.n_inits; ++init) {
        const double d = cells[mi * sweep.n_inits + init][bi] - mean;
        ss += d * d;
      }
      const double se = sweep.n_inits > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
      rows.push_back(NormErrorStats{sweep.m_values[mi], sweep.batch_sizes[bi], sweep.eb, mean, se,
                                    sweep.n_inits, sweep.n_batches});
    }
  }
  return rows;
}

}  // namespace

std::vector<NormErrorStats> norm_error_experiment_serial(const NormErrorSweep& sweep) {
  check_sweep(sweep);
  std::vector<std::vector<double>> cells(sweep.m_values.size() * sweep.n_inits);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    cells[c] = norm_error_cell(sweep, sweep.m_values[c / sweep.n_inits], c % sweep.n_inits);
  }
  return reduce_cells(sweep, cells);
}

std::vector<NormErrorStats> norm_error_experiment(const NormErrorSweep& sweep, int workers) {
  check_sweep(sweep);
  const auto n_cells = static_cast<std::int64_t>(sweep.m_values.size() * sweep.n_inits);
  std::vector<std::vector<double>> cells(static_cast<std::size_t>(n_cells));
  FirstError error;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_workers(workers))
  for (std::int64_t c = 0; c < n_cells; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    error.run([&] {
      cells[cu] = norm_error_cell(sweep, sweep.m_values[cu / sweep.n_inits], cu % sweep.n_inits);
    });
  }
  error.rethrow();
  return reduce_cells(sweep, cells);
}

double validation_accuracy(const MlpParams& tx, const MlpParams& rx, std::size_t m, double power,
                           double sigma2, std::size_t n_batches, std::size_t batch_size, Rng& rng) {
  return validation_accuracy(alphabet_constellation(tx, m, power), rx, sigma2, n_batches,
                             batch_size, rng);
}

double validation_accuracy(const Constellation& constellation, const MlpParams& rx, double sigma2,
                           std::size_t n_batches, std::size_t batch_size, Rng& rng) {
  if (n_batches == 0 || batch_size == 0) {
    throw std::invalid_argument("validation_accuracy: empty validation set");
  }
  std::size_t correct = 0;
  for (std::size_t k = 0; k < n_batches; ++k) {
    auto batch = sample_batch(constellation.size(), batch_size, rng);
    Matrix y = awgn(gather(constellation.points, batch), sigma2, rng);
    auto decided = decode(mlp_apply(y, rx));
    for (std::size_t i = 0; i < batch.size(); ++i) correct += decided[i] == batch[i];
  }
  return static_cast<double>(correct) / static_cast<double>(n_batches * batch_size);
}

Interval wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The bounds are exactly 0 and 1 at the edges; the formula leaves rounding residue.
  return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

std::vector<SerPoint> ser_sweep(const Constellation& constellation, const MlpParams& rx,
                                std::span<const double> snr_db, std::size_t n_symbols, Rng& rng,
                                int workers) {
  if (n_symbols == 0) throw std::invalid_argument("ser_sweep: n_symbols must be >= 1");
  rx.validate();
  if (rx.in_dim() != 2 || rx.out_dim() != constellation.size()) {
    throw std::invalid_argument("ser_sweep: receiver does not match the constellation");
  }
  std::vector<std::uint64_t> seeds(snr_db.size());
  std::vector<double> sigma2(snr_db.size());
  for (std::size_t p = 0; p < snr_db.size(); ++p) {
    seeds[p] = rng();
    sigma2[p] = noise_variance(constellation.power, snr_db[p]);
  }
  std::vector<SerPoint> out(snr_db.size());
  constexpr std::size_t chunk = 4096;
  const auto n_points = static_cast<std::int64_t>(snr_db.size());
  FirstError error;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_workers(workers))
  for (std::int64_t p = 0; p < n_points; ++p) {
    error.run([&] {
      const auto pu = static_cast<std::size_t>(p);
      Rng point_rng(seeds[pu]);
      std::size_t errors = 0;
      for (std::size_t done = 0; done < n_symbols; done += chunk) {
        const std::size_t n = std::min(chunk, n_symbols - done);
        auto sent = sample_batch(constellation.size(), n, point_rng);
        Matrix y = awgn(gather(constellation.points, sent), sigma2[pu], point_rng);
        auto decided = decode(mlp_apply(y, rx));
        for (std::size_t i = 0; i < n; ++i) errors += decided[i] != sent[i];
      }
      const auto ci = wilson_interval(errors, n_symbols);
      out[pu] = SerPoint{snr_db[pu], static_cast<double>(errors) / static_cast<double>(n_symbols),
                         ci.lo, ci.hi, errors, n_symbols};
    });
  }
  error.rethrow();
  return out;
}

}  // namespace aecomm
