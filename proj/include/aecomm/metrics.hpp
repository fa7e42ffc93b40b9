#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aecomm/comm.hpp"
#include "aecomm/nn.hpp"
#include "aecomm/random.hpp"

namespace aecomm {

/// Mean Euclidean distance between batch-scope and alphabet-scope normalized
/// symbols of the batch. Both sets come from the full transmitter network.
double normalization_error(const MlpParams& tx, std::span<const std::size_t> batch, std::size_t m,
                           double power);

/// Raw transmitter outputs for the whole alphabet together with their
/// alphabet-scope scale factor. Rows of a dense net are independent, so batch
/// outputs are rows of `raw`.
struct AlphabetOutputs {
  Matrix raw;
  double scale = 1.0;
  double power = 1.0;
};

AlphabetOutputs alphabet_outputs(const MlpParams& tx, std::size_t m, double power);

/// normalization_error() evaluated from precomputed alphabet outputs.
double normalization_error(const AlphabetOutputs& alphabet, std::span<const std::size_t> batch);

struct NormErrorSweep {
  std::vector<std::size_t> m_values{4, 16, 64, 256};
  std::vector<std::size_t> batch_sizes{4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048};
  std::size_t n_inits = 30;
  std::size_t n_batches = 1000;
  double eb = 1.0;
  std::vector<std::size_t> tx_hidden{60, 60};
  std::uint64_t seed = 0;
};

struct NormErrorStats {
  std::size_t M = 0;
  std::size_t batch_size = 0;
  double eb = 1.0;
  double mean_error = 0.0;
  /// Standard error across transmitter initializations.
  double std_error = 0.0;
  std::size_t n_inits = 0;
  std::size_t n_batches = 0;

  std::size_t n() const { return n_inits * n_batches; }
};

/// Rows ordered by M, then batch size. The same transmitter initializations
/// are reused for every batch size of a given M.
std::vector<NormErrorStats> norm_error_experiment(const NormErrorSweep& sweep, int workers = 0);

/// Single-threaded reference; results are bit-identical to the parallel driver.
std::vector<NormErrorStats> norm_error_experiment_serial(const NormErrorSweep& sweep);

/// Fraction of correctly decoded messages over `n_batches` uniformly sampled
/// batches sent through the alphabet-normalized constellation.
double validation_accuracy(const MlpParams& tx, const MlpParams& rx, std::size_t m, double power,
                           double sigma2, std::size_t n_batches, std::size_t batch_size, Rng& rng);

double validation_accuracy(const Constellation& constellation, const MlpParams& rx, double sigma2,
                           std::size_t n_batches, std::size_t batch_size, Rng& rng);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for k successes in n trials.
Interval wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

struct SerPoint {
  double snr_db = 0.0;
  double ser = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t errors = 0;
  std::size_t n_symbols = 0;
};

/// Monte-Carlo symbol error rate per SNR point with a Wilson 95% interval.
/// Each point gets its own generator drawn from `rng`, so results do not
/// depend on the worker count.
std::vector<SerPoint> ser_sweep(const Constellation& constellation, const MlpParams& rx,
                                std::span<const double> snr_db, std::size_t n_symbols, Rng& rng,
                                int workers = 1);

}  // namespace aecomm
