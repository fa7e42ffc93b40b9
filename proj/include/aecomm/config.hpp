#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "aecomm/metrics.hpp"
#include "aecomm/train.hpp"
#include "json.hpp"

namespace aecomm {

/// Invalid or unreadable experiment configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Validation protocol: batches of uniformly drawn messages sent through the
/// alphabet-normalized constellation.
struct EvalConfig {
  std::size_t batches = 30;
  std::size_t batch_size = 1000;
  std::uint64_t seed = 0;
};

/// Generator for the validation set of one (init_seed, data_seed) run.
Rng eval_rng(const EvalConfig& eval, std::uint64_t init_seed, std::uint64_t data_seed);

struct TrainCommandConfig {
  TrainConfig train;
  EvalConfig eval;
};

struct CompareConfig {
  TrainConfig base;  // architecture, batch size and seeds are overridden per run
  std::vector<std::size_t> batch_sizes{16, 32, 64, 128, 256, 512};
  std::vector<std::uint64_t> init_seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<std::uint64_t> data_seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  EvalConfig eval;
};

struct SerConfig {
  std::filesystem::path run;
  std::vector<double> snr_db{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  std::size_t n_symbols = 100000;
  std::uint64_t seed = 0;
  /// Replace the run's constellation with QPSK at the run's power (M = 4 only).
  bool inject_qpsk = false;
};

nlohmann::json load_json_file(const std::filesystem::path& path);

// Strict parsers: unknown keys and wrong types raise ConfigError.
TrainCommandConfig parse_train_config(const nlohmann::json& j);
CompareConfig parse_compare_config(const nlohmann::json& j);
NormErrorSweep parse_norm_error_config(const nlohmann::json& j);
/// Relative `run` paths resolve against `base_dir`.
SerConfig parse_ser_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

nlohmann::ordered_json to_json(const EvalConfig& eval);
nlohmann::ordered_json to_json(const CompareConfig& c);
nlohmann::ordered_json to_json(const NormErrorSweep& s);
nlohmann::ordered_json to_json(const SerConfig& s);

}  // namespace aecomm
