#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "aecomm/config.hpp"
#include "aecomm/metrics.hpp"
#include "aecomm/train.hpp"

namespace aecomm {

struct AccuracyRow {
  Architecture arch = Architecture::Baseline;
  std::size_t batch_size = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t data_seed = 0;
  double accuracy = 0.0;
};

/// One line of accuracy.csv, without the newline.
std::string format_accuracy_row(const AccuracyRow& row);

struct PairedResult {
  AccuracyRow baseline;
  AccuracyRow proposed;
};

/// Trains both architectures from identical seeds and evaluates each on the
/// same zero-normalization-error validation stream.
PairedResult paired_run(const CompareConfig& config, std::size_t batch_size,
                        std::uint64_t init_seed, std::uint64_t data_seed);

struct CompareJob {
  std::size_t batch_size = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t data_seed = 0;
};

/// Jobs ordered by batch size, then init seed, then data seed.
std::vector<CompareJob> compare_jobs(const CompareConfig& config);

/// Runs jobs [first_job, end) on `workers` threads. `emit` is called from a
/// single writer in job order as soon as each prefix completes.
void compare_sweep(const CompareConfig& config, int workers, std::size_t first_job,
                   const std::function<void(const PairedResult&)>& emit);

// Command drivers. Each writes its data file(s) plus metadata.json into
// `out_dir`, which is created if needed.
extern const char* const kNormErrorHeader;
extern const char* const kAccuracyHeader;
extern const char* const kSerHeader;

void cmd_norm_error(const NormErrorSweep& sweep, const std::filesystem::path& out_dir, int workers);
/// Resumes from an existing accuracy.csv whose complete rows match the job order.
void cmd_compare(const CompareConfig& config, const std::filesystem::path& out_dir, int workers);
/// Returns the validation accuracy written to run.json.
double cmd_train(const TrainCommandConfig& config, const std::filesystem::path& out_dir);
void cmd_ser(const SerConfig& config, const std::filesystem::path& out_dir, int workers);

void write_norm_error_csv(std::ostream& os, const std::vector<NormErrorStats>& rows);
void write_ser_csv(std::ostream& os, const std::vector<SerPoint>& points);

}  // namespace aecomm
