#include "aecomm/experiments.hpp"

#include <omp.h>

#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>

namespace aecomm {

const char* const kNormErrorHeader = "M,Bs,mean_error,std_error,n";
const char* const kAccuracyHeader = "arch,Bs,init_seed,data_seed,accuracy";
const char* const kSerHeader = "snr_db,ser,ci_lo,ci_hi";

namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int resolve_workers(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

// Timestamps live only here so the data files stay byte-reproducible.
void write_metadata(const fs::path& out_dir, const std::string& command,
                    nlohmann::ordered_json config, int workers,
                    nlohmann::ordered_json extra = nlohmann::ordered_json::object()) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = std::move(config);
  j["workers"] = resolve_workers(workers);
  j["created_utc"] = utc_timestamp();
  for (auto& [k, v] : extra.items()) j[k] = v;
  std::ofstream(out_dir / "metadata.json") << j.dump(2) << '\n';
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream os(path, std::ios::out | mode);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  return os;
}

}  // namespace

std::string format_accuracy_row(const AccuracyRow& row) {
  std::ostringstream os;
  os << to_string(row.arch) << ',' << row.batch_size << ',' << row.init_seed << ','
     << row.data_seed << ',' << format_real(row.accuracy);
  return os.str();
}

PairedResult paired_run(const CompareConfig& config, std::size_t batch_size,
                        std::uint64_t init_seed, std::uint64_t data_seed) {
  TrainConfig c = config.base;
  c.batch_size = batch_size;
  c.init_seed = init_seed;
  c.data_seed = data_seed;
  c.noise_seed = data_seed;

  PairedResult out;
  for (auto arch : {Architecture::Baseline, Architecture::Proposed}) {
    c.architecture = arch;
    RunResult run = train_run(c);
    Rng rng = eval_rng(config.eval, init_seed, data_seed);
    const double acc = validation_accuracy(run.constellation, run.params.rx, c.sigma2(),
                                           config.eval.batches, config.eval.batch_size, rng);
    AccuracyRow row{arch, batch_size, init_seed, data_seed, acc};
    (arch == Architecture::Baseline ? out.baseline : out.proposed) = row;
  }
  return out;
}

std::vector<CompareJob> compare_jobs(const CompareConfig& config) {
  std::vector<CompareJob> jobs;
  for (auto bs : config.batch_sizes) {
    for (auto init : config.init_seeds) {
      for (auto data : config.data_seeds) jobs.push_back({bs, init, data});
    }
  }
  return jobs;
}

void compare_sweep(const CompareConfig& config, int workers, std::size_t first_job,
                   const std::function<void(const PairedResult&)>& emit) {
  const auto jobs = compare_jobs(config);
  std::map<std::size_t, PairedResult> pending;
  std::size_t next = first_job;
  std::exception_ptr error;

  const auto begin = static_cast<std::int64_t>(first_job);
  const auto end = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_workers(workers))
  for (std::int64_t j = begin; j < end; ++j) {
    const auto& job = jobs[static_cast<std::size_t>(j)];
    try {
      PairedResult r = paired_run(config, job.batch_size, job.init_seed, job.data_seed);
#pragma omp critical(aecomm_compare_writer)
      {
        try {
          pending.emplace(static_cast<std::size_t>(j), r);
          for (auto it = pending.find(next); it != pending.end(); it = pending.find(next)) {
            emit(it->second);
            pending.erase(it);
            ++next;
          }
        } catch (...) {
          if (!error) error = std::current_exception();
        }
      }
    } catch (...) {
#pragma omp critical(aecomm_compare_writer)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

void write_norm_error_csv(std::ostream& os, const std::vector<NormErrorStats>& rows) {
  os << kNormErrorHeader << '\n';
  for (const auto& r : rows) {
    os << r.M << ',' << r.batch_size << ',' << format_real(r.mean_error) << ','
       << format_real(r.std_error) << ',' << r.n() << '\n';
  }
}

void write_ser_csv(std::ostream& os, const std::vector<SerPoint>& points) {
  os << kSerHeader << '\n';
  for (const auto& p : points) {
    os << format_real(p.snr_db) << ',' << format_real(p.ser) << ',' << format_real(p.ci_lo) << ','
       << format_real(p.ci_hi) << '\n';
  }
}

void cmd_norm_error(const NormErrorSweep& sweep, const fs::path& out_dir, int workers) {
  fs::create_directories(out_dir);
  const auto rows = norm_error_experiment(sweep, workers);
  auto os = open_output(out_dir / "norm_error.csv");
  write_norm_error_csv(os, rows);
  nlohmann::ordered_json extra;
  extra["std_error"] = "standard error of the per-initialization means";
  write_metadata(out_dir, "norm-error", to_json(sweep), workers, extra);
}

namespace {

// Number of complete jobs already present in accuracy.csv. Rows must follow
// the job order exactly; a trailing partial row is dropped.
std::size_t resume_prefix(const fs::path& path, const std::vector<CompareJob>& jobs,
                          std::string& kept) {
  std::ifstream in(path);
  if (!in) return 0;
  std::string line;
  if (!std::getline(in, line)) return 0;
  if (line != kAccuracyHeader) {
    throw std::runtime_error("'" + path.string() + "' has an unexpected header; refusing to resume");
  }
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // no trailing newline: partial write
    lines.push_back(line);
  }
  std::size_t done = 0;
  for (std::size_t k = 0; k + 1 < lines.size() && done < jobs.size(); k += 2, ++done) {
    const auto& job = jobs[done];
    for (std::size_t a = 0; a < 2; ++a) {
      AccuracyRow probe{a == 0 ? Architecture::Baseline : Architecture::Proposed, job.batch_size,
                        job.init_seed, job.data_seed, 0.0};
      std::string key = format_accuracy_row(probe);
      key = key.substr(0, key.rfind(',') + 1);
      if (lines[k + a].rfind(key, 0) != 0) {
        throw std::runtime_error("'" + path.string() +
                                 "' does not match this configuration; refusing to resume");
      }
    }
    kept += lines[k] + '\n' + lines[k + 1] + '\n';
  }
  return done;
}

}  // namespace

void cmd_compare(const CompareConfig& config, const fs::path& out_dir, int workers) {
  fs::create_directories(out_dir);
  const auto jobs = compare_jobs(config);
  const fs::path csv = out_dir / "accuracy.csv";
  std::string kept;
  const std::size_t done = resume_prefix(csv, jobs, kept);
  {
    auto os = open_output(csv);
    os << kAccuracyHeader << '\n' << kept;
  }
  nlohmann::ordered_json extra;
  extra["resumed_jobs"] = done;
  extra["total_jobs"] = jobs.size();
  extra["noise_seed"] = "equal to data_seed";
  write_metadata(out_dir, "compare", to_json(config), workers, extra);

  auto os = open_output(csv, std::ios::app);
  compare_sweep(config, workers, done, [&](const PairedResult& r) {
    os << format_accuracy_row(r.baseline) << '\n' << format_accuracy_row(r.proposed) << '\n';
    os.flush();
  });
}

double cmd_train(const TrainCommandConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  RunResult run = train_run(config.train);
  Rng rng = eval_rng(config.eval, config.train.init_seed, config.train.data_seed);
  const double acc = validation_accuracy(run.constellation, run.params.rx, config.train.sigma2(),
                                         config.eval.batches, config.eval.batch_size, rng);
  auto j = to_json(run);
  nlohmann::ordered_json v = to_json(config.eval);
  v["sigma2"] = config.train.sigma2();
  v["accuracy"] = acc;
  j["validation"] = std::move(v);
  open_output(out_dir / "run.json") << j.dump(2) << '\n';
  auto csv = open_output(out_dir / "constellation.csv");
  write_constellation_csv(csv, run.constellation);

  nlohmann::ordered_json echo = to_json(config.train);
  echo.update(to_json(config.eval));
  write_metadata(out_dir, "train", echo, 1);
  return acc;
}

void cmd_ser(const SerConfig& config, const fs::path& out_dir, int workers) {
  if (!fs::exists(config.run)) throw ConfigError("run file '" + config.run.string() + "' not found");
  const auto run = load_json_file(config.run);
  Constellation c;
  MlpParams rx;
  try {
    c = constellation_from_json(run.at("constellation"));
    rx = mlp_from_json(run.at("receiver"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed run file '" + config.run.string() + "': " + e.what());
  }
  if (config.inject_qpsk) {
    if (c.size() != 4) throw ConfigError("inject_qpsk requires a run with M = 4");
    c = qpsk(c.power);
  }
  fs::create_directories(out_dir);
  Rng rng = make_rng(config.seed, Stream::Eval);
  const auto points = ser_sweep(c, rx, config.snr_db, config.n_symbols, rng, workers);
  auto os = open_output(out_dir / "ser.csv");
  write_ser_csv(os, points);
  write_metadata(out_dir, "ser", to_json(config), workers);
}

}  // namespace aecomm
