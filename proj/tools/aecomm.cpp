// Command-line front end: norm-error, compare, train and ser experiments.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "aecomm/config.hpp"
#include "aecomm/experiments.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  int workers = 0;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config, "Experiment configuration (JSON)")->required();
  cmd->add_option("--out", opt.out, "Output directory")->required();
  cmd->add_option("--workers", opt.workers, "Worker threads (0 = available parallelism)")
      ->check(CLI::NonNegativeNumber);
}

int run(const std::string& command, const Options& opt) {
  const fs::path config_path(opt.config);
  const auto j = aecomm::load_json_file(config_path);
  const fs::path out(opt.out);
  if (command == "norm-error") {
    aecomm::cmd_norm_error(aecomm::parse_norm_error_config(j), out, opt.workers);
  } else if (command == "compare") {
    aecomm::cmd_compare(aecomm::parse_compare_config(j), out, opt.workers);
  } else if (command == "train") {
    const double acc = aecomm::cmd_train(aecomm::parse_train_config(j), out);
    std::cout << "validation accuracy " << aecomm::format_real(acc) << '\n';
  } else if (command == "ser") {
    const auto base = config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");
    aecomm::cmd_ser(aecomm::parse_ser_config(j, base), out, opt.workers);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"End-to-end autoencoder training over AWGN with batch- or alphabet-scope power "
               "normalization"};
  app.require_subcommand(1);
  Options opt;
  const char* commands[][2] = {
      {"norm-error", "Average normalization error sweep over M and batch size"},
      {"compare", "Paired Baseline/Proposed training and validation accuracy"},
      {"train", "Single training run; writes run.json and constellation.csv"},
      {"ser", "Symbol error rate sweep for a trained run"},
  };
  for (const auto& c : commands) add_common(app.add_subcommand(c[0], c[1]), opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, opt);
  } catch (const aecomm::ConfigError& e) {
    std::cerr << "aecomm " << command << ": config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "aecomm " << command << ": " << e.what() << '\n';
    return 1;
  }
}
