#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aecomm/comm.hpp"
#include "aecomm/nn.hpp"
#include "aecomm/random.hpp"
#include "json.hpp"

namespace aecomm {

/// Baseline normalizes over the batch. Proposed normalizes over the whole
/// alphabet and slices the batch afterwards.
enum class Architecture { Baseline, Proposed };

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

struct TrainConfig {
  std::size_t M = 128;
  std::size_t batch_size = 64;
  double snr_db = 45.0;
  double power = 1.0;
  Architecture architecture = Architecture::Proposed;
  std::vector<std::size_t> tx_hidden{100, 100};
  std::vector<std::size_t> rx_hidden{100, 100};
  AdamConfig adam;
  std::size_t data_budget = 76800;
  std::uint64_t init_seed = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t noise_seed = 0;
  /// When set, the transmitter is replaced by these points and only the
  /// receiver is trained.
  std::optional<Constellation> fixed_constellation;

  void validate() const;
  std::size_t steps() const { return data_budget / batch_size; }
  double sigma2() const { return noise_variance(power, snr_db); }
};

struct Transceiver {
  MlpParams tx;
  MlpParams rx;

  friend bool operator==(const Transceiver&, const Transceiver&) = default;
};

/// Transmitter M -> hidden -> 2 then receiver 2 -> hidden -> M, drawn in that
/// order from one generator seeded by `init_seed`.
Transceiver init_transceiver(std::size_t m, std::span<const std::size_t> tx_hidden,
                             std::span<const std::size_t> rx_hidden, std::uint64_t init_seed);

/// B_s i.i.d. uniform draws from {0, ..., M-1}.
std::vector<std::size_t> sample_batch(std::size_t m, std::size_t batch_size, Rng& rng);

/// Alphabet-scope normalized transmitter outputs for all M messages.
Constellation alphabet_constellation(const MlpParams& tx, std::size_t m, double power);

/// Forward pass of one end-to-end step with a given noise realization.
struct EndToEnd {
  double loss = 0.0;
  Matrix symbols;  // normalized batch symbols, before noise
  Matrix logits;
  double scale = 1.0;           // normalization factor applied this step
  double alphabet_power = 0.0;  // mean |x|^2 over the normalized alphabet; Proposed only
  Transceiver grads;  // filled when gradients were requested
};

EndToEnd end_to_end(Architecture arch, const Transceiver& params,
                    std::span<const std::size_t> batch, const Matrix& noise, std::size_t m,
                    double power, bool with_grads);

/// Receiver-only variant over a fixed constellation. `grads.tx` stays empty.
EndToEnd end_to_end_fixed(const Constellation& constellation, const MlpParams& rx,
                          std::span<const std::size_t> batch, const Matrix& noise,
                          bool with_grads);

struct TrainState {
  Transceiver params;
  AdamState adam;
};

/// Adam state covering tx and rx parameters as one set.
TrainState make_train_state(Transceiver params, const AdamConfig& adam);

struct StepContext {
  std::size_t M = 0;
  double power = 1.0;
  double sigma2 = 1.0;
  /// Also evaluate the alphabet-wide mean power under this step's scaling.
  bool diagnostics = false;
};

struct StepReport {
  double loss = 0.0;
  double batch_power = 0.0;     // mean |x|^2 of the transmitted batch
  double alphabet_power = 0.0;  // mean |x|^2 over the alphabet; diagnostics only
};

StepReport train_step(Architecture arch, TrainState& state, std::span<const std::size_t> batch,
                      Rng& noise_rng, const StepContext& ctx);
StepReport train_step_baseline(TrainState& state, std::span<const std::size_t> batch,
                               Rng& noise_rng, const StepContext& ctx);
StepReport train_step_proposed(TrainState& state, std::span<const std::size_t> batch,
                               Rng& noise_rng, const StepContext& ctx);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t step, double loss);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct RunResult {
  TrainConfig config;
  std::vector<double> loss_curve;
  Transceiver params;
  Constellation constellation;
  std::size_t steps_taken = 0;
  /// Messages beyond steps * batch_size are dropped from the budget.
  std::size_t samples_truncated = 0;
};

using StepObserver =
    std::function<void(std::size_t step, std::span<const std::size_t> batch, const StepReport&)>;

/// Runs data_budget / batch_size steps. Throws TrainingDiverged on a
/// non-finite loss.
RunResult train_run(const TrainConfig& config, const StepObserver& observer = {},
                    bool diagnostics = false);

// run.json document
nlohmann::ordered_json to_json(const TrainConfig& config);
nlohmann::ordered_json to_json(const MlpParams& params);
nlohmann::ordered_json to_json(const Constellation& c);
nlohmann::ordered_json to_json(const RunResult& run);

MlpParams mlp_from_json(const nlohmann::json& j);
Constellation constellation_from_json(const nlohmann::json& j);

}  // namespace aecomm
