#include "aecomm/train.hpp"

#include <cmath>
#include <numeric>

namespace aecomm {

std::string to_string(Architecture arch) {
  return arch == Architecture::Baseline ? "baseline" : "proposed";
}

Architecture architecture_from_string(const std::string& name) {
  if (name == "baseline") return Architecture::Baseline;
  if (name == "proposed") return Architecture::Proposed;
  throw std::invalid_argument("unknown architecture '" + name + "'");
}

void TrainConfig::validate() const {
  if (M < 2 || !is_power_of_two(M)) throw std::invalid_argument("M must be a power of two >= 2");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (data_budget < batch_size) throw std::invalid_argument("data_budget must be >= batch_size");
  if (!(power > 0.0)) throw std::invalid_argument("power must be positive");
  if (!std::isfinite(snr_db)) throw std::invalid_argument("snr_db must be finite");
  if (!(adam.lr > 0.0)) throw std::invalid_argument("lr must be positive");
  for (auto h : tx_hidden) {
    if (h == 0) throw std::invalid_argument("tx_hidden sizes must be >= 1");
  }
  for (auto h : rx_hidden) {
    if (h == 0) throw std::invalid_argument("rx_hidden sizes must be >= 1");
  }
  if (fixed_constellation && fixed_constellation->size() != M) {
    throw std::invalid_argument("fixed constellation must have M points");
  }
}

Transceiver init_transceiver(std::size_t m, std::span<const std::size_t> tx_hidden,
                             std::span<const std::size_t> rx_hidden, std::uint64_t init_seed) {
  Rng rng = make_rng(init_seed, Stream::Init);
  Transceiver t;
  t.tx = make_mlp(m, tx_hidden, 2, rng);
  t.rx = make_mlp(2, rx_hidden, m, rng);
  return t;
}

std::vector<std::size_t> sample_batch(std::size_t m, std::size_t batch_size, Rng& rng) {
  if (m < 1) throw std::invalid_argument("sample_batch: M must be >= 1");
  std::uniform_int_distribution<std::size_t> dist(0, m - 1);
  std::vector<std::size_t> batch(batch_size);
  for (auto& i : batch) i = dist(rng);
  return batch;
}

Constellation alphabet_constellation(const MlpParams& tx, std::size_t m, double power) {
  Matrix raw = mlp_apply(Matrix::identity(m), tx);
  return Constellation{normalize_average(raw, power).x, power};
}

namespace {

double mean_power(const Matrix& x) {
  double sum = 0.0;
  for (double v : x.values()) sum += v * v;
  return sum / static_cast<double>(x.rows());
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("noise shape does not match the batch");
  }
  Matrix out = a;
  auto ov = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += bv[i];
  return out;
}

// Receiver forward, loss and receiver backward shared by every transmitter path.
// Returns the gradient wrt the transmitted (pre-noise) symbols.
Matrix receive(const Matrix& symbols, const Matrix& noise, const MlpParams& rx,
               std::span<const std::size_t> batch, bool with_grads, EndToEnd& out) {
  auto rxf = mlp_forward(add(symbols, noise), rx);
  auto lg = softmax_cross_entropy(rxf.output, batch);
  out.loss = lg.loss;
  out.logits = std::move(rxf.output);
  if (!with_grads) return {};
  auto rb = mlp_backward(lg.dlogits, rxf.cache, rx);
  out.grads.rx = std::move(rb.grads);
  // AWGN is additive, so the gradient passes through unchanged.
  return std::move(rb.dx);
}

}  // namespace

EndToEnd end_to_end(Architecture arch, const Transceiver& params,
                    std::span<const std::size_t> batch, const Matrix& noise, std::size_t m,
                    double power, bool with_grads) {
  EndToEnd out;
  if (arch == Architecture::Baseline) {
    auto txf = mlp_forward(one_hot(batch, m), params.tx);
    auto norm = normalize_average(txf.output, power);
    out.scale = norm.scale;
    out.symbols = std::move(norm.x);
    Matrix dsym = receive(out.symbols, noise, params.rx, batch, with_grads, out);
    if (with_grads) {
      Matrix draw = normalize_average_backward(dsym, txf.output, norm.scale, power);
      out.grads.tx = mlp_backward(draw, txf.cache, params.tx, false).grads;
    }
  } else {
    auto txf = mlp_forward(Matrix::identity(m), params.tx);
    auto norm = normalize_average(txf.output, power);
    out.scale = norm.scale;
    out.alphabet_power = mean_power(norm.x);
    out.symbols = gather(norm.x, batch);
    Matrix dsym = receive(out.symbols, noise, params.rx, batch, with_grads, out);
    if (with_grads) {
      Matrix dall = gather_backward(dsym, batch, m);
      Matrix draw = normalize_average_backward(dall, txf.output, norm.scale, power);
      out.grads.tx = mlp_backward(draw, txf.cache, params.tx, false).grads;
    }
  }
  return out;
}

EndToEnd end_to_end_fixed(const Constellation& constellation, const MlpParams& rx,
                          std::span<const std::size_t> batch, const Matrix& noise,
                          bool with_grads) {
  EndToEnd out;
  out.alphabet_power = constellation.average_power();
  out.symbols = gather(constellation.points, batch);
  receive(out.symbols, noise, rx, batch, with_grads, out);
  return out;
}

TrainState make_train_state(Transceiver params, const AdamConfig& adam) {
  TrainState s{std::move(params), {}};
  auto views = parameter_views(s.params.tx);
  auto rxv = parameter_views(s.params.rx);
  views.insert(views.end(), rxv.begin(), rxv.end());
  s.adam = AdamState::for_parameters(views, adam);
  return s;
}

namespace {

void apply_update(TrainState& state, const Transceiver& grads) {
  auto views = parameter_views(state.params.tx);
  auto rxv = parameter_views(state.params.rx);
  views.insert(views.end(), rxv.begin(), rxv.end());
  auto gviews = parameter_views(grads.tx);
  auto grxv = parameter_views(grads.rx);
  gviews.insert(gviews.end(), grxv.begin(), grxv.end());
  adam_step(views, gviews, state.adam);
}

}  // namespace

StepReport train_step(Architecture arch, TrainState& state, std::span<const std::size_t> batch,
                      Rng& noise_rng, const StepContext& ctx) {
  Matrix noise = sample_noise(batch.size(), ctx.sigma2, noise_rng);
  auto e2e = end_to_end(arch, state.params, batch, noise, ctx.M, ctx.power, true);
  StepReport report{e2e.loss, mean_power(e2e.symbols), e2e.alphabet_power};
  if (ctx.diagnostics && arch == Architecture::Baseline) {
    // Alphabet power the batch scale factor would give the full constellation.
    Matrix raw = mlp_apply(Matrix::identity(ctx.M), state.params.tx);
    report.alphabet_power = e2e.scale * e2e.scale * mean_power(raw);
  }
  apply_update(state, e2e.grads);
  return report;
}

StepReport train_step_baseline(TrainState& state, std::span<const std::size_t> batch,
                               Rng& noise_rng, const StepContext& ctx) {
  return train_step(Architecture::Baseline, state, batch, noise_rng, ctx);
}

StepReport train_step_proposed(TrainState& state, std::span<const std::size_t> batch,
                               Rng& noise_rng, const StepContext& ctx) {
  return train_step(Architecture::Proposed, state, batch, noise_rng, ctx);
}

TrainingDiverged::TrainingDiverged(std::size_t step, double loss)
    : std::runtime_error("non-finite loss " + std::to_string(loss) + " at step " +
                         std::to_string(step)),
      step_(step) {}

RunResult train_run(const TrainConfig& config, const StepObserver& observer, bool diagnostics) {
  config.validate();
  RunResult result;
  result.config = config;
  Transceiver init =
      init_transceiver(config.M, config.tx_hidden, config.rx_hidden, config.init_seed);
  if (config.fixed_constellation) init.tx = MlpParams{};
  TrainState state = make_train_state(std::move(init), config.adam);

  Rng data_rng = make_rng(config.data_seed, Stream::Data);
  Rng noise_rng = make_rng(config.noise_seed, Stream::Noise);
  const StepContext ctx{config.M, config.power, config.sigma2(), diagnostics};
  const std::size_t steps = config.steps();
  result.samples_truncated = config.data_budget - steps * config.batch_size;
  result.loss_curve.reserve(steps);

  for (std::size_t step = 0; step < steps; ++step) {
    auto batch = sample_batch(config.M, config.batch_size, data_rng);
    StepReport report;
    if (config.fixed_constellation) {
      Matrix noise = sample_noise(batch.size(), ctx.sigma2, noise_rng);
      auto e2e = end_to_end_fixed(*config.fixed_constellation, state.params.rx, batch, noise, true);
      report = StepReport{e2e.loss, mean_power(e2e.symbols), e2e.alphabet_power};
      apply_update(state, e2e.grads);
    } else {
      report = train_step(config.architecture, state, batch, noise_rng, ctx);
    }
    if (!std::isfinite(report.loss)) throw TrainingDiverged(step, report.loss);
    result.loss_curve.push_back(report.loss);
    if (observer) observer(step, batch, report);
  }

  result.steps_taken = steps;
  result.params = std::move(state.params);
  result.constellation = config.fixed_constellation
                             ? *config.fixed_constellation
                             : alphabet_constellation(result.params.tx, config.M, config.power);
  return result;
}

// ---------------------------------------------------------------------------
// run.json

namespace {

std::string activation_name(Activation a) { return a == Activation::ReLU ? "relu" : "linear"; }

Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "linear") return Activation::Linear;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

}  // namespace

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["M"] = c.M;
  j["batch_size"] = c.batch_size;
  j["snr_db"] = c.snr_db;
  j["P"] = c.power;
  j["architecture"] = to_string(c.architecture);
  j["tx_hidden"] = c.tx_hidden;
  j["rx_hidden"] = c.rx_hidden;
  j["lr"] = c.adam.lr;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["epsilon"] = c.adam.epsilon;
  j["data_budget"] = c.data_budget;
  j["init_seed"] = c.init_seed;
  j["data_seed"] = c.data_seed;
  j["noise_seed"] = c.noise_seed;
  if (c.fixed_constellation) j["fixed_constellation"] = to_json(*c.fixed_constellation);
  return j;
}

nlohmann::ordered_json to_json(const MlpParams& params) {
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& l : params.layers) {
    nlohmann::ordered_json lj;
    lj["activation"] = activation_name(l.activation);
    lj["in"] = l.in_dim();
    lj["out"] = l.out_dim();
    lj["W"] = std::vector<double>(l.W.values().begin(), l.W.values().end());
    lj["b"] = l.b;
    layers.push_back(std::move(lj));
  }
  return nlohmann::ordered_json{{"layers", std::move(layers)}};
}

nlohmann::ordered_json to_json(const Constellation& c) {
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < c.size(); ++i) pts.push_back({c.points(i, 0), c.points(i, 1)});
  nlohmann::ordered_json j;
  j["power"] = c.power;
  j["points"] = std::move(pts);
  return j;
}

nlohmann::ordered_json to_json(const RunResult& run) {
  nlohmann::ordered_json j;
  j["format"] = "aecomm-run/1";
  j["config"] = to_json(run.config);
  j["steps_taken"] = run.steps_taken;
  j["samples_truncated"] = run.samples_truncated;
  j["loss_curve"] = run.loss_curve;
  j["constellation"] = to_json(run.constellation);
  j["transmitter"] = to_json(run.params.tx);
  j["receiver"] = to_json(run.params.rx);
  return j;
}

MlpParams mlp_from_json(const nlohmann::json& j) {
  MlpParams p;
  for (const auto& lj : j.at("layers")) {
    const auto in = lj.at("in").get<std::size_t>();
    const auto out = lj.at("out").get<std::size_t>();
    DenseLayer layer{Matrix(in, out), lj.at("b").get<std::vector<double>>(),
                     activation_from_name(lj.at("activation").get<std::string>())};
    const auto w = lj.at("W").get<std::vector<double>>();
    if (w.size() != in * out) throw std::invalid_argument("layer weight count mismatch");
    std::copy(w.begin(), w.end(), layer.W.values().begin());
    p.layers.push_back(std::move(layer));
  }
  if (!p.layers.empty()) p.validate();
  return p;
}

Constellation constellation_from_json(const nlohmann::json& j) {
  const auto& pts = j.at("points");
  Constellation c{Matrix(pts.size(), 2), j.at("power").get<double>()};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    c.points(i, 0) = pts[i].at(0).get<double>();
    c.points(i, 1) = pts[i].at(1).get<double>();
  }
  return c;
}

}  // namespace aecomm
