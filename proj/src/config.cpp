#include "aecomm/config.hpp"

#include <fstream>
#include <set>

namespace aecomm {

namespace {

using nlohmann::json;

// Tracks which keys of a config object were consumed; anything left over is
// rejected by finish().
class Reader {
 public:
  explicit Reader(const json& j) : j_(j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!take(key)) return fallback;
    return as_count(j_.at(key), key);
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!take(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned()) throw ConfigError("'" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  double real(const std::string& key, double fallback) {
    if (!take(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
    return v.get<double>();
  }

  bool flag(const std::string& key, bool fallback) {
    if (!take(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError("'" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!take(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback) {
    if (!take(key)) return fallback;
    std::vector<std::size_t> out;
    for (const auto& v : array(key)) out.push_back(as_count(v, key));
    return out;
  }

  std::vector<std::uint64_t> seeds(const std::string& key, std::vector<std::uint64_t> fallback) {
    if (!take(key)) return fallback;
    std::vector<std::uint64_t> out;
    for (const auto& v : array(key)) {
      if (!v.is_number_unsigned()) throw ConfigError("'" + key + "' entries must be seeds");
      out.push_back(v.get<std::uint64_t>());
    }
    return out;
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
    if (!take(key)) return fallback;
    std::vector<double> out;
    for (const auto& v : array(key)) {
      if (!v.is_number()) throw ConfigError("'" + key + "' entries must be numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
  }

 private:
  bool take(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& array(const std::string& key) const {
    const auto& v = j_.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError("'" + key + "' must be a non-empty array");
    return v;
  }

  static std::size_t as_count(const json& v, const std::string& key) {
    if (!v.is_number_unsigned()) throw ConfigError("'" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
  }

  const json& j_;
  std::set<std::string> seen_;
};

// Keys shared by `train` and `compare`.
TrainConfig read_model(Reader& r) {
  TrainConfig c;
  c.M = r.count("M", c.M);
  c.snr_db = r.real("snr_db", c.snr_db);
  if (r.has("P") && r.has("Eb")) throw ConfigError("give either 'P' or 'Eb', not both");
  c.power = r.real("P", c.power);
  if (r.has("Eb")) {
    const double eb = r.real("Eb", 1.0);
    try {
      c.power = power_from_eb(c.M, eb);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  c.tx_hidden = r.counts("tx_hidden", c.tx_hidden);
  c.rx_hidden = r.counts("rx_hidden", c.rx_hidden);
  c.adam.lr = r.real("lr", c.adam.lr);
  c.adam.beta1 = r.real("beta1", c.adam.beta1);
  c.adam.beta2 = r.real("beta2", c.adam.beta2);
  c.adam.epsilon = r.real("epsilon", c.adam.epsilon);
  c.data_budget = r.count("data_budget", c.data_budget);
  return c;
}

EvalConfig read_eval(Reader& r) {
  EvalConfig e;
  e.batches = r.count("eval_batches", e.batches);
  e.batch_size = r.count("eval_batch_size", e.batch_size);
  e.seed = r.seed("eval_seed", e.seed);
  if (e.batches == 0 || e.batch_size == 0) {
    throw ConfigError("eval_batches and eval_batch_size must be >= 1");
  }
  return e;
}

void validate(const TrainConfig& c) {
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0 && c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(c.adam.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

}  // namespace

Rng eval_rng(const EvalConfig& eval, std::uint64_t init_seed, std::uint64_t data_seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(eval.seed),
                    static_cast<std::uint32_t>(eval.seed >> 32),
                    static_cast<std::uint32_t>(Stream::Eval),
                    static_cast<std::uint32_t>(init_seed),
                    static_cast<std::uint32_t>(init_seed >> 32),
                    static_cast<std::uint32_t>(data_seed),
                    static_cast<std::uint32_t>(data_seed >> 32)};
  return Rng(seq);
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

TrainCommandConfig parse_train_config(const nlohmann::json& j) {
  Reader r(j);
  TrainCommandConfig out;
  out.train = read_model(r);
  auto& c = out.train;
  c.batch_size = r.count("batch_size", c.batch_size);
  try {
    c.architecture = architecture_from_string(r.text("architecture", to_string(c.architecture)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.init_seed = r.seed("init_seed", c.init_seed);
  c.data_seed = r.seed("data_seed", c.data_seed);
  c.noise_seed = r.seed("noise_seed", c.data_seed);
  const std::string fixed = r.text("fixed_constellation", "");
  if (!fixed.empty()) {
    if (fixed != "qpsk") throw ConfigError("fixed_constellation supports only \"qpsk\"");
    if (c.M != 4) throw ConfigError("fixed_constellation \"qpsk\" requires M = 4");
    c.fixed_constellation = qpsk(c.power);
  }
  out.eval = read_eval(r);
  r.finish();
  validate(c);
  return out;
}

CompareConfig parse_compare_config(const nlohmann::json& j) {
  Reader r(j);
  CompareConfig out;
  out.base = read_model(r);
  out.batch_sizes = r.counts("batch_sizes", out.batch_sizes);
  out.init_seeds = r.seeds("init_seeds", out.init_seeds);
  out.data_seeds = r.seeds("data_seeds", out.data_seeds);
  out.eval = read_eval(r);
  r.finish();
  for (auto bs : out.batch_sizes) {
    TrainConfig probe = out.base;
    probe.batch_size = bs;
    validate(probe);
  }
  return out;
}

NormErrorSweep parse_norm_error_config(const nlohmann::json& j) {
  Reader r(j);
  NormErrorSweep s;
  s.m_values = r.counts("M_values", s.m_values);
  s.batch_sizes = r.counts("batch_sizes", s.batch_sizes);
  s.n_inits = r.count("n_inits", s.n_inits);
  s.n_batches = r.count("n_batches", s.n_batches);
  s.eb = r.real("Eb", s.eb);
  s.tx_hidden = r.counts("tx_hidden", s.tx_hidden);
  s.seed = r.seed("seed", s.seed);
  r.finish();
  if (s.n_inits == 0 || s.n_batches == 0) throw ConfigError("n_inits and n_batches must be >= 1");
  for (auto bs : s.batch_sizes) {
    if (bs == 0) throw ConfigError("batch sizes must be >= 1");
  }
  for (auto h : s.tx_hidden) {
    if (h == 0) throw ConfigError("tx_hidden sizes must be >= 1");
  }
  for (auto m : s.m_values) {
    try {
      power_from_eb(m, s.eb);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return s;
}

SerConfig parse_ser_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  Reader r(j);
  SerConfig s;
  if (!r.has("run")) throw ConfigError("'run' (path to run.json) is required");
  s.run = r.text("run", "");
  if (s.run.is_relative()) s.run = base_dir / s.run;
  s.snr_db = r.reals("snr_db", s.snr_db);
  s.n_symbols = r.count("n_symbols", s.n_symbols);
  s.seed = r.seed("seed", s.seed);
  s.inject_qpsk = r.flag("inject_qpsk", s.inject_qpsk);
  r.finish();
  if (s.n_symbols == 0) throw ConfigError("n_symbols must be >= 1");
  return s;
}

nlohmann::ordered_json to_json(const EvalConfig& eval) {
  nlohmann::ordered_json j;
  j["eval_batches"] = eval.batches;
  j["eval_batch_size"] = eval.batch_size;
  j["eval_seed"] = eval.seed;
  return j;
}

nlohmann::ordered_json to_json(const CompareConfig& c) {
  nlohmann::ordered_json j = to_json(c.base);
  j.erase("architecture");
  j.erase("batch_size");
  j.erase("init_seed");
  j.erase("data_seed");
  j.erase("noise_seed");
  j["batch_sizes"] = c.batch_sizes;
  j["init_seeds"] = c.init_seeds;
  j["data_seeds"] = c.data_seeds;
  j.update(to_json(c.eval));
  return j;
}

nlohmann::ordered_json to_json(const NormErrorSweep& s) {
  nlohmann::ordered_json j;
  j["M_values"] = s.m_values;
  j["batch_sizes"] = s.batch_sizes;
  j["n_inits"] = s.n_inits;
  j["n_batches"] = s.n_batches;
  j["Eb"] = s.eb;
  j["tx_hidden"] = s.tx_hidden;
  j["seed"] = s.seed;
  return j;
}

nlohmann::ordered_json to_json(const SerConfig& s) {
  nlohmann::ordered_json j;
  j["run"] = s.run.string();
  j["snr_db"] = s.snr_db;
  j["n_symbols"] = s.n_symbols;
  j["seed"] = s.seed;
  j["inject_qpsk"] = s.inject_qpsk;
  return j;
}

}  // namespace aecomm
