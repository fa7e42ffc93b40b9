#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "aecomm/matrix.hpp"
#include "aecomm/random.hpp"

namespace aecomm {

enum class Activation { ReLU, Linear };

struct DenseLayer {
  Matrix W;               // in_dim x out_dim
  std::vector<double> b;  // out_dim
  Activation activation = Activation::Linear;

  std::size_t in_dim() const { return W.rows(); }
  std::size_t out_dim() const { return W.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
  std::size_t parameter_count() const;

  /// Throws std::invalid_argument if layer shapes do not chain.
  void validate() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Glorot-uniform weights in [-L, L] with L = sqrt(6 / (in + out)), zero bias.
DenseLayer glorot_init(std::size_t in_dim, std::size_t out_dim, Rng& rng,
                       Activation activation = Activation::Linear);

/// ReLU on every hidden layer, linear output layer.
MlpParams make_mlp(std::size_t in_dim, std::span<const std::size_t> hidden, std::size_t out_dim,
                   Rng& rng);

/// Same shapes, all entries zero.
MlpParams zeros_like(const MlpParams& params);

struct MlpCache {
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> preactivations;
};

struct MlpForward {
  Matrix output;
  MlpCache cache;
};

MlpForward mlp_forward(const Matrix& x, const MlpParams& params);

/// Forward pass without retaining the activation record.
Matrix mlp_apply(const Matrix& x, const MlpParams& params);

struct MlpBackward {
  Matrix dx;
  MlpParams grads;
};

/// With `input_grad` false, `dx` is left empty and its product is skipped.
MlpBackward mlp_backward(const Matrix& dy, const MlpCache& cache, const MlpParams& params,
                         bool input_grad = true);

/// Row-wise softmax with max subtraction.
Matrix softmax(const Matrix& logits);

struct LossGrad {
  double loss = 0.0;
  Matrix dlogits;
};

/// Mean sparse categorical cross-entropy and its gradient wrt the logits.
LossGrad softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels);

// Flat views over a parameter set, in layer order (W then b).
std::vector<std::span<double>> parameter_views(MlpParams& params);
std::vector<std::span<const double>> parameter_views(const MlpParams& params);

std::vector<double> flatten(std::span<const std::span<const double>> views);
void assign(std::span<const std::span<double>> views, std::span<const double> flat);

struct AdamConfig {
  double lr = 0.008;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;

  /// Zero moments shaped like `views`.
  static AdamState for_parameters(std::span<const std::span<double>> views, AdamConfig config);
};

/// One bias-corrected Adam update over all buffers. `t` is incremented first.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool finite = true;
};

/// Compares `analytic` to central differences of `f` around `point`.
/// Per-component error is |a - c| / max(1, |a|, |c|).
GradCheckResult gradient_check(const std::function<double(std::span<const double>)>& f,
                               std::span<const double> point, std::span<const double> analytic,
                               double h = 1e-5);

}  // namespace aecomm
