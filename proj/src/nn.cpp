#include "aecomm/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aecomm {

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.W.size() + l.b.size();
  return n;
}

void MlpParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("MlpParams: no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.b.size() != l.out_dim()) throw std::invalid_argument("MlpParams: bias size mismatch");
    if (k > 0 && layers[k - 1].out_dim() != l.in_dim()) {
      throw std::invalid_argument("MlpParams: layer dimensions do not chain");
    }
  }
}

DenseLayer glorot_init(std::size_t in_dim, std::size_t out_dim, Rng& rng, Activation activation) {
  if (in_dim == 0 || out_dim == 0) throw std::invalid_argument("glorot_init: zero dimension");
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  std::uniform_real_distribution<double> dist(-limit, limit);
  DenseLayer layer{Matrix(in_dim, out_dim), std::vector<double>(out_dim, 0.0), activation};
  for (double& w : layer.W.values()) w = dist(rng);
  return layer;
}

MlpParams make_mlp(std::size_t in_dim, std::span<const std::size_t> hidden, std::size_t out_dim,
                   Rng& rng) {
  MlpParams p;
  std::size_t prev = in_dim;
  for (std::size_t h : hidden) {
    p.layers.push_back(glorot_init(prev, h, rng, Activation::ReLU));
    prev = h;
  }
  p.layers.push_back(glorot_init(prev, out_dim, rng, Activation::Linear));
  return p;
}

MlpParams zeros_like(const MlpParams& params) {
  MlpParams z = params;
  for (auto& l : z.layers) {
    l.W.fill(0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
  return z;
}

namespace {

Matrix affine(const Matrix& x, const DenseLayer& layer) {
  Matrix z(x.rows(), layer.out_dim());
  kernels::matmul(x, layer.W, z);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto r = z.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += layer.b[j];
  }
  return z;
}

void activate(Matrix& z, Activation a) {
  if (a == Activation::ReLU) {
    for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
  }
}

void check_input(const Matrix& x, const MlpParams& params) {
  params.validate();
  if (x.cols() != params.in_dim()) throw std::invalid_argument("mlp_forward: input width mismatch");
}

}  // namespace

MlpForward mlp_forward(const Matrix& x, const MlpParams& params) {
  check_input(x, params);
  MlpForward out;
  out.cache.inputs.reserve(params.layers.size());
  out.cache.preactivations.reserve(params.layers.size());
  Matrix a = x;
  for (const auto& layer : params.layers) {
    Matrix z = affine(a, layer);
    out.cache.inputs.push_back(std::move(a));
    a = z;
    activate(a, layer.activation);
    out.cache.preactivations.push_back(std::move(z));
  }
  out.output = std::move(a);
  return out;
}

Matrix mlp_apply(const Matrix& x, const MlpParams& params) {
  check_input(x, params);
  Matrix a = x;
  for (const auto& layer : params.layers) {
    a = affine(a, layer);
    activate(a, layer.activation);
  }
  return a;
}

MlpBackward mlp_backward(const Matrix& dy, const MlpCache& cache, const MlpParams& params,
                         bool input_grad) {
  params.validate();
  const std::size_t n_layers = params.layers.size();
  if (cache.inputs.size() != n_layers || cache.preactivations.size() != n_layers) {
    throw std::invalid_argument("mlp_backward: cache does not match params");
  }
  const Matrix& last = cache.preactivations.back();
  if (dy.rows() != last.rows() || dy.cols() != last.cols()) {
    throw std::invalid_argument("mlp_backward: gradient shape mismatch");
  }

  MlpBackward out{Matrix(), zeros_like(params)};
  Matrix delta = dy;
  for (std::size_t k = n_layers; k-- > 0;) {
    const auto& layer = params.layers[k];
    const Matrix& z = cache.preactivations[k];
    const Matrix& input = cache.inputs[k];
    if (z.cols() != layer.out_dim() || input.cols() != layer.in_dim()) {
      throw std::invalid_argument("mlp_backward: cache does not match params");
    }
    if (layer.activation == Activation::ReLU) {
      auto dv = delta.values();
      auto zv = z.values();
      for (std::size_t i = 0; i < dv.size(); ++i) {
        if (!(zv[i] > 0.0)) dv[i] = 0.0;
      }
    }
    auto& g = out.grads.layers[k];
    kernels::matmul_tn(input, delta, g.W);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      auto r = delta.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) g.b[j] += r[j];
    }
    if (k == 0 && !input_grad) return out;
    Matrix prev(delta.rows(), layer.in_dim());
    kernels::matmul_nt(delta, layer.W, prev);
    delta = std::move(prev);
  }
  out.dx = std::move(delta);
  return out;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    auto out = p.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      sum += out[j];
    }
    for (double& v : out) v /= sum;
  }
  return p;
}

LossGrad softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels) {
  if (logits.rows() != labels.size()) {
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  }
  if (logits.rows() == 0) throw std::invalid_argument("softmax_cross_entropy: empty batch");
  const double n = static_cast<double>(logits.rows());
  LossGrad out{0.0, Matrix(logits.rows(), logits.cols())};
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const std::size_t label = labels[i];
    if (label >= logits.cols()) throw std::invalid_argument("softmax_cross_entropy: label out of range");
    const auto in = logits.row(i);
    auto g = out.dlogits.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      g[j] = std::exp(in[j] - mx);
      sum += g[j];
    }
    // -log softmax[label] = log(sum) - (z_label - max)
    out.loss += std::log(sum) - (in[label] - mx);
    for (double& v : g) v /= sum * n;
    g[label] -= 1.0 / n;
  }
  out.loss /= n;
  return out;
}

std::vector<std::span<double>> parameter_views(MlpParams& params) {
  std::vector<std::span<double>> views;
  for (auto& l : params.layers) {
    views.emplace_back(l.W.values());
    views.emplace_back(l.b);
  }
  return views;
}

std::vector<std::span<const double>> parameter_views(const MlpParams& params) {
  std::vector<std::span<const double>> views;
  for (const auto& l : params.layers) {
    views.emplace_back(l.W.values());
    views.emplace_back(l.b);
  }
  return views;
}

std::vector<double> flatten(std::span<const std::span<const double>> views) {
  std::vector<double> flat;
  for (auto v : views) flat.insert(flat.end(), v.begin(), v.end());
  return flat;
}

void assign(std::span<const std::span<double>> views, std::span<const double> flat) {
  std::size_t off = 0;
  for (auto v : views) {
    if (off + v.size() > flat.size()) throw std::invalid_argument("assign: flat vector too short");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), v.size(), v.begin());
    off += v.size();
  }
  if (off != flat.size()) throw std::invalid_argument("assign: flat vector too long");
}

AdamState AdamState::for_parameters(std::span<const std::span<double>> views, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (auto v : views) {
    s.m.emplace_back(v.size(), 0.0);
    s.v.emplace_back(v.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw std::invalid_argument("adam_step: buffer count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size() || params[k].size() != state.m[k].size() ||
        params[k].size() != state.v[k].size()) {
      throw std::invalid_argument("adam_step: buffer shape mismatch");
    }
  }
  const auto& c = state.config;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double m_corr = 1.0 - std::pow(c.beta1, t);
  const double v_corr = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / m_corr;
      const double v_hat = v[i] / v_corr;
      p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

GradCheckResult gradient_check(const std::function<double(std::span<const double>)>& f,
                               std::span<const double> point, std::span<const double> analytic,
                               double h) {
  if (!(h > 0.0)) throw std::invalid_argument("gradient_check: step must be positive");
  if (point.size() != analytic.size()) {
    throw std::invalid_argument("gradient_check: gradient size mismatch");
  }
  GradCheckResult res;
  std::vector<double> x(point.begin(), point.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      res.finite = false;
      res.max_rel_error = std::numeric_limits<double>::infinity();
      res.worst_index = i;
      return res;
    }
    const double central = (fp - fm) / (2.0 * h);
    const double a = analytic[i];
    const double err = std::abs(a - central) / std::max({1.0, std::abs(a), std::abs(central)});
    if (err > res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_index = i;
    }
  }
  return res;
}

}  // namespace aecomm
