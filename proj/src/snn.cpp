#include "spikelane/snn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "spikelane/errors.hpp"
#include "spikelane/rng.hpp"

namespace spikelane {

void LifConfig::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ConfigError("LIF beta must lie in (0, 1), got " + std::to_string(beta));
  }
  if (!(v_threshold > 0.0) || !std::isfinite(v_threshold)) {
    throw ConfigError("LIF v_threshold must be > 0, got " + std::to_string(v_threshold));
  }
  if (!(surrogate_slope > 0.0) || !std::isfinite(surrogate_slope)) {
    throw ConfigError("LIF surrogate_slope must be > 0, got " +
                      std::to_string(surrogate_slope));
  }
  if (reset_mode != ResetMode::to_zero && reset_mode != ResetMode::subtract) {
    throw ConfigError("unknown LIF reset mode");
  }
}

LinearLayer::LinearLayer(std::size_t in_dim, std::size_t out_dim)
    : weights(in_dim, out_dim), bias(out_dim, 0.0) {}

Model::Model(ModelDims dims, LifConfig lif) : dims_(dims), lif_(lif) {
  if (dims.input_steps == 0 || dims.input_dim == 0 || dims.hidden_dim == 0 ||
      dims.classes == 0) {
    throw ConfigError("model dimensions must all be >= 1 (steps=" +
                      std::to_string(dims.input_steps) + ", in=" +
                      std::to_string(dims.input_dim) + ", hidden=" +
                      std::to_string(dims.hidden_dim) + ", classes=" +
                      std::to_string(dims.classes) + ")");
  }
  lif_.validate();
  feature_layer_ = LinearLayer(dims.input_dim, dims.hidden_dim);
  classifier_ = LinearLayer(dims.hidden_dim, dims.classes);
}

Model Model::initialized(std::uint64_t seed, ModelDims dims, LifConfig lif) {
  Model model(dims, lif);
  Rng rng(seed);
  auto fill = [&rng](LinearLayer& layer) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_dim()));
    for (double& w : layer.weights.values()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
  };
  fill(model.feature_layer_);
  fill(model.classifier_);
  return model;
}

void Model::set_lif(const LifConfig& lif) {
  lif.validate();
  lif_ = lif;
}

std::vector<std::span<double>> Model::parameter_spans() {
  return {feature_layer_.weights.values(), feature_layer_.bias, classifier_.weights.values(),
          classifier_.bias};
}

std::vector<std::span<const double>> Model::parameter_spans() const {
  return {feature_layer_.weights.values(), feature_layer_.bias, classifier_.weights.values(),
          classifier_.bias};
}

namespace {

void check_layer(const LinearLayer& layer, std::size_t in, std::size_t out,
                 const char* name) {
  if (layer.in_dim() != in || layer.out_dim() != out || layer.bias.size() != out) {
    throw ShapeError(std::string(name) + " has weights " + layer.weights.shape_string() +
                     " and bias " + std::to_string(layer.bias.size()) + ", expected " +
                     shape_string(in, out) + " and " + std::to_string(out));
  }
}

}  // namespace

void Model::check_shapes() const {
  check_layer(feature_layer_, dims_.input_dim, dims_.hidden_dim, "feature layer");
  check_layer(classifier_, dims_.hidden_dim, dims_.classes, "classifier layer");
}

std::size_t param_count(const Model& model) noexcept {
  return model.feature_layer().param_count() + model.classifier().param_count();
}

Gradients::Gradients(const ModelDims& dims)
    : feature_layer(dims.input_dim, dims.hidden_dim), classifier(dims.hidden_dim, dims.classes) {}

std::vector<std::span<double>> Gradients::spans() {
  return {feature_layer.weights.values(), feature_layer.bias, classifier.weights.values(),
          classifier.bias};
}

std::vector<std::span<const double>> Gradients::spans() const {
  return {feature_layer.weights.values(), feature_layer.bias, classifier.weights.values(),
          classifier.bias};
}

void Gradients::set_zero() {
  for (auto s : spans()) std::fill(s.begin(), s.end(), 0.0);
}

Gradients& Gradients::operator+=(const Gradients& other) {
  auto mine = spans();
  auto theirs = other.spans();
  for (std::size_t k = 0; k < mine.size(); ++k) {
    if (mine[k].size() != theirs[k].size()) {
      throw ShapeError("gradient accumulation across different model shapes");
    }
    for (std::size_t i = 0; i < mine[k].size(); ++i) mine[k][i] += theirs[k][i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double factor) {
  for (auto s : spans()) {
    for (double& v : s) v *= factor;
  }
  return *this;
}

Matrix linear_forward(const Matrix& x, const LinearLayer& layer) {
  if (x.cols() != layer.in_dim() || layer.bias.size() != layer.out_dim()) {
    throw ShapeError("linear_forward: input " + x.shape_string() + " vs weights " +
                     layer.weights.shape_string());
  }
  const std::size_t out_dim = layer.out_dim();
  Matrix out(x.rows(), out_dim);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    auto dst = out.row(t);
    std::copy(layer.bias.begin(), layer.bias.end(), dst.begin());
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double xk = x(t, k);
      const auto w = layer.weights.row(k);
      for (std::size_t j = 0; j < out_dim; ++j) dst[j] += xk * w[j];
    }
  }
  if (!out.all_finite()) throw NumericError("linear_forward produced non-finite values");
  return out;
}

std::vector<double> linear_forward(std::span<const double> x, const LinearLayer& layer) {
  if (x.size() != layer.in_dim() || layer.bias.size() != layer.out_dim()) {
    throw ShapeError("linear_forward: input 1x" + std::to_string(x.size()) +
                     " vs weights " + layer.weights.shape_string());
  }
  std::vector<double> out(layer.bias);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto w = layer.weights.row(k);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += x[k] * w[j];
  }
  for (double v : out) {
    if (!std::isfinite(v)) throw NumericError("linear_forward produced non-finite values");
  }
  return out;
}

LifOutput lif_forward(const Matrix& currents, const LifConfig& cfg) {
  cfg.validate();
  if (currents.rows() == 0) throw ShapeError("lif_forward needs at least one time step");
  const std::size_t steps = currents.rows();
  const std::size_t neurons = currents.cols();
  LifOutput out{Matrix(steps, neurons), Matrix(steps, neurons)};
  std::vector<double> state(neurons, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < neurons; ++j) {
      const double current = currents(t, j);
      if (!std::isfinite(current)) {
        throw NumericError("lif_forward: non-finite current at (t=" + std::to_string(t) +
                           ", j=" + std::to_string(j) + ")");
      }
      const double u = cfg.beta * state[j] + current;
      const bool fired = u >= cfg.v_threshold;
      out.membrane(t, j) = u;
      out.spikes(t, j) = fired ? 1.0 : 0.0;
      if (fired) {
        state[j] = cfg.reset_mode == ResetMode::to_zero ? 0.0 : u - cfg.v_threshold;
      } else {
        state[j] = u;
      }
    }
  }
  if (!out.membrane.all_finite()) throw NumericError("lif_forward: membrane overflow");
  return out;
}

std::vector<double> temporal_mean(const Matrix& spikes) {
  if (spikes.rows() == 0) throw ShapeError("temporal_mean of an empty spike matrix");
  std::vector<double> out(spikes.cols(), 0.0);
  for (std::size_t t = 0; t < spikes.rows(); ++t) {
    const auto r = spikes.row(t);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += r[j];
  }
  const double inv = 1.0 / static_cast<double>(spikes.rows());
  for (double& v : out) v *= inv;
  return out;
}

std::vector<double> softmax_logprobs(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax of an empty vector");
  for (double z : logits) {
    if (!std::isfinite(z)) throw NumericError("softmax input is not finite");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - peak);
  const double log_norm = peak + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_norm;
  return out;
}

ForwardCache forward(const Model& model, const Matrix& x) {
  model.check_shapes();
  const auto& dims = model.dims();
  if (x.rows() != dims.input_steps || x.cols() != dims.input_dim) {
    throw ShapeError("forward: input " + x.shape_string() + ", model expects " +
                     shape_string(dims.input_steps, dims.input_dim));
  }
  if (!x.all_finite()) throw NumericError("forward: input contains non-finite values");

  ForwardCache cache;
  cache.input = x;
  cache.currents = linear_forward(x, model.feature_layer());
  auto lif = lif_forward(cache.currents, model.lif());
  cache.membrane = std::move(lif.membrane);
  cache.spikes = std::move(lif.spikes);
  cache.pooled = temporal_mean(cache.spikes);
  cache.logits = linear_forward(cache.pooled, model.classifier());
  cache.log_probs = softmax_logprobs(cache.logits);
  return cache;
}

std::size_t predicted_class(std::span<const double> scores) {
  if (scores.empty()) throw ShapeError("predicted_class of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

double nll_loss(std::span<const std::vector<double>> log_probs,
                std::span<const std::size_t> labels) {
  if (log_probs.empty()) throw UsageError("nll_loss on an empty batch");
  if (log_probs.size() != labels.size()) {
    throw UsageError("nll_loss: " + std::to_string(log_probs.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= log_probs[i].size()) {
      throw UsageError("nll_loss: label " + std::to_string(labels[i]) + " out of range");
    }
    total -= log_probs[i][labels[i]];
  }
  return total / static_cast<double>(labels.size());
}

double surrogate_derivative(double membrane, const LifConfig& cfg) noexcept {
  const double denom = 1.0 + cfg.surrogate_slope * std::abs(membrane - cfg.v_threshold);
  return cfg.surrogate_slope / (denom * denom);
}

Gradients backward(const Model& model, const ForwardCache& cache, std::size_t label) {
  model.check_shapes();
  const auto& dims = model.dims();
  const std::size_t steps = dims.input_steps;
  const std::size_t hidden = dims.hidden_dim;
  const std::size_t classes = dims.classes;
  auto matches = [](const Matrix& m, std::size_t r, std::size_t c) {
    return m.rows() == r && m.cols() == c;
  };
  if (!matches(cache.input, steps, dims.input_dim) || !matches(cache.membrane, steps, hidden) ||
      !matches(cache.spikes, steps, hidden) || cache.pooled.size() != hidden ||
      cache.log_probs.size() != classes) {
    throw UsageError("backward: cache shapes do not belong to this model");
  }
  if (label >= classes) {
    throw UsageError("backward: label " + std::to_string(label) + " out of range");
  }

  const LifConfig& lif = model.lif();
  Gradients grads(dims);

  std::vector<double> dlogits(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    dlogits[c] = std::exp(cache.log_probs[c]) - (c == label ? 1.0 : 0.0);
  }

  std::vector<double> dpooled(hidden, 0.0);
  for (std::size_t j = 0; j < hidden; ++j) {
    auto gw = grads.classifier.weights.row(j);
    const auto w = model.classifier().weights.row(j);
    double acc = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      gw[c] = cache.pooled[j] * dlogits[c];
      acc += w[c] * dlogits[c];
    }
    dpooled[j] = acc;
  }
  std::copy(dlogits.begin(), dlogits.end(), grads.classifier.bias.begin());

  // d loss / d currents, unrolled backwards through the membrane recurrence.
  const double inv_steps = 1.0 / static_cast<double>(steps);
  Matrix dcurrents(steps, hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double dspike = dpooled[j] * inv_steps;
    double dstate = 0.0;  // d loss / d post-reset state at step t
    for (std::size_t t = steps; t-- > 0;) {
      const double u = cache.membrane(t, j);
      const double sg = surrogate_derivative(u, lif);
      // The reset gate is treated as a constant: only the membrane value it
      // lets through carries gradient to the next step.
      const double dreset =
          lif.reset_mode == ResetMode::subtract ? 1.0 : 1.0 - cache.spikes(t, j);
      const double du = dspike * sg + dstate * dreset;
      dcurrents(t, j) = du;
      dstate = lif.beta * du;
    }
  }

  for (std::size_t t = 0; t < steps; ++t) {
    const auto x = cache.input.row(t);
    const auto g = dcurrents.row(t);
    for (std::size_t k = 0; k < dims.input_dim; ++k) {
      auto gw = grads.feature_layer.weights.row(k);
      for (std::size_t j = 0; j < hidden; ++j) gw[j] += x[k] * g[j];
    }
    for (std::size_t j = 0; j < hidden; ++j) grads.feature_layer.bias[j] += g[j];
  }

  for (auto s : std::as_const(grads).spans()) {
    for (double v : s) {
      if (!std::isfinite(v)) throw NumericError("backward produced non-finite gradients");
    }
  }
  return grads;
}

}  // namespace spikelane
