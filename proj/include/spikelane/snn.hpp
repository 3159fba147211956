#pragma once

// Spiking classifier: linear feature expansion, a layer of leaky
// integrate-and-fire neurons, spike-rate pooling over time, and a linear
// read-out followed by log-softmax.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spikelane/matrix.hpp"

namespace spikelane {

enum class ResetMode : std::uint8_t { to_zero = 0, subtract = 1 };

struct LifConfig {
  double beta = 0.9;
  double v_threshold = 1.0;
  double surrogate_slope = 25.0;
  ResetMode reset_mode = ResetMode::to_zero;

  /// Throws ConfigError unless 0 < beta < 1, v_threshold > 0, surrogate_slope > 0.
  void validate() const;

  friend bool operator==(const LifConfig&, const LifConfig&) = default;
};

/// y = x W + b with W stored as [in_dim x out_dim].
struct LinearLayer {
  Matrix weights;
  std::vector<double> bias;

  LinearLayer() = default;
  LinearLayer(std::size_t in_dim, std::size_t out_dim);

  std::size_t in_dim() const noexcept { return weights.rows(); }
  std::size_t out_dim() const noexcept { return weights.cols(); }
  std::size_t param_count() const noexcept { return weights.size() + bias.size(); }

  friend bool operator==(const LinearLayer&, const LinearLayer&) = default;
};

struct ModelDims {
  std::size_t input_steps = 12;
  std::size_t input_dim = 5;
  std::size_t hidden_dim = 24;
  std::size_t classes = 3;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

class Model {
 public:
  /// Zero-initialized parameters. Throws ConfigError on a zero dimension or
  /// an invalid LIF configuration.
  explicit Model(ModelDims dims = {}, LifConfig lif = {});

  /// Weights and biases drawn uniformly from +-1/sqrt(fan_in).
  static Model initialized(std::uint64_t seed, ModelDims dims = {}, LifConfig lif = {});

  const ModelDims& dims() const noexcept { return dims_; }
  const LifConfig& lif() const noexcept { return lif_; }
  void set_lif(const LifConfig& lif);

  const LinearLayer& feature_layer() const noexcept { return feature_layer_; }
  const LinearLayer& classifier() const noexcept { return classifier_; }
  LinearLayer& feature_layer() noexcept { return feature_layer_; }
  LinearLayer& classifier() noexcept { return classifier_; }

  /// Trainable parameters in declaration order: feature weights, feature
  /// bias, classifier weights, classifier bias.
  std::vector<std::span<double>> parameter_spans();
  std::vector<std::span<const double>> parameter_spans() const;

  /// Throws ShapeError if a layer no longer matches dims() (layers are
  /// mutable through the accessors above).
  void check_shapes() const;

  friend bool operator==(const Model&, const Model&) = default;

 private:
  ModelDims dims_;
  LifConfig lif_;
  LinearLayer feature_layer_;
  LinearLayer classifier_;
};

/// Total trainable scalars; 219 for the default 5 -> 24 -> 3 model.
std::size_t param_count(const Model& model) noexcept;

struct ForwardCache {
  Matrix input;     // [T x in]
  Matrix currents;  // [T x H], feature layer output
  Matrix membrane;  // [T x H], pre-reset potentials
  Matrix spikes;    // [T x H], 0 or 1
  std::vector<double> pooled;     // [H], spike rate per neuron
  std::vector<double> logits;     // [C]
  std::vector<double> log_probs;  // [C]

  friend bool operator==(const ForwardCache&, const ForwardCache&) = default;
};

/// Same shapes as the model's trainable layers.
struct Gradients {
  LinearLayer feature_layer;
  LinearLayer classifier;

  Gradients() = default;
  explicit Gradients(const ModelDims& dims);

  std::vector<std::span<double>> spans();
  std::vector<std::span<const double>> spans() const;

  void set_zero();
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double factor);
};

struct LifOutput {
  Matrix spikes;
  Matrix membrane;
};

Matrix linear_forward(const Matrix& x, const LinearLayer& layer);
std::vector<double> linear_forward(std::span<const double> x, const LinearLayer& layer);

/// Runs every column of `currents` as an independent neuron starting from
/// rest. The threshold test is inclusive (u >= v_threshold).
LifOutput lif_forward(const Matrix& currents, const LifConfig& cfg);

/// Column means of a spike matrix.
std::vector<double> temporal_mean(const Matrix& spikes);

/// Max-shifted log-softmax.
std::vector<double> softmax_logprobs(std::span<const double> logits);

ForwardCache forward(const Model& model, const Matrix& x);

/// Index of the largest score; ties go to the lowest index.
std::size_t predicted_class(std::span<const double> scores);

/// Mean negative log-likelihood of `labels` under per-sample log-probabilities.
double nll_loss(std::span<const std::vector<double>> log_probs,
                std::span<const std::size_t> labels);

/// Fast-sigmoid surrogate for the spike derivative,
/// slope / (1 + slope * |u - v_threshold|)^2.
double surrogate_derivative(double membrane, const LifConfig& cfg) noexcept;

/// Gradient of -log P(label) with respect to both linear layers.
///
/// The membrane recurrence is unrolled backwards in time. The spike
/// nonlinearity contributes surrogate_derivative(u) on the output path. The
/// reset gate is held constant, so the post-reset state passes gradient with
/// factor 1 for subtract and (1 - s) for reset-to-zero, where s is the cached
/// spike. Pooled activity and log-probabilities are also read from the
/// cache.
Gradients backward(const Model& model, const ForwardCache& cache, std::size_t label);

}  // namespace spikelane
