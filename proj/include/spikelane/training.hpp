#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spikelane/dataset.hpp"
#include "spikelane/snn.hpp"

namespace spikelane {

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 2000;
  std::size_t patience_epochs = 50;
  double min_loss_delta = 1e-6;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  /// Worker threads for per-sample gradients; 0 picks hardware_concurrency.
  /// Results do not depend on this value.
  std::size_t threads = 1;

  void validate() const;
};

/// Applies `key=value` lines (blank lines and '#' comments ignored) onto `cfg`.
/// Keys: batch_size, learning_rate, max_epochs, patience_epochs,
/// min_loss_delta, seed, optimizer (adam|sgd), threads.
void apply_config_file(std::istream& in, TrainConfig& cfg);
void apply_config_file(const std::filesystem::path& path, TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double wall_time_s = 0.0;
  double train_accuracy = 0.0;
};

struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  std::size_t step = 0;
  std::vector<AdamMoments> moments;  // one per parameter span (adam only)
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

OptimizerState make_optimizer_state(OptimizerKind kind, std::span<const std::span<double>> params);

/// One update of `params` from `grads`. sgd: p -= lr * g. adam:
/// bias-corrected moments with beta1 0.9, beta2 0.999, eps 1e-8.
void optimizer_step(std::span<const std::span<double>> params,
                    std::span<const std::span<const double>> grads, OptimizerState& state,
                    double learning_rate);

/// Plateau detector: stop once `patience` consecutive epochs fail to improve
/// the best loss by more than `min_delta`.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

  /// Records one epoch's loss; returns true if it is a new best.
  bool observe(double loss);
  bool should_stop() const noexcept { return epochs_since_best_ >= patience_; }
  double best_loss() const noexcept { return best_; }
  std::size_t epochs_since_best() const noexcept { return epochs_since_best_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_best_ = 0;
};

struct TrainResult {
  Model model;  // parameters at the end of the best-loss epoch
  std::vector<EpochLog> logs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

/// Gradient of the mean loss over `batch`, reduced in sample order so the
/// result is independent of `threads`. Also returns per-sample losses and
/// correctness through the optional outputs.
Gradients batch_gradients(const Model& model, std::span<const WindowSample> samples,
                          std::span<const std::size_t> batch, std::size_t threads,
                          std::vector<double>* losses = nullptr,
                          std::vector<bool>* correct = nullptr);

TrainResult train(const Model& initial, std::span<const WindowSample> train_set,
                  const TrainConfig& cfg);

/// `epoch,mean_loss,wall_time_s,train_accuracy` with 9 significant digits.
void write_training_log(std::ostream& out, std::span<const EpochLog> logs);
void write_training_log(const std::filesystem::path& path, std::span<const EpochLog> logs);
std::vector<EpochLog> read_training_log(std::istream& in);

/// SPIKE_LANE_THREADS if set (0 = auto), else `fallback`.
std::size_t threads_from_env(std::size_t fallback = 1);

}  // namespace spikelane
