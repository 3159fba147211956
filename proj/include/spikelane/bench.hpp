#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "spikelane/evaluation.hpp"
#include "spikelane/training.hpp"

namespace spikelane {

/// Efficiency figures for one training run: model size, memory, per-epoch
/// timing and held-out accuracy.
struct BenchReport {
  std::size_t param_count = 0;
  std::size_t checkpoint_bytes = 0;
  /// Parameters + gradient buffer + optimizer moments, in bytes.
  std::size_t in_memory_bytes = 0;
  double mean_epoch_time_s = 0.0;
  double min_epoch_time_s = 0.0;
  double max_epoch_time_s = 0.0;
  double total_train_time_s = 0.0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  std::optional<double> macro_auc;
};

/// In-memory footprint of training state for `model` under `optimizer`.
std::size_t training_memory_bytes(const Model& model, OptimizerKind optimizer) noexcept;

BenchReport summarize_bench(const TrainResult& run, const EvalReport& test_report,
                            OptimizerKind optimizer);

void write_bench_text(std::ostream& out, const BenchReport& report);
/// Single header row plus one data row.
void write_bench_csv(std::ostream& out, const BenchReport& report);

}  // namespace spikelane
