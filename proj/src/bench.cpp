#include "spikelane/bench.hpp"

#include <algorithm>
#include <ostream>

#include "spikelane/checkpoint.hpp"
#include "spikelane/errors.hpp"
#include "text_util.hpp"

namespace spikelane {

std::size_t training_memory_bytes(const Model& model, OptimizerKind optimizer) noexcept {
  const std::size_t params = param_count(model);
  const std::size_t buffers = optimizer == OptimizerKind::adam ? 4 : 2;  // p, g, (m, v)
  return buffers * params * sizeof(double);
}

BenchReport summarize_bench(const TrainResult& run, const EvalReport& test_report,
                            OptimizerKind optimizer) {
  if (run.logs.empty()) throw UsageError("summarize_bench: training log is empty");
  BenchReport r;
  r.param_count = param_count(run.model);
  r.checkpoint_bytes = save_model(run.model).size();
  r.in_memory_bytes = training_memory_bytes(run.model, optimizer);
  r.min_epoch_time_s = run.logs.front().wall_time_s;
  r.max_epoch_time_s = run.logs.front().wall_time_s;
  for (const auto& log : run.logs) {
    r.total_train_time_s += log.wall_time_s;
    r.min_epoch_time_s = std::min(r.min_epoch_time_s, log.wall_time_s);
    r.max_epoch_time_s = std::max(r.max_epoch_time_s, log.wall_time_s);
  }
  r.epochs_run = run.logs.size();
  r.mean_epoch_time_s = r.total_train_time_s / static_cast<double>(r.epochs_run);
  // Guard the order statistics against rounding in the mean.
  r.mean_epoch_time_s = std::clamp(r.mean_epoch_time_s, r.min_epoch_time_s, r.max_epoch_time_s);
  r.best_epoch = run.best_epoch;
  r.final_loss = run.best_epoch > 0 ? run.logs[run.best_epoch - 1].mean_loss : run.logs.back().mean_loss;
  r.final_accuracy = test_report.accuracy;
  r.macro_auc = test_report.macro_auc;
  return r;
}

void write_bench_text(std::ostream& out, const BenchReport& r) {
  out << "parameters: " << r.param_count << '\n'
      << "checkpoint_bytes: " << r.checkpoint_bytes << '\n'
      << "checkpoint_mb: " << text::format_real(static_cast<double>(r.checkpoint_bytes) / 1e6, 3)
      << '\n'
      << "training_memory_bytes: " << r.in_memory_bytes << '\n'
      << "epochs_run: " << r.epochs_run << '\n'
      << "best_epoch: " << r.best_epoch << '\n'
      << "best_loss: " << text::format_real(r.final_loss, 9) << '\n'
      << "epoch_time_mean_s: " << text::format_real(r.mean_epoch_time_s, 6) << '\n'
      << "epoch_time_min_s: " << text::format_real(r.min_epoch_time_s, 6) << '\n'
      << "epoch_time_max_s: " << text::format_real(r.max_epoch_time_s, 6) << '\n'
      << "train_time_total_s: " << text::format_real(r.total_train_time_s, 6) << '\n'
      << "test_accuracy: " << text::format_real(r.final_accuracy, 9) << '\n'
      << "test_macro_auc: "
      << (r.macro_auc ? text::format_real(*r.macro_auc, 9) : std::string("unavailable")) << '\n';
}

void write_bench_csv(std::ostream& out, const BenchReport& r) {
  out << "param_count,checkpoint_bytes,training_memory_bytes,mean_epoch_time_s,min_epoch_time_s,"
         "max_epoch_time_s,total_train_time_s,epochs_run,best_epoch,best_loss,test_accuracy,"
         "test_macro_auc\n";
  out << r.param_count << ',' << r.checkpoint_bytes << ',' << r.in_memory_bytes << ','
      << text::format_real(r.mean_epoch_time_s, 9) << ',' << text::format_real(r.min_epoch_time_s, 9)
      << ',' << text::format_real(r.max_epoch_time_s, 9) << ','
      << text::format_real(r.total_train_time_s, 9) << ',' << r.epochs_run << ',' << r.best_epoch
      << ',' << text::format_real(r.final_loss, 9) << ',' << text::format_real(r.final_accuracy, 9)
      << ',' << (r.macro_auc ? text::format_real(*r.macro_auc, 9) : std::string()) << '\n';
}

}  // namespace spikelane
