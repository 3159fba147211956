#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spikelane/dataset.hpp"
#include "spikelane/snn.hpp"

namespace spikelane {

struct Prediction {
  Intention label = Intention::keep;
  std::array<double, kIntentionCount> probabilities{};
};

/// argmax of the class probabilities, ties toward keep < left < right.
Prediction predict(const Model& model, const Matrix& features);

/// counts[true][predicted]
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kIntentionCount>, kIntentionCount> counts{};

  std::size_t total() const noexcept;
  std::size_t trace() const noexcept;
};

struct ConfusionResult {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
};

ConfusionResult confusion_and_accuracy(std::span<const Intention> predictions,
                                       std::span<const Intention> labels);

struct RatePoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Positive iff score >= threshold. Throws DegenerateLabelsError unless both
/// classes are present.
RatePoint binary_rates(std::span<const double> scores, std::span<const std::uint8_t> labels,
                       double threshold);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::size_t class_id = 0;
  std::vector<RocPoint> points;  // (0,0) at threshold +inf through (1,1)
  double auc = 0.0;
};

/// Thresholds are +inf followed by the distinct scores in descending order;
/// AUC is the trapezoidal area under the resulting points.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct EvalReport {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  /// One-vs-rest per class; empty when the test labels hold no positives or
  /// no negatives for that class.
  std::array<std::optional<RocCurve>, kIntentionCount> roc;
  /// Mean AUC over the available curves.
  std::optional<double> macro_auc;
  std::size_t n_samples = 0;
  std::vector<std::string> warnings;
};

EvalReport evaluate(const Model& model, std::span<const WindowSample> test_set);

/// Human-readable summary; contains no timing data.
void write_report_text(std::ostream& out, const EvalReport& report);
/// Writes report.txt and roc_class<k>.csv (threshold,fpr,tpr) into `dir`.
void write_eval_outputs(const std::filesystem::path& dir, const EvalReport& report);

struct TimelineStep {
  std::int64_t end_frame = 0;
  Intention predicted = Intention::keep;
  std::array<double, kIntentionCount> probabilities{};
};

struct Detection {
  std::size_t step = 0;  // index into TimelineReport::steps
  std::int64_t frame = 0;
  Direction direction = Direction::left;
  /// No ground-truth onset of the same direction within the following 3 s.
  bool is_false = false;
};

struct TimelineReport {
  std::int64_t vehicle_id = 0;
  std::vector<TimelineStep> steps;
  std::vector<Detection> detections;
  std::vector<LaneChangeEvent> onsets;

  std::size_t false_detections() const noexcept;
};

inline constexpr std::size_t kDetectionDebounce = 3;

/// Start of every maximal run of one non-keep class lasting at least
/// `min_run` consecutive steps.
std::vector<std::size_t> debounced_runs(std::span<const Intention> predictions,
                                        std::size_t min_run = kDetectionDebounce);

/// Predicts every stride-1 window of `traj` after normalizing it with
/// `normalizer`. Throws UsageError if the trajectory yields no window.
TimelineReport timeline_predict(const Model& model, const Trajectory& traj,
                                const NormStats& normalizer, WindowConfig window);

/// end_frame,pred,p_keep,p_left,p_right
void write_timeline_csv(std::ostream& out, const TimelineReport& report);

}  // namespace spikelane
