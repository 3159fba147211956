#include "spikelane/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "spikelane/errors.hpp"
#include "text_util.hpp"

namespace spikelane {

Prediction predict(const Model& model, const Matrix& features) {
  if (model.dims().classes != kIntentionCount) {
    throw ShapeError("predict needs a " + std::to_string(kIntentionCount) + "-class model");
  }
  const auto cache = forward(model, features);
  Prediction p;
  for (std::size_t c = 0; c < kIntentionCount; ++c) p.probabilities[c] = std::exp(cache.log_probs[c]);
  p.label = static_cast<Intention>(predicted_class(cache.log_probs));
  return p;
}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t sum = 0;
  for (const auto& row : counts) sum = std::accumulate(row.begin(), row.end(), sum);
  return sum;
}

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t sum = 0;
  for (std::size_t c = 0; c < kIntentionCount; ++c) sum += counts[c][c];
  return sum;
}

ConfusionResult confusion_and_accuracy(std::span<const Intention> predictions,
                                       std::span<const Intention> labels) {
  if (predictions.empty()) throw UsageError("confusion_and_accuracy on empty input");
  if (predictions.size() != labels.size()) {
    throw UsageError("confusion_and_accuracy: " + std::to_string(predictions.size()) +
                     " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  ConfusionResult r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++r.confusion.counts[class_index(labels[i])][class_index(predictions[i])];
  }
  r.accuracy = static_cast<double>(r.confusion.trace()) / static_cast<double>(labels.size());
  return r;
}

namespace {

void check_binary_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw UsageError("ROC inputs: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw UsageError("binary labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw NumericError("ROC score is not finite");
    pos += labels[i];
  }
  if (pos == 0 || pos == labels.size()) {
    throw DegenerateLabelsError("ROC needs at least one positive and one negative label");
  }
}

}  // namespace

RatePoint binary_rates(std::span<const double> scores, std::span<const std::uint8_t> labels,
                       double threshold) {
  check_binary_inputs(scores, labels);
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool positive = scores[i] >= threshold;
    if (labels[i]) {
      (positive ? tp : fn) += 1;
    } else {
      (positive ? fp : tn) += 1;
    }
  }
  return {static_cast<double>(fp) / static_cast<double>(fp + tn),
          static_cast<double>(tp) / static_cast<double>(tp + fn)};
}

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_binary_inputs(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto negatives = static_cast<double>(labels.size()) - positives;

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i) {
      (labels[order[i]] ? tp : fp) += 1;
    }
    curve.points.push_back(
        {threshold, static_cast<double>(fp) / negatives, static_cast<double>(tp) / positives});
  }
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return curve;
}

EvalReport evaluate(const Model& model, std::span<const WindowSample> test_set) {
  if (test_set.empty()) throw UsageError("evaluate on an empty test set");
  EvalReport report;
  report.n_samples = test_set.size();

  std::vector<Intention> preds, labels;
  std::array<std::vector<double>, kIntentionCount> scores;
  preds.reserve(test_set.size());
  labels.reserve(test_set.size());
  for (const auto& s : test_set) {
    const auto p = predict(model, s.features);
    preds.push_back(p.label);
    labels.push_back(s.label);
    for (std::size_t c = 0; c < kIntentionCount; ++c) scores[c].push_back(p.probabilities[c]);
  }
  auto cm = confusion_and_accuracy(preds, labels);
  report.confusion = cm.confusion;
  report.accuracy = cm.accuracy;

  double auc_sum = 0.0;
  std::size_t available = 0;
  for (std::size_t c = 0; c < kIntentionCount; ++c) {
    std::vector<std::uint8_t> binary(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) binary[i] = class_index(labels[i]) == c;
    const auto pos = std::count(binary.begin(), binary.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(binary.size())) {
      report.warnings.push_back("class '" + std::string(intention_name(static_cast<Intention>(c))) +
                                "' lacks positives or negatives in the test labels; ROC unavailable");
      continue;
    }
    auto curve = roc_curve(scores[c], binary);
    curve.class_id = c;
    auc_sum += curve.auc;
    ++available;
    report.roc[c] = std::move(curve);
  }
  if (available > 0) report.macro_auc = auc_sum / static_cast<double>(available);
  return report;
}

namespace {

std::string fixed(double v, int digits = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

void write_report_text(std::ostream& out, const EvalReport& report) {
  out << "samples: " << report.n_samples << '\n';
  out << "accuracy: " << fixed(report.accuracy) << '\n';
  out << "macro_auc: " << (report.macro_auc ? fixed(*report.macro_auc) : "unavailable") << '\n';
  out << "confusion (rows = true, cols = predicted):\n";
  out << std::setw(8) << "";
  for (std::size_t c = 0; c < kIntentionCount; ++c) {
    out << std::setw(8) << intention_name(static_cast<Intention>(c));
  }
  out << '\n';
  for (std::size_t r = 0; r < kIntentionCount; ++r) {
    out << std::setw(8) << intention_name(static_cast<Intention>(r));
    for (std::size_t c = 0; c < kIntentionCount; ++c) out << std::setw(8) << report.confusion.counts[r][c];
    out << '\n';
  }
  for (std::size_t c = 0; c < kIntentionCount; ++c) {
    out << "auc_" << intention_name(static_cast<Intention>(c)) << ": "
        << (report.roc[c] ? fixed(report.roc[c]->auc) : "unavailable") << '\n';
  }
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
}

void write_eval_outputs(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.txt", std::ios::trunc);
    if (!out) throw IoError("cannot open " + (dir / "report.txt").string());
    write_report_text(out, report);
  }
  for (std::size_t c = 0; c < kIntentionCount; ++c) {
    if (!report.roc[c]) continue;
    const auto path = dir / ("roc_class" + std::to_string(c) + ".csv");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string());
    out << "threshold,fpr,tpr\n";
    for (const auto& p : report.roc[c]->points) {
      out << (std::isinf(p.threshold) ? std::string("inf") : text::format_real(p.threshold)) << ','
          << text::format_real(p.fpr) << ',' << text::format_real(p.tpr) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
  }
}

std::size_t TimelineReport::false_detections() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(detections.begin(), detections.end(), [](const Detection& d) { return d.is_false; }));
}

std::vector<std::size_t> debounced_runs(std::span<const Intention> predictions,
                                        std::size_t min_run) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < predictions.size();) {
    std::size_t j = i;
    while (j < predictions.size() && predictions[j] == predictions[i]) ++j;
    if (predictions[i] != Intention::keep && j - i >= min_run) starts.push_back(i);
    i = j;
  }
  return starts;
}

TimelineReport timeline_predict(const Model& model, const Trajectory& traj,
                                const NormStats& normalizer, WindowConfig window) {
  window.stride = 1;
  const auto labels = label_frames(traj);
  auto windows = make_windows(traj, labels, window);
  if (windows.empty()) {
    throw UsageError("trajectory " + std::to_string(traj.vehicle_id) +
                     " is too short for a single window");
  }
  TimelineReport report;
  report.vehicle_id = traj.vehicle_id;
  report.onsets = traj.events;
  std::vector<Intention> preds;
  for (auto& w : windows) {
    normalizer.apply(w.features);
    const auto p = predict(model, w.features);
    report.steps.push_back({w.end_frame, p.label, p.probabilities});
    preds.push_back(p.label);
  }
  const std::int64_t horizon = intention_horizon_frames(traj.sample_rate_hz);
  for (std::size_t step : debounced_runs(preds)) {
    Detection d;
    d.step = step;
    d.frame = report.steps[step].end_frame;
    d.direction = preds[step] == Intention::left ? Direction::left : Direction::right;
    d.is_false = std::none_of(traj.events.begin(), traj.events.end(), [&](const LaneChangeEvent& e) {
      return e.direction == d.direction && e.onset_frame >= d.frame &&
             e.onset_frame <= d.frame + horizon;
    });
    report.detections.push_back(d);
  }
  return report;
}

void write_timeline_csv(std::ostream& out, const TimelineReport& report) {
  out << "end_frame,pred,p_keep,p_left,p_right\n";
  for (const auto& s : report.steps) {
    out << s.end_frame << ',' << class_index(s.predicted);
    for (double p : s.probabilities) out << ',' << text::format_real(p);
    out << '\n';
  }
}

}  // namespace spikelane
