#include "spikelane/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "spikelane/errors.hpp"
#include "spikelane/rng.hpp"
#include "text_util.hpp"

namespace spikelane {

std::string_view intention_name(Intention i) noexcept {
  switch (i) {
    case Intention::keep: return "keep";
    case Intention::left: return "left";
    case Intention::right: return "right";
  }
  return "unknown";
}

void Trajectory::validate() const {
  const std::string who = "trajectory " + std::to_string(vehicle_id);
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw UsageError(who + ": sample rate must be > 0");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (i > 0 && f.t_index <= frames[i - 1].t_index) {
      throw UsageError(who + ": frame indices not strictly increasing at " +
                       std::to_string(f.t_index));
    }
    for (double v : f.features()) {
      if (!std::isfinite(v)) {
        throw UsageError(who + ": non-finite feature at frame " + std::to_string(f.t_index));
      }
    }
  }
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto onset = events[k].onset_frame;
    if (frames.empty() || onset < frames.front().t_index || onset > frames.back().t_index) {
      throw UsageError(who + ": event onset " + std::to_string(onset) + " outside frame range");
    }
    if (k > 0 && onset <= events[k - 1].onset_frame) {
      throw UsageError(who + ": events not sorted by onset");
    }
  }
}

// ---------------------------------------------------------------------------
// CSV ingest

namespace {

constexpr std::array<std::string_view, 8> kColumns = {
    "vehicle_id", "frame", "delta_y", "v_x", "a_x", "v_y", "a_y", "lane_id"};

struct ParsedFrame {
  Frame frame;
  std::size_t line = 0;
};

Direction infer_direction(const std::vector<ParsedFrame>& rows, std::size_t change,
                          double sample_rate_hz) {
  const auto lookback = static_cast<std::size_t>(std::max<long long>(1, std::llround(sample_rate_hz)));
  const std::size_t before = change - 1;
  const std::size_t anchor = before >= lookback ? before - lookback : 0;
  const double drift = rows[before].frame.delta_y - rows[anchor].frame.delta_y;
  if (drift > 0.0) return Direction::left;
  if (drift < 0.0) return Direction::right;
  // A left change re-references delta_y from about +w/2 to -w/2.
  const double jump = rows[change].frame.delta_y - rows[before].frame.delta_y;
  if (jump < 0.0) return Direction::left;
  if (jump > 0.0) return Direction::right;
  throw ParseError("cannot infer lane-change direction: delta_y does not move", rows[change].line);
}

}  // namespace

std::vector<Trajectory> parse_trajectories(std::istream& in, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw ConfigError("sample rate must be > 0");
  }
  std::string line;
  std::size_t line_no = 0;

  std::array<std::size_t, kColumns.size()> column_of{};
  std::size_t header_cells = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!text::trim(line).empty()) break;
  }
  if (text::trim(line).empty()) throw ParseError("missing header", line_no == 0 ? 1 : line_no);
  {
    auto header = text::split(line);
    header_cells = header.size();
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
      auto it = std::find(header.begin(), header.end(), kColumns[c]);
      if (it == header.end()) {
        throw ParseError("missing column '" + std::string(kColumns[c]) + "'", line_no);
      }
      column_of[c] = static_cast<std::size_t>(it - header.begin());
    }
  }

  std::map<std::int64_t, std::vector<ParsedFrame>> by_vehicle;
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto cells = text::split(line);
    if (cells.size() != header_cells) {
      throw ParseError("expected " + std::to_string(header_cells) + " cells, found " +
                       std::to_string(cells.size()),
                       line_no);
    }
    auto int_cell = [&](std::size_t c) {
      auto v = text::parse_int(cells[column_of[c]]);
      if (!v) {
        throw ParseError("non-integer " + std::string(kColumns[c]) + " '" +
                             std::string(cells[column_of[c]]) + "'",
                         line_no);
      }
      return *v;
    };
    auto real_cell = [&](std::size_t c) {
      auto v = text::parse_real(cells[column_of[c]]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("non-numeric " + std::string(kColumns[c]) + " '" +
                             std::string(cells[column_of[c]]) + "'",
                         line_no);
      }
      return *v;
    };
    ParsedFrame row;
    const std::int64_t vehicle = int_cell(0);
    row.frame.t_index = int_cell(1);
    row.frame.delta_y = real_cell(2);
    row.frame.v_x = real_cell(3);
    row.frame.a_x = real_cell(4);
    row.frame.v_y = real_cell(5);
    row.frame.a_y = real_cell(6);
    row.frame.lane_id = int_cell(7);
    row.line = line_no;
    auto [it, inserted] = seen.emplace(std::pair{vehicle, row.frame.t_index}, line_no);
    if (!inserted) {
      throw ParseError("duplicate frame " + std::to_string(row.frame.t_index) +
                           " for vehicle " + std::to_string(vehicle) + " (first on line " +
                           std::to_string(it->second) + ")",
                       line_no);
    }
    by_vehicle[vehicle].push_back(row);
  }

  std::vector<Trajectory> out;
  out.reserve(by_vehicle.size());
  for (auto& [vehicle, rows] : by_vehicle) {
    std::sort(rows.begin(), rows.end(), [](const ParsedFrame& a, const ParsedFrame& b) {
      return a.frame.t_index < b.frame.t_index;
    });
    Trajectory traj;
    traj.vehicle_id = vehicle;
    traj.sample_rate_hz = sample_rate_hz;
    traj.frames.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      traj.frames.push_back(rows[i].frame);
      if (i > 0 && rows[i].frame.lane_id != rows[i - 1].frame.lane_id) {
        traj.events.push_back({rows[i].frame.t_index, infer_direction(rows, i, sample_rate_hz)});
      }
    }
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<Trajectory> parse_trajectories(const std::filesystem::path& path,
                                           double sample_rate_hz) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_trajectories(in, sample_rate_hz);
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories) {
  out << "vehicle_id,frame,delta_y,v_x,a_x,v_y,a_y,lane_id\n";
  for (const auto& traj : trajectories) {
    for (const auto& f : traj.frames) {
      out << traj.vehicle_id << ',' << f.t_index << ',' << text::format_real(f.delta_y) << ','
          << text::format_real(f.v_x) << ',' << text::format_real(f.a_x) << ','
          << text::format_real(f.v_y) << ',' << text::format_real(f.a_y) << ',' << f.lane_id
          << '\n';
    }
  }
}

void write_trajectories(const std::filesystem::path& path,
                        std::span<const Trajectory> trajectories) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_trajectories(out, trajectories);
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Labeling and windows

std::int64_t intention_horizon_frames(double sample_rate_hz) noexcept {
  return std::llround(3.0 * sample_rate_hz);
}

std::vector<Intention> label_frames(const Trajectory& traj) {
  if (!(traj.sample_rate_hz > 0.0)) throw UsageError("label_frames: sample rate unknown");
  const std::int64_t horizon = intention_horizon_frames(traj.sample_rate_hz);
  std::vector<Intention> labels(traj.frames.size(), Intention::keep);
  for (const auto& event : traj.events) {
    const std::int64_t lo = event.onset_frame - horizon;
    auto first = std::lower_bound(traj.frames.begin(), traj.frames.end(), lo,
                                  [](const Frame& f, std::int64_t v) { return f.t_index < v; });
    for (auto it = first; it != traj.frames.end() && it->t_index < event.onset_frame; ++it) {
      labels[static_cast<std::size_t>(it - traj.frames.begin())] = to_intention(event.direction);
    }
  }
  return labels;
}

std::size_t WindowConfig::downsample_factor(double sample_rate_hz) const {
  if (!(window_rate_hz > 0.0) || !std::isfinite(window_rate_hz)) {
    throw ConfigError("window rate must be > 0");
  }
  const long long factor = std::llround(sample_rate_hz / window_rate_hz);
  if (factor < 1) {
    throw ConfigError("downsample factor round(" + std::to_string(sample_rate_hz) + " / " +
                      std::to_string(window_rate_hz) + ") is below 1");
  }
  return static_cast<std::size_t>(factor);
}

std::vector<WindowSample> make_windows(const Trajectory& traj, std::span<const Intention> labels,
                                       const WindowConfig& cfg) {
  if (labels.size() != traj.frames.size()) {
    throw UsageError("make_windows: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(traj.frames.size()) + " frames");
  }
  if (cfg.stride == 0 || cfg.steps == 0) throw ConfigError("window stride and steps must be >= 1");
  const std::size_t factor = cfg.downsample_factor(traj.sample_rate_hz);
  const std::size_t n = traj.frames.size();
  const std::size_t downsampled = n == 0 ? 0 : (n - 1) / factor + 1;

  std::vector<WindowSample> out;
  if (downsampled < cfg.steps) return out;
  out.reserve((downsampled - cfg.steps) / cfg.stride + 1);
  for (std::size_t start = 0; start + cfg.steps <= downsampled; start += cfg.stride) {
    WindowSample sample;
    sample.features = Matrix(cfg.steps, kFeatureCount);
    for (std::size_t r = 0; r < cfg.steps; ++r) {
      const auto f = traj.frames[(start + r) * factor].features();
      std::copy(f.begin(), f.end(), sample.features.row(r).begin());
    }
    const std::size_t last = (start + cfg.steps - 1) * factor;
    sample.label = labels[last];
    sample.vehicle_id = traj.vehicle_id;
    sample.end_frame = traj.frames[last].t_index;
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<WindowSample> make_dataset_windows(std::span<const Trajectory> trajectories,
                                               const WindowConfig& cfg) {
  std::vector<WindowSample> out;
  for (const auto& traj : trajectories) {
    const auto labels = label_frames(traj);
    auto windows = make_windows(traj, labels, cfg);
    std::move(windows.begin(), windows.end(), std::back_inserter(out));
  }
  std::stable_sort(out.begin(), out.end(), [](const WindowSample& a, const WindowSample& b) {
    return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id : a.end_frame < b.end_frame;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

void NormStats::apply(Matrix& features) const {
  if (features.cols() != kFeatureCount) {
    throw ShapeError("normalizer expects " + std::to_string(kFeatureCount) +
                     " feature columns, got " + features.shape_string());
  }
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto row = features.row(r);
    for (std::size_t c = 0; c < kFeatureCount; ++c) row[c] = (row[c] - mean[c]) / stddev[c];
  }
}

NormStats fit_normalizer(std::span<const WindowSample> train) {
  if (train.empty()) throw UsageError("fit_normalizer on an empty training set");
  std::array<double, kFeatureCount> sum{};
  std::size_t count = 0;
  for (const auto& s : train) {
    if (s.features.cols() != kFeatureCount) {
      throw ShapeError("fit_normalizer: window " + s.features.shape_string());
    }
    for (std::size_t r = 0; r < s.features.rows(); ++r) {
      for (std::size_t c = 0; c < kFeatureCount; ++c) sum[c] += s.features(r, c);
    }
    count += s.features.rows();
  }
  NormStats stats;
  for (std::size_t c = 0; c < kFeatureCount; ++c) stats.mean[c] = sum[c] / static_cast<double>(count);

  std::array<double, kFeatureCount> sq{};
  for (const auto& s : train) {
    for (std::size_t r = 0; r < s.features.rows(); ++r) {
      for (std::size_t c = 0; c < kFeatureCount; ++c) {
        const double d = s.features(r, c) - stats.mean[c];
        sq[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    stats.stddev[c] = std::sqrt(sq[c] / static_cast<double>(count));
    const double floor = 1e-12 * std::max(1.0, std::abs(stats.mean[c]));
    if (!(stats.stddev[c] > floor)) {
      throw DegenerateFeatureError("feature '" + std::string(kFeatureNames[c]) +
                                   "' has zero variance in the training windows");
    }
  }
  return stats;
}

std::vector<WindowSample> apply_normalizer(const NormStats& stats,
                                           std::span<const WindowSample> samples) {
  std::vector<WindowSample> out(samples.begin(), samples.end());
  for (auto& s : out) stats.apply(s.features);
  return out;
}

void write_normalizer(const std::filesystem::path& path, const NormStats& stats) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "feature,mean,std\n";
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    out << kFeatureNames[c] << ',' << text::format_real(stats.mean[c]) << ','
        << text::format_real(stats.stddev[c]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

NormStats read_normalizer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open normalizer " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || text::trim(line) != "feature,mean,std") {
    throw ParseError("normalizer header must be 'feature,mean,std'", line_no);
  }
  NormStats stats;
  std::array<bool, kFeatureCount> have{};
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto cells = text::split(line);
    if (cells.size() != 3) throw ParseError("expected 3 cells", line_no);
    auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), cells[0]);
    if (it == kFeatureNames.end()) {
      throw ParseError("unknown feature '" + std::string(cells[0]) + "'", line_no);
    }
    const auto c = static_cast<std::size_t>(it - kFeatureNames.begin());
    auto m = text::parse_real(cells[1]);
    auto s = text::parse_real(cells[2]);
    if (!m || !s || !std::isfinite(*m) || !(*s > 0.0) || !std::isfinite(*s)) {
      throw ParseError("bad mean/std for '" + std::string(cells[0]) + "'", line_no);
    }
    stats.mean[c] = *m;
    stats.stddev[c] = *s;
    have[c] = true;
  }
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    if (!have[c]) {
      throw ParseError("normalizer lacks feature '" + std::string(kFeatureNames[c]) + "'",
                       line_no);
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Splitting and export

DatasetSplit split_by_vehicle(std::span<const WindowSample> samples, double ratio,
                              std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split ratio must lie in (0, 1), got " + std::to_string(ratio));
  }
  std::vector<std::int64_t> vehicles;
  for (const auto& s : samples) vehicles.push_back(s.vehicle_id);
  std::sort(vehicles.begin(), vehicles.end());
  vehicles.erase(std::unique(vehicles.begin(), vehicles.end()), vehicles.end());
  if (vehicles.size() < 2) {
    throw SplitError("need at least 2 vehicles to split, found " +
                     std::to_string(vehicles.size()));
  }

  Rng rng(seed);
  rng.shuffle(vehicles);
  const auto v = static_cast<long long>(vehicles.size());
  const auto n_train = std::clamp<long long>(std::llround(ratio * static_cast<double>(v)), 1, v - 1);

  DatasetSplit split;
  split.seed = seed;
  split.ratio = ratio;
  split.train_vehicles.assign(vehicles.begin(), vehicles.begin() + n_train);
  split.test_vehicles.assign(vehicles.begin() + n_train, vehicles.end());
  std::sort(split.train_vehicles.begin(), split.train_vehicles.end());
  std::sort(split.test_vehicles.begin(), split.test_vehicles.end());

  for (const auto& s : samples) {
    const bool in_train = std::binary_search(split.train_vehicles.begin(),
                                             split.train_vehicles.end(), s.vehicle_id);
    (in_train ? split.train : split.test).push_back(s);
  }
  auto order = [](const WindowSample& a, const WindowSample& b) {
    return a.vehicle_id != b.vehicle_id ? a.vehicle_id < b.vehicle_id : a.end_frame < b.end_frame;
  };
  std::stable_sort(split.train.begin(), split.train.end(), order);
  std::stable_sort(split.test.begin(), split.test.end(), order);
  return split;
}

void write_windows(std::ostream& out, std::span<const WindowSample> samples) {
  for (const auto& s : samples) {
    out << class_index(s.label);
    for (double v : s.features.values()) out << ',' << text::format_real(v);
    out << '\n';
  }
}

}  // namespace spikelane
