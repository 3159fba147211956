#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "spikelane/matrix.hpp"

namespace spikelane {

inline constexpr std::size_t kFeatureCount = 5;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "delta_y", "v_x", "a_x", "v_y", "a_y"};

/// Class ids used throughout: keep = 0, left = 1, right = 2.
enum class Intention : std::uint8_t { keep = 0, left = 1, right = 2 };
inline constexpr std::size_t kIntentionCount = 3;

enum class Direction : std::uint8_t { left = 1, right = 2 };

constexpr Intention to_intention(Direction d) noexcept { return static_cast<Intention>(d); }
constexpr std::size_t class_index(Intention i) noexcept { return static_cast<std::size_t>(i); }
std::string_view intention_name(Intention i) noexcept;

/// One sampled vehicle state. delta_y is the lateral offset from the current
/// lane center, positive toward the left.
struct Frame {
  std::int64_t t_index = 0;
  double delta_y = 0.0;
  double v_x = 0.0;
  double a_x = 0.0;
  double v_y = 0.0;
  double a_y = 0.0;
  std::int64_t lane_id = 0;

  std::array<double, kFeatureCount> features() const noexcept {
    return {delta_y, v_x, a_x, v_y, a_y};
  }
};

/// onset_frame is a t_index value: the first frame in the new lane.
struct LaneChangeEvent {
  std::int64_t onset_frame = 0;
  Direction direction = Direction::left;

  friend bool operator==(const LaneChangeEvent&, const LaneChangeEvent&) = default;
};

struct Trajectory {
  std::int64_t vehicle_id = 0;
  double sample_rate_hz = 25.0;
  std::vector<Frame> frames;
  std::vector<LaneChangeEvent> events;

  /// Throws UsageError if frames are unordered or non-finite, or an event
  /// lies outside the frame range or out of order.
  void validate() const;
};

/// Reads `vehicle_id,frame,delta_y,v_x,a_x,v_y,a_y,lane_id` CSV (header
/// required, columns matched by name). Output is ordered by vehicle id with
/// frames ascending. A lane_id change at frame f yields an event with
/// onset f; its direction is the sign of the delta_y drift over the second
/// before the change (positive drift is left), falling back to the sign of
/// the re-referencing jump when the drift is zero.
std::vector<Trajectory> parse_trajectories(std::istream& in, double sample_rate_hz);
std::vector<Trajectory> parse_trajectories(const std::filesystem::path& path,
                                           double sample_rate_hz);

/// Writes the same schema parse_trajectories reads, with round-trip precision.
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories);
void write_trajectories(const std::filesystem::path& path,
                        std::span<const Trajectory> trajectories);

/// Frames within 3 s before an event onset carry its direction; later
/// events overwrite earlier ones where horizons overlap.
std::vector<Intention> label_frames(const Trajectory& traj);

/// Frames of intention horizon at the trajectory's sample rate.
std::int64_t intention_horizon_frames(double sample_rate_hz) noexcept;

struct WindowConfig {
  double window_rate_hz = 4.0;
  std::size_t stride = 1;  // in downsampled steps
  std::size_t steps = 12;

  /// round(sample_rate / window_rate); throws ConfigError if < 1.
  std::size_t downsample_factor(double sample_rate_hz) const;
};

struct WindowSample {
  Matrix features;  // [steps x 5]
  Intention label = Intention::keep;
  std::int64_t vehicle_id = 0;
  std::int64_t end_frame = 0;
};

/// Sliding windows over the downsampled stream, labeled at their last frame.
std::vector<WindowSample> make_windows(const Trajectory& traj, std::span<const Intention> labels,
                                       const WindowConfig& cfg = {});

/// label_frames + make_windows over every trajectory, ordered by
/// (vehicle_id, end_frame).
std::vector<WindowSample> make_dataset_windows(std::span<const Trajectory> trajectories,
                                               const WindowConfig& cfg = {});

/// Per-feature z-score parameters (population standard deviation).
struct NormStats {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> stddev{};

  void apply(Matrix& features) const;
};

NormStats fit_normalizer(std::span<const WindowSample> train);
std::vector<WindowSample> apply_normalizer(const NormStats& stats,
                                           std::span<const WindowSample> samples);

void write_normalizer(const std::filesystem::path& path, const NormStats& stats);
NormStats read_normalizer(const std::filesystem::path& path);

struct DatasetSplit {
  std::vector<WindowSample> train;
  std::vector<WindowSample> test;
  std::vector<std::int64_t> train_vehicles;  // ascending
  std::vector<std::int64_t> test_vehicles;   // ascending
  std::uint64_t seed = 0;
  double ratio = 0.8;
};

/// Shuffles the distinct vehicles with `seed` and assigns round(ratio * V)
/// of them (clamped to [1, V-1]) to train.
DatasetSplit split_by_vehicle(std::span<const WindowSample> samples, double ratio,
                              std::uint64_t seed);

/// Debug export: `label,f0_0,...,f11_4` per line, row-major.
void write_windows(std::ostream& out, std::span<const WindowSample> samples);

}  // namespace spikelane
