#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spikelane/dataset.hpp"

namespace spikelane {

/// Knobs for the synthetic highway generator. Lateral motion is a smooth
/// low-amplitude wander plus one logistic lane-width step per maneuver;
/// v_y and a_y are backward differences of the lateral position, so they
/// are exactly consistent with delta_y away from the lane re-referencing
/// jump.
struct SynthConfig {
  double duration_s = 24.0;
  double lane_width_m = 3.75;
  /// 10%-90% rise time of the logistic lateral transition.
  double maneuver_rise_s = 4.0;
  /// Fraction of vehicles that never change lanes.
  double keep_only_fraction = 0.1;
  /// Peak amplitude of each of the two wander sinusoids.
  double wander_amplitude_m = 0.03;
  /// When set, every trajectory performs exactly these maneuvers in order;
  /// the duration grows if they do not fit.
  std::optional<std::vector<Direction>> maneuvers;
};

std::vector<Trajectory> synthesize_dataset(std::uint64_t seed, std::size_t n_trajectories,
                                           double rate_hz, const SynthConfig& cfg = {});

Trajectory synthesize_trajectory(std::uint64_t seed, std::int64_t vehicle_id, double rate_hz,
                                 const SynthConfig& cfg = {});

}  // namespace spikelane
