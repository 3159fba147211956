#include "spikelane/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spikelane/errors.hpp"
#include "spikelane/rng.hpp"

namespace spikelane {

namespace {

struct Maneuver {
  double midpoint_s;
  Direction direction;
};

constexpr std::int64_t kBaseLane = 10;
constexpr double kFirstOnsetMin = 5.0;
constexpr double kFirstOnsetMax = 8.0;
constexpr double kSpacingMin = 6.0;
constexpr double kSpacingMax = 8.5;
constexpr double kTailS = 2.5;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Trajectory synthesize_trajectory(std::uint64_t seed, std::int64_t vehicle_id, double rate_hz,
                                 const SynthConfig& cfg) {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw ConfigError("rate must be > 0");
  if (!(cfg.duration_s > 0.0) || !(cfg.lane_width_m > 0.0) || !(cfg.maneuver_rise_s > 0.0)) {
    throw ConfigError("synthetic duration, lane width and rise time must be > 0");
  }
  Rng rng(seed);

  std::vector<Maneuver> plan;
  double duration = cfg.duration_s;
  double t = rng.uniform(kFirstOnsetMin, kFirstOnsetMax);
  if (cfg.maneuvers) {
    for (Direction d : *cfg.maneuvers) {
      plan.push_back({t, d});
      t += rng.uniform(kSpacingMin, kSpacingMax);
    }
    if (!plan.empty()) duration = std::max(duration, plan.back().midpoint_s + 4.0);
  } else if (rng.uniform() >= cfg.keep_only_fraction) {
    while (t <= duration - kTailS) {
      plan.push_back({t, rng.uniform() < 0.5 ? Direction::left : Direction::right});
      t += rng.uniform(kSpacingMin, kSpacingMax);
    }
  }

  const double rise_rate = 2.0 * std::log(9.0) / cfg.maneuver_rise_s;
  const double two_pi = 2.0 * std::numbers::pi;
  struct Wave {
    double amplitude, omega, phase;
  };
  Wave wander[2];
  for (auto& w : wander) {
    w = {rng.uniform(0.0, cfg.wander_amplitude_m), two_pi / rng.uniform(6.0, 15.0),
         rng.uniform(0.0, two_pi)};
  }
  const double v0 = rng.uniform(22.0, 36.0);
  const Wave accel{rng.uniform(0.0, 0.5), two_pi / rng.uniform(8.0, 20.0),
                   rng.uniform(0.0, two_pi)};

  const auto n_frames = static_cast<std::size_t>(std::llround(duration * rate_hz));
  const double w = cfg.lane_width_m;
  std::vector<double> lateral(n_frames);
  for (std::size_t n = 0; n < n_frames; ++n) {
    const double tn = static_cast<double>(n) / rate_hz;
    double y = 0.0;
    for (const auto& wv : wander) y += wv.amplitude * std::sin(wv.omega * tn + wv.phase);
    for (const auto& m : plan) {
      const double sign = m.direction == Direction::left ? 1.0 : -1.0;
      y += sign * w * logistic(rise_rate * (tn - m.midpoint_s));
    }
    lateral[n] = y;
  }

  Trajectory traj;
  traj.vehicle_id = vehicle_id;
  traj.sample_rate_hz = rate_hz;
  traj.frames.resize(n_frames);
  for (std::size_t n = 0; n < n_frames; ++n) {
    const double tn = static_cast<double>(n) / rate_hz;
    Frame& f = traj.frames[n];
    f.t_index = static_cast<std::int64_t>(n);
    const auto lane_offset = static_cast<std::int64_t>(std::floor((lateral[n] + 0.5 * w) / w));
    f.lane_id = kBaseLane + lane_offset;
    f.delta_y = lateral[n] - w * static_cast<double>(lane_offset);
    if (n_frames > 1) {
      const std::size_t k = n == 0 ? 1 : n;
      f.v_y = (lateral[k] - lateral[k - 1]) * rate_hz;
    }
    f.a_x = accel.amplitude * std::sin(accel.omega * tn + accel.phase) + rng.normal(0.0, 0.05);
    f.v_x = v0 + accel.amplitude / accel.omega *
                     (std::cos(accel.phase) - std::cos(accel.omega * tn + accel.phase));
  }
  for (std::size_t n = 0; n < n_frames; ++n) {
    if (n_frames > 2) {
      const std::size_t k = n < 2 ? 2 : n;
      traj.frames[n].a_y = (traj.frames[k].v_y - traj.frames[k - 1].v_y) * rate_hz;
    }
  }
  for (std::size_t n = 1; n < n_frames; ++n) {
    const auto& prev = traj.frames[n - 1];
    const auto& cur = traj.frames[n];
    if (cur.lane_id != prev.lane_id) {
      traj.events.push_back(
          {cur.t_index, cur.lane_id > prev.lane_id ? Direction::left : Direction::right});
    }
  }
  return traj;
}

std::vector<Trajectory> synthesize_dataset(std::uint64_t seed, std::size_t n_trajectories,
                                           double rate_hz, const SynthConfig& cfg) {
  if (n_trajectories == 0) throw UsageError("synthesize_dataset needs n >= 1");
  Rng seeds(seed);
  std::vector<Trajectory> out;
  out.reserve(n_trajectories);
  for (std::size_t i = 0; i < n_trajectories; ++i) {
    out.push_back(synthesize_trajectory(seeds.next_u64(), static_cast<std::int64_t>(i + 1),
                                        rate_hz, cfg));
  }
  return out;
}

}  // namespace spikelane
