#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spikelane/dataset.hpp"
#include "spikelane/errors.hpp"
#include "spikelane/synth.hpp"

using namespace spikelane;

TEST_CASE("same seed, same trajectories") {
  const auto a = synthesize_dataset(7, 5, 25.0);
  const auto b = synthesize_dataset(7, 5, 25.0);
  std::ostringstream sa, sb;
  write_trajectories(sa, a);
  write_trajectories(sb, b);
  CHECK(sa.str() == sb.str());
  std::ostringstream sc;
  write_trajectories(sc, synthesize_dataset(8, 5, 25.0));
  CHECK(sc.str() != sa.str());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].vehicle_id == static_cast<std::int64_t>(i + 1));
}

TEST_CASE("lateral velocity and acceleration are derivatives of the lateral position") {
  const SynthConfig cfg;
  for (const auto& t : synthesize_dataset(3, 20, 25.0)) {
    const double rate = t.sample_rate_hz;
    // Undo the lane re-referencing to recover a continuous lateral position.
    std::vector<double> y;
    for (const auto& f : t.frames) {
      y.push_back(f.delta_y + cfg.lane_width_m * static_cast<double>(f.lane_id - t.frames[0].lane_id));
    }
    for (std::size_t n = 1; n < y.size(); ++n) {
      REQUIRE(std::abs(t.frames[n].v_y - (y[n] - y[n - 1]) * rate) <= 1e-6);
    }
    for (std::size_t n = 2; n < y.size(); ++n) {
      REQUIRE(std::abs(t.frames[n].a_y - (t.frames[n].v_y - t.frames[n - 1].v_y) * rate) <= 1e-6);
    }
    // Away from lane switches, on delta_y itself.
    for (std::size_t n = 1; n < y.size(); ++n) {
      if (t.frames[n].lane_id != t.frames[n - 1].lane_id) continue;
      REQUIRE(std::abs(t.frames[n].v_y - (t.frames[n].delta_y - t.frames[n - 1].delta_y) * rate) <= 1e-6);
    }
  }
}

TEST_CASE("lane id switches at the half-crossing") {
  const SynthConfig cfg;
  for (const auto& t : synthesize_dataset(4, 20, 25.0)) {
    for (const auto& f : t.frames) REQUIRE(std::abs(f.delta_y) <= 0.5 * cfg.lane_width_m);
    for (const auto& e : t.events) {
      const auto& before = t.frames[static_cast<std::size_t>(e.onset_frame - 1)];
      const auto& after = t.frames[static_cast<std::size_t>(e.onset_frame)];
      const double sign = e.direction == Direction::left ? 1.0 : -1.0;
      CHECK(sign * before.delta_y > 0.4 * cfg.lane_width_m);
      CHECK(sign * after.delta_y < -0.4 * cfg.lane_width_m);
      CHECK(after.lane_id - before.lane_id == (e.direction == Direction::left ? 1 : -1));
    }
  }
}

TEST_CASE("lane keeping stays near the lane center") {
  SynthConfig cfg;
  cfg.maneuvers = std::vector<Direction>{};
  const auto t = synthesize_trajectory(5, 1, 25.0, cfg);
  CHECK(t.events.empty());
  for (const auto& f : t.frames) {
    CHECK(std::abs(f.delta_y) <= 2 * cfg.wander_amplitude_m);
    CHECK(std::abs(f.v_y) < 0.1);
  }
}

TEST_CASE("a scripted left maneuver yields one left event") {
  SynthConfig cfg;
  cfg.maneuvers = std::vector<Direction>{Direction::left};
  const auto trajs = synthesize_dataset(6, 1, 25.0, cfg);
  REQUIRE(trajs.size() == 1);
  REQUIRE(trajs[0].events.size() == 1);
  CHECK(trajs[0].events[0].direction == Direction::left);
}

TEST_CASE("ingest recovers the generator's events") {
  const auto trajs = synthesize_dataset(9, 15, 25.0);
  std::stringstream csv;
  write_trajectories(csv, trajs);
  const auto back = parse_trajectories(csv, 25.0);
  REQUIRE(back.size() == trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) CHECK(back[i].events == trajs[i].events);
}

TEST_CASE("window classes are roughly 60/20/20 and directions balanced") {
  const auto trajs = synthesize_dataset(7, 100, 25.0);
  std::size_t counts[3] = {};
  const auto windows = make_dataset_windows(trajs);
  for (const auto& w : windows) ++counts[class_index(w.label)];
  const double n = static_cast<double>(windows.size());
  CHECK(std::abs(counts[0] / n - 0.6) <= 0.1);
  CHECK(std::abs(counts[1] / n - 0.2) <= 0.1);
  CHECK(std::abs(counts[2] / n - 0.2) <= 0.1);
  std::size_t left = 0, right = 0;
  for (const auto& t : trajs) {
    for (const auto& e : t.events) (e.direction == Direction::left ? left : right)++;
  }
  CHECK(std::abs(static_cast<double>(left) - static_cast<double>(right)) <= 0.2 * (left + right));
}

TEST_CASE("zero trajectories is a usage error") {
  CHECK_THROWS_AS(synthesize_dataset(1, 0, 25.0), UsageError);
}
