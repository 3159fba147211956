#pragma once

#include <utility>
#include <vector>

#include "spikelane/dataset.hpp"
#include "spikelane/snn.hpp"
#include "spikelane/synth.hpp"
#include "spikelane/training.hpp"

namespace fixture {

struct TrainedModel {
  spikelane::Model model;
  spikelane::NormStats norm;
  spikelane::DatasetSplit split;
};

// Seed-7 synthetic set of 30 vehicles, default training settings capped at
// 500 epochs. Built once per process.
inline const TrainedModel& trained_model() {
  static const TrainedModel fx = [] {
    using namespace spikelane;
    const auto windows = make_dataset_windows(synthesize_dataset(7, 30, 25.0));
    TrainedModel t{Model{}, {}, split_by_vehicle(windows, 0.8, 7)};
    t.norm = fit_normalizer(t.split.train);
    TrainConfig cfg;
    cfg.max_epochs = 500;
    cfg.seed = 9;
    t.model = train(Model::initialized(8), apply_normalizer(t.norm, t.split.train), cfg).model;
    return t;
  }();
  return fx;
}

inline spikelane::Trajectory scripted_trajectory(std::uint64_t seed,
                                                 std::vector<spikelane::Direction> maneuvers) {
  spikelane::SynthConfig cfg;
  cfg.maneuvers = std::move(maneuvers);
  return spikelane::synthesize_trajectory(seed, 1, 25.0, cfg);
}

}  // namespace fixture
