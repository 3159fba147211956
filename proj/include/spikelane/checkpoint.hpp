#pragma once

// Binary checkpoint layout (all integers and reals little-endian):
//
//   offset  size  field
//   0       4     magic "SPKL"
//   4       1     format version (1)
//   5       16    input_steps, input_dim, hidden_dim, classes (uint32 each)
//   21      1     reset mode (0 = to_zero, 1 = subtract)
//   22      24    beta, v_threshold, surrogate_slope (float64 each)
//   46      8*P   trainable parameters (float64) in Model::parameter_spans() order
//
// Nothing may follow the parameter block.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spikelane/snn.hpp"

namespace spikelane {

inline constexpr std::uint8_t kCheckpointVersion = 1;
inline constexpr std::size_t kCheckpointHeaderBytes = 46;

std::vector<std::uint8_t> save_model(const Model& model);
void save_model(const Model& model, const std::filesystem::path& path);

/// Throws CorruptCheckpointError on bad magic, version, dimensions, LIF
/// values, non-finite parameters, truncation or trailing bytes.
Model load_model(std::span<const std::uint8_t> bytes);
Model load_model(const std::filesystem::path& path);

std::size_t checkpoint_size(const ModelDims& dims) noexcept;

}  // namespace spikelane
