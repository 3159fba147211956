#include "spikelane/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "spikelane/errors.hpp"

namespace spikelane {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'P', 'K', 'L'};

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return bytes(1)[0]; }
  std::uint32_t u32() {
    auto b = bytes(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    auto b = bytes(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw CorruptCheckpointError("checkpoint truncated at byte " + std::to_string(pos_) +
                                   " (size " + std::to_string(in_.size()) + ")");
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

// Far above anything this architecture uses; rejects garbage before allocation.
constexpr std::uint32_t kMaxDim = 1u << 16;

}  // namespace

std::size_t checkpoint_size(const ModelDims& d) noexcept {
  const std::size_t params =
      d.input_dim * d.hidden_dim + d.hidden_dim + d.hidden_dim * d.classes + d.classes;
  return kCheckpointHeaderBytes + 8 * params;
}

std::vector<std::uint8_t> save_model(const Model& model) {
  model.check_shapes();
  const auto& d = model.dims();
  std::vector<std::uint8_t> out;
  out.reserve(checkpoint_size(d));
  Writer w(out);
  w.bytes(kMagic);
  w.u8(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(d.input_steps));
  w.u32(static_cast<std::uint32_t>(d.input_dim));
  w.u32(static_cast<std::uint32_t>(d.hidden_dim));
  w.u32(static_cast<std::uint32_t>(d.classes));
  const auto& lif = model.lif();
  w.u8(static_cast<std::uint8_t>(lif.reset_mode));
  w.f64(lif.beta);
  w.f64(lif.v_threshold);
  w.f64(lif.surrogate_slope);
  for (auto span : model.parameter_spans()) {
    for (double v : span) w.f64(v);
  }
  return out;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const auto bytes = save_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Model load_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw CorruptCheckpointError("bad checkpoint magic (expected \"SPKL\")");
  }
  const std::uint8_t version = r.u8();
  if (version != kCheckpointVersion) {
    throw CorruptCheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  std::uint32_t raw[4];
  for (auto& v : raw) {
    v = r.u32();
    if (v == 0 || v > kMaxDim) {
      throw CorruptCheckpointError("implausible checkpoint dimension " + std::to_string(v));
    }
  }
  const ModelDims dims{raw[0], raw[1], raw[2], raw[3]};

  const std::uint8_t mode = r.u8();
  if (mode > 1) throw CorruptCheckpointError("unknown reset mode " + std::to_string(mode));
  LifConfig lif;
  lif.reset_mode = static_cast<ResetMode>(mode);
  lif.beta = r.f64();
  lif.v_threshold = r.f64();
  lif.surrogate_slope = r.f64();

  if (r.remaining() != checkpoint_size(dims) - kCheckpointHeaderBytes) {
    throw CorruptCheckpointError("checkpoint parameter block is " +
                                 std::to_string(r.remaining()) + " bytes, expected " +
                                 std::to_string(checkpoint_size(dims) - kCheckpointHeaderBytes));
  }

  Model model = [&] {
    try {
      return Model(dims, lif);
    } catch (const ConfigError& e) {
      throw CorruptCheckpointError(std::string("invalid checkpoint header: ") + e.what());
    }
  }();
  for (auto span : model.parameter_spans()) {
    for (double& v : span) {
      v = r.f64();
      if (!std::isfinite(v)) throw CorruptCheckpointError("non-finite parameter in checkpoint");
    }
  }
  return model;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_model(bytes);
}

}  // namespace spikelane
