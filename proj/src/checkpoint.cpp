#include <zlib.h>

#include <bit>
#include <cstring>
#include <limits>

#include "uicq/error.hpp"
#include "uicq/net.hpp"

namespace uicq {

namespace {

constexpr char kMagic[8] = {'U', 'I', 'C', 'Q', 'C', 'K', 'P', 'T'};
constexpr std::size_t kMaxTargetLength = 256;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; checkpoints are far below 4 GiB but feed in chunks anyway.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, std::numeric_limits<uInt>::max());
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

int checked_int(std::uint32_t v, const char* what) {
  if (v > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("implausible ") + what);
  }
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params) {
  params.arch.validate();
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.arch.input_height));
  w.u32(static_cast<std::uint32_t>(params.arch.input_width));
  w.u32(static_cast<std::uint32_t>(params.arch.layers.size()));
  w.u32(static_cast<std::uint32_t>(params.arch.shallow_count));
  for (const auto& l : params.arch.layers) {
    w.u32(static_cast<std::uint32_t>(l.in_channels));
    w.u32(static_cast<std::uint32_t>(l.out_channels));
    w.u32(static_cast<std::uint32_t>(l.kernel));
    w.u32(static_cast<std::uint32_t>(l.stride));
    w.u32(static_cast<std::uint32_t>(l.padding));
    w.u32(l.pool ? 1u : 0u);
  }
  w.u64(params.seed);
  w.u32(static_cast<std::uint32_t>(params.target.size()));
  w.bytes(params.target.data(), params.target.size());
  w.u64(params.parameter_count());
  for (const auto& block : params.blocks())
    for (double v : block) w.f64(v);
  const std::uint32_t crc = crc_of(w.buffer());
  w.u32(crc);
  return std::move(w.buffer());
}

ModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(sizeof kMagic);
  if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::CorruptCheckpoint, "bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) +
                                                ", expected " + std::to_string(kCheckpointVersion));
  }
  if (bytes.size() < sizeof kMagic + 8) {
    throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
  }
  const auto payload = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (crc_of(payload) != tail.u32()) {
    throw Error(ErrorCode::CorruptCheckpoint, "checksum mismatch");
  }

  Architecture arch;
  arch.input_height = checked_int(r.u32(), "input height");
  arch.input_width = checked_int(r.u32(), "input width");
  const std::uint32_t layer_count = r.u32();
  arch.shallow_count = checked_int(r.u32(), "shallow count");
  if (layer_count == 0 || layer_count > 64) {
    throw Error(ErrorCode::CorruptCheckpoint, "implausible layer count");
  }
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    LayerSpec l;
    l.in_channels = checked_int(r.u32(), "channel count");
    l.out_channels = checked_int(r.u32(), "channel count");
    l.kernel = checked_int(r.u32(), "kernel");
    l.stride = checked_int(r.u32(), "stride");
    l.padding = checked_int(r.u32(), "padding");
    l.pool = r.u32() != 0;
    arch.layers.push_back(l);
  }
  const std::uint64_t seed = r.u64();
  const std::uint32_t target_len = r.u32();
  if (target_len > kMaxTargetLength) {
    throw Error(ErrorCode::CorruptCheckpoint, "implausible target name length");
  }
  const auto target = r.bytes(target_len);

  ModelParams params;
  try {
    params = ModelParams::zeros(arch);
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("architecture: ") + e.what());
  }
  params.seed = seed;
  params.target.assign(target.begin(), target.end());

  const std::uint64_t declared = r.u64();
  if (declared != params.parameter_count()) {
    throw Error(ErrorCode::CorruptCheckpoint, "declared weight count " + std::to_string(declared) +
                                                  " does not match architecture (" +
                                                  std::to_string(params.parameter_count()) + ")");
  }
  if (r.remaining() != declared * 8 + 4) {
    throw Error(ErrorCode::CorruptCheckpoint, "weight payload size does not match declared count");
  }
  for (auto block : params.blocks())
    for (double& v : block) v = r.f64();
  return params;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_checkpoint(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file_bytes(path));
}

}  // namespace uicq
