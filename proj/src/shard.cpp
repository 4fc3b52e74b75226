#include <algorithm>
#include <limits>

#include "binary_io.hpp"
#include "hli/data.hpp"
#include "hli/error.hpp"

namespace hli {
namespace {

constexpr char kMagic[4] = {'H', 'L', 'V', 'S'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 8;
constexpr std::uint8_t kAudioFlag = 2;

using Kind = FormatError::Kind;

void encode_record(io::ByteWriter& w, const VideoRecord& r) {
  if (r.id.size() > std::numeric_limits<std::uint16_t>::max()) throw DataError("record id too long: " + r.id);
  if (r.labels.size() > std::numeric_limits<std::uint8_t>::max()) throw DataError("too many layers in " + r.id);
  const std::size_t expected = r.kind == FeatureKind::kFrames ? std::size_t{r.frame_count} * r.dim : r.dim;
  if (r.values.size() != expected) throw DataError("record " + r.id + ": payload size does not match dims");

  w.put<std::uint16_t>(static_cast<std::uint16_t>(r.id.size()));
  w.put_bytes(r.id);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(r.labels.size()));
  for (const auto& layer : r.labels) {
    if (layer.size() > std::numeric_limits<std::uint16_t>::max()) throw DataError("too many labels in " + r.id);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(layer.size()));
    w.put_array<LabelIndex>(layer);
  }
  const auto kind = static_cast<std::uint8_t>(static_cast<std::uint8_t>(r.kind) | (r.has_audio() ? kAudioFlag : 0));
  w.put<std::uint8_t>(kind);
  w.put<std::uint32_t>(r.dim);
  if (r.kind == FeatureKind::kFrames) w.put<std::uint32_t>(r.frame_count);
  w.put_array<float>(r.values);
  if (r.has_audio()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.audio.size()));
    w.put_array<float>(r.audio);
  }
}

VideoRecord decode_record(io::ByteReader& in) {
  VideoRecord r;
  r.id = in.get_string(in.get<std::uint16_t>());
  r.labels.resize(in.get<std::uint8_t>());
  for (auto& layer : r.labels) {
    layer.resize(in.get<std::uint16_t>());
    in.get_array<LabelIndex>(layer);
  }
  const auto kind = in.get<std::uint8_t>();
  if (kind > 3) throw FormatError(Kind::kMalformed, "record " + r.id + ": unknown feature kind " + std::to_string(kind));
  r.kind = static_cast<FeatureKind>(kind & 1);
  r.dim = in.get<std::uint32_t>();
  std::size_t count = r.dim;
  if (r.kind == FeatureKind::kFrames) {
    r.frame_count = in.get<std::uint32_t>();
    count *= r.frame_count;
  }
  if (count * sizeof(float) > in.remaining())
    throw FormatError(Kind::kTruncated, "record " + r.id + ": payload extends past end of data");
  r.values.resize(count);
  in.get_array<float>(r.values);
  if (kind & kAudioFlag) {
    const auto audio_dim = in.get<std::uint32_t>();
    if (std::size_t{audio_dim} * sizeof(float) > in.remaining())
      throw FormatError(Kind::kTruncated, "record " + r.id + ": audio extends past end of data");
    r.audio.resize(audio_dim);
    in.get_array<float>(r.audio);
  }
  return r;
}

}  // namespace

FrameFeatures VideoRecord::frames() const {
  if (kind != FeatureKind::kFrames) throw DataError("record " + id + " has no frame features");
  FrameFeatures f{Matrix(frame_count, dim)};
  for (std::size_t i = 0; i < values.size(); ++i) f.frames.values()[i] = values[i];
  return f;
}

VideoFeature VideoRecord::rgb_feature() const {
  if (kind == FeatureKind::kFrames) return mean_pool(frames());
  return VideoFeature(values.begin(), values.end());
}

std::vector<std::uint8_t> encode_shard(std::span<const VideoRecord> records) {
  io::ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint16_t>(kShardVersion);
  w.put<std::uint64_t>(records.size());
  for (const auto& r : records) encode_record(w, r);
  auto& bytes = w.bytes();
  const std::uint32_t crc = io::crc32(std::span(bytes).subspan(kHeaderBytes));
  w.put<std::uint32_t>(crc);
  return std::move(w.bytes());
}

std::vector<VideoRecord> decode_shard(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    if (bytes.size() < 4) throw FormatError(Kind::kTruncated, "shard shorter than its magic");
    throw FormatError(Kind::kBadMagic, "not a shard file (bad magic)");
  }
  in.get_string(4);
  const auto version = in.get<std::uint16_t>();
  if (version != kShardVersion)
    throw FormatError(Kind::kBadVersion, "unsupported shard version " + std::to_string(version));
  const auto count = in.get<std::uint64_t>();

  std::vector<VideoRecord> records;
  records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, bytes.size())));
  for (std::uint64_t i = 0; i < count; ++i) records.push_back(decode_record(in));
  if (in.remaining() < 4) throw FormatError(Kind::kTruncated, "missing trailing checksum");
  if (in.remaining() != 4)
    throw FormatError(Kind::kMalformed, std::to_string(in.remaining() - 4) + " unexpected trailing bytes");

  const std::size_t payload_end = in.position();
  const auto stored = in.get<std::uint32_t>();
  const auto actual = io::crc32(bytes.subspan(kHeaderBytes, payload_end - kHeaderBytes));
  if (stored != actual) throw FormatError(Kind::kChecksum, "checksum mismatch");
  return records;
}

void write_shard(const std::filesystem::path& path, std::span<const VideoRecord> records) {
  io::write_file(path, encode_shard(records));
}

std::vector<VideoRecord> read_shard(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return decode_shard(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace hli
