#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hli/binn.hpp"
#include "hli/features.hpp"
#include "hli/hierarchy.hpp"

namespace hli {

enum class FeatureKind : std::uint8_t { kPooled = 0, kFrames = 1 };

// One video as stored in a shard. Feature payloads stay in 32-bit floats so a
// shard round-trip is bitwise exact.
struct VideoRecord {
  std::string id;
  FeatureKind kind = FeatureKind::kPooled;
  std::uint32_t dim = 0;
  std::uint32_t frame_count = 0;  // kFrames only
  std::vector<float> values;      // dim, or frame_count * dim (frame-major)
  std::vector<float> audio;       // empty when absent
  LayerLabels labels;             // one positive set per concept layer

  bool has_audio() const noexcept { return !audio.empty(); }
  FrameFeatures frames() const;
  // Pooled RGB feature; mean-pools frame records.
  VideoFeature rgb_feature() const;

  friend bool operator==(const VideoRecord&, const VideoRecord&) = default;
};

// Shard file layout, little-endian throughout:
//   "HLVS" | version u16 | record count u64 |
//   per record:
//     id length u16 | id bytes (UTF-8) | layer count u8 |
//     per layer: label count u16 | label indices u32... |
//     feature kind u8 | dims u32 | [frame count u32 if frames] | f32 payload |
//     [audio dims u32 | f32 audio payload, kinds 2 and 3 only] |
//   CRC32 u32 over all record bytes.
// Feature kind on disk: 0 pooled, 1 frames, 2 pooled + audio, 3 frames + audio.
inline constexpr std::uint16_t kShardVersion = 1;

void write_shard(const std::filesystem::path& path, std::span<const VideoRecord> records);
// Throws FormatError (kBadMagic, kBadVersion, kTruncated, kChecksum, ...).
std::vector<VideoRecord> read_shard(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_shard(std::span<const VideoRecord> records);
std::vector<VideoRecord> decode_shard(std::span<const std::uint8_t> bytes);

// Deterministic mini-batch order. Epoch e visits a fresh permutation seeded by
// (seed, e); the final short batch of an epoch is emitted as is.
class BatchSchedule {
 public:
  // Throws DataError on an empty shard or batch size 0.
  BatchSchedule(std::size_t record_count, std::size_t batch_size, std::uint64_t seed);

  std::size_t record_count() const noexcept { return records_; }
  std::size_t batch_size() const noexcept { return batch_; }
  std::size_t batches_per_epoch() const noexcept { return (records_ + batch_ - 1) / batch_; }

  std::vector<std::size_t> epoch_order(std::uint64_t epoch) const;
  std::vector<std::vector<std::size_t>> epoch_batches(std::uint64_t epoch) const;
  // Batch for global training step `step`. Caches the current epoch order, so
  // one schedule must not be shared across threads.
  std::vector<std::size_t> batch_at(std::uint64_t step);

 private:
  std::size_t records_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::uint64_t cached_epoch_ = ~std::uint64_t{0};
  std::vector<std::size_t> cached_order_;
};

std::vector<std::vector<std::size_t>> batch_iterator(std::size_t record_count, std::size_t batch_size,
                                                     std::uint64_t seed, std::uint64_t epoch);

struct SynthConfig {
  std::size_t verticals = 25;
  std::size_t entities = 200;
  std::size_t max_parents = 3;  // each entity draws 1..max_parents verticals
  std::size_t dim = 64;
  std::size_t audio_dim = 0;
  double mean_labels = 1.8;  // mean entities per video after clamping to >= 1
  double noise = 0.1;        // absolute Gaussian noise stddev
  double prototype_scale = 1.0;
  std::size_t frames_per_video = 0;  // 0 stores pooled features
  std::size_t train_videos = 20000;
  std::size_t val_videos = 2000;
  std::uint64_t seed = 1;

  // Throws UsageError on an invalid combination.
  void validate() const;
};

struct SynthDataset {
  LabelHierarchy hierarchy;
  std::vector<VideoRecord> train;
  std::vector<VideoRecord> val;
  Matrix prototypes;        // entities x dim
  Matrix audio_prototypes;  // entities x audio_dim
};

// Poisson rate whose count, clamped below at 1, has the requested mean.
double clamped_poisson_rate(double mean);

SynthDataset synth_generate(const SynthConfig& config);

}  // namespace hli
