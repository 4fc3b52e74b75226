#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hli/baseline.hpp"
#include "hli/binn.hpp"
#include "hli/features.hpp"
#include "hli/hierarchy.hpp"
#include "hli/optim.hpp"

namespace hli {

// Generic tensor container, little-endian:
//   "HLVC" | version u16 |
//   meta count u32 | per entry: key length u16, key, value length u32, value |
//   tensor count u32 | per tensor: name length u16, name, dtype u8 (0 f32, 1 f64),
//                      rank u8, dims u64..., payload |
//   CRC32 u32 over everything after the version field.
inline constexpr std::uint16_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

struct StoredTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  DType dtype = DType::kF64;
  std::vector<double> values;  // f32 tensors are widened on load

  friend bool operator==(const StoredTensor&, const StoredTensor&) = default;
};

struct Container {
  std::map<std::string, std::string> meta;
  std::vector<StoredTensor> tensors;

  const StoredTensor* find(const std::string& name) const;
  const StoredTensor& at(const std::string& name) const;  // throws DataError

  friend bool operator==(const Container&, const Container&) = default;
};

std::vector<std::uint8_t> encode_container(const Container& c);
// Throws FormatError on bad magic, version, truncation or checksum.
Container decode_container(std::span<const std::uint8_t> bytes);
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

// Everything needed to evaluate a model or resume its training bitwise.
struct TrainingCheckpoint {
  std::string model = "none";  // "binn", "logreg" or "none" (normalizer only)
  LabelHierarchy hierarchy;
  std::optional<NormalizerStats> normalizer;
  std::optional<BinnParams> binn;
  std::optional<LogRegParams> logreg;
  std::optional<AdamState> optimizer;
  std::map<std::string, std::string> config;
  std::uint64_t step = 0;
};

void save_checkpoint(const std::filesystem::path& path, const TrainingCheckpoint& ckpt);
// Validates every tensor shape against the embedded hierarchy.
TrainingCheckpoint load_checkpoint(const std::filesystem::path& path);
// As above, and additionally requires the checkpoint's layer sizes to match
// `expected`. Throws DataError on a mismatch.
TrainingCheckpoint load_checkpoint(const std::filesystem::path& path, const LabelHierarchy& expected);

Container to_container(const TrainingCheckpoint& ckpt);
TrainingCheckpoint from_container(const Container& c);

// Exact text encoding of doubles (hex float).
std::string encode_double(double v);
double decode_double(const std::string& s);

}  // namespace hli
