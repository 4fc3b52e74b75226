#pragma once

// End-to-end drivers behind the command-line subcommands.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hli/checkpoint.hpp"
#include "hli/data.hpp"
#include "hli/metrics.hpp"

namespace hli {

enum class ModelKind { kBinn, kLogReg };
enum class FeatureSet { kRgb, kRgbAudio };

using KeyValues = std::map<std::string, std::string>;

// `key = value` lines; '#' starts a comment line. Throws UsageError on a
// malformed line or a repeated key.
KeyValues parse_key_values(std::istream& in, const std::string& source = "<config>");
KeyValues load_key_values(const std::filesystem::path& path);

struct RunConfig {
  ModelKind model = ModelKind::kBinn;
  FeatureSet features = FeatureSet::kRgb;
  NormKind norm = NormKind::kZNorm;
  bool l2 = true;
  // Unset values resolve to the per-model defaults below.
  std::optional<double> lr;
  std::optional<std::uint64_t> iters;
  std::optional<std::uint64_t> decay_every;
  std::optional<double> decay_factor;
  std::uint64_t batch_size = 1024;
  double weight_decay = 1e-8;
  double lambda = 0.0;
  double norm_epsilon = kDefaultNormEpsilon;
  std::uint64_t seed = 1;
  std::uint64_t log_every = 100;
  std::size_t gap_k = kDefaultGapTopK;
  std::size_t top_k = 5;
  std::filesystem::path vocab, train, val, checkpoint, out, normalizer, resume;
  Exec exec = Exec::kParallel;

  // BINN: lr 0.001, 90k iterations, x0.1 every 40k. Logistic regression:
  // lr 0.01, 35k iterations, constant rate.
  double resolved_lr() const;
  std::uint64_t resolved_iters() const;
  std::uint64_t resolved_decay_every() const;
  double resolved_decay_factor() const;

  // Throws UsageError for an unknown key or unparsable value.
  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& kv);
  // Numeric settings only (paths excluded); stored in checkpoints.
  KeyValues to_key_values() const;
  // Throws UsageError when a numeric field is out of range.
  void validate() const;
};

SynthConfig synth_config_from(const KeyValues& kv);

// Pooled (and optionally audio-extended) features as rows. Throws DataError
// when a record lacks audio for FeatureSet::kRgbAudio or dimensions disagree.
Matrix raw_features(std::span<const VideoRecord> records, FeatureSet features);
// Throws DataError when record labels do not fit the hierarchy.
void check_records(std::span<const VideoRecord> records, const LabelHierarchy& h);
NormalizerStats fit_normalizer(const Matrix& features, NormKind kind, bool l2, double epsilon, Exec exec);
Matrix normalize_rows(const NormalizerStats& stats, const Matrix& features);

struct LossPoint {
  std::uint64_t step;
  double loss;  // mean per video over the batch
};

struct TrainResult {
  TrainingCheckpoint checkpoint;
  std::vector<LossPoint> curve;
  std::vector<std::string> log;
};

// Fits (or reuses) the normalizer and runs Adam until `resolved_iters()`.
// With `resume`, training continues from its step with its optimizer state.
TrainResult train_model(const RunConfig& cfg, const LabelHierarchy& h, std::span<const VideoRecord> train,
                        const TrainingCheckpoint* resume = nullptr, std::ostream* progress = nullptr);

// Per-layer probabilities (videos x labels) for every layer the model scores.
// Logistic regression scores the entity layer and induces the layer above
// from it by taking the max over child entities.
std::vector<Matrix> score_records(const TrainingCheckpoint& ckpt, std::span<const VideoRecord> records,
                                  Exec exec = Exec::kParallel);

std::vector<EvalReport> evaluate_checkpoint(const TrainingCheckpoint& ckpt, std::span<const VideoRecord> records,
                                            std::size_t gap_k = kDefaultGapTopK, Exec exec = Exec::kParallel);

std::string report_text(const std::vector<EvalReport>& reports);
std::string report_json(const std::vector<EvalReport>& reports);
// Reads back the headline metrics of report_text output.
KeyValues parse_report_text(const std::string& text);

struct Prediction {
  std::string video;
  std::string layer;
  std::size_t rank;
  std::string label;
  double probability;
};
std::vector<Prediction> predict_top_k(const TrainingCheckpoint& ckpt, std::span<const VideoRecord> records,
                                      std::size_t top_k, Exec exec = Exec::kParallel);

// Subcommands. Each returns normally on success and throws UsageError,
// DataError or NumericError otherwise.
void cmd_synth(const SynthConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_fit_norm(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::ostream& log);
std::vector<EvalReport> cmd_evaluate(const RunConfig& cfg, std::ostream& log);
void cmd_predict(const RunConfig& cfg, std::ostream& log);

}  // namespace hli
