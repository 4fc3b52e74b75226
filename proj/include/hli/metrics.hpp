#pragma once

// Ranking metrics over one concept layer.
//
// Tie rules are fixed so every metric is reproducible bit for bit: within a
// video, equal scores rank the lower label index first; within a class, equal
// scores rank the lower video index first; in the pooled gAP list, ties are
// broken by video index and then label index.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hli/hierarchy.hpp"
#include "hli/tensor.hpp"

namespace hli {

inline constexpr std::size_t kDefaultGapTopK = 20;

struct PredictionSet {
  Matrix scores;               // videos x classes
  std::vector<LabelSet> truth;  // positives per video

  std::size_t video_count() const noexcept { return scores.rows(); }
  std::size_t class_count() const noexcept { return scores.cols(); }
};

struct ApResult {
  double mean = 0.0;
  Vector per_class;                // NaN for classes without positives
  std::size_t classes_scored = 0;  // classes that entered the mean
};

// Throws DataError on an empty set.
double hit_at_1(const PredictionSet& p);

// Throws DataError if any video has no positives.
double perr(const PredictionSet& p);

// Throws DataError if no class has a positive.
ApResult mean_average_precision(const PredictionSet& p, Exec exec = Exec::kParallel);

// Throws DataError for k == 0 or an empty pool.
double global_average_precision(const PredictionSet& p, std::size_t k = kDefaultGapTopK);

// Indices of the top `k` labels of one score row, best first.
std::vector<LabelIndex> top_k(std::span<const double> scores, std::size_t k);

struct EvalReport {
  std::string layer;
  double map = 0.0;
  double perr = 0.0;
  double hit_at_1 = 0.0;
  double gap = 0.0;
  Vector per_class_ap;
};

EvalReport evaluate(const PredictionSet& p, std::string layer, std::size_t gap_k = kDefaultGapTopK,
                    Exec exec = Exec::kParallel);

}  // namespace hli
