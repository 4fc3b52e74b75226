#include "hli/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "hli/error.hpp"

namespace hli {
namespace {

void check_shape(const PredictionSet& p) {
  if (p.video_count() == 0 || p.class_count() == 0) throw DataError("empty prediction set");
  if (p.truth.size() != p.video_count()) throw DataError("truth count does not match score rows");
  for (const auto& t : p.truth)
    for (LabelIndex y : t)
      if (y >= p.class_count()) throw DataError("ground-truth label " + std::to_string(y) + " out of range");
}

bool contains(const LabelSet& s, LabelIndex y) { return std::find(s.begin(), s.end(), y) != s.end(); }

// AP of one class; NaN when the class has no positives.
double class_ap(const PredictionSet& p, std::size_t c, std::vector<std::size_t>& order) {
  const std::size_t v = p.video_count();
  order.resize(v);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.scores(a, c) > p.scores(b, c); });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < v; ++rank) {
    if (contains(p.truth[order[rank]], static_cast<LabelIndex>(c))) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return hits == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(hits);
}

}  // namespace

std::vector<LabelIndex> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<LabelIndex> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](LabelIndex a, LabelIndex b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  idx.resize(k);
  return idx;
}

double hit_at_1(const PredictionSet& p) {
  check_shape(p);
  std::size_t hits = 0;
  for (std::size_t v = 0; v < p.video_count(); ++v) {
    const auto row = p.scores.row(v);
    const auto best = static_cast<LabelIndex>(std::max_element(row.begin(), row.end()) - row.begin());
    if (contains(p.truth[v], best)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(p.video_count());
}

double perr(const PredictionSet& p) {
  check_shape(p);
  double total = 0.0;
  for (std::size_t v = 0; v < p.video_count(); ++v) {
    const auto& truth = p.truth[v];
    if (truth.empty()) throw DataError("PERR: video " + std::to_string(v) + " has no positives");
    const auto top = top_k(p.scores.row(v), truth.size());
    std::size_t hits = 0;
    for (LabelIndex y : top) hits += contains(truth, y);
    total += static_cast<double>(hits) / static_cast<double>(truth.size());
  }
  return total / static_cast<double>(p.video_count());
}

ApResult mean_average_precision(const PredictionSet& p, Exec exec) {
  check_shape(p);
  ApResult r;
  r.per_class.assign(p.class_count(), 0.0);
  const auto classes = static_cast<std::int64_t>(p.class_count());
#pragma omp parallel if (exec == Exec::kParallel)
  {
    std::vector<std::size_t> order;
#pragma omp for schedule(dynamic, 4)
    for (std::int64_t c = 0; c < classes; ++c) r.per_class[c] = class_ap(p, static_cast<std::size_t>(c), order);
  }
  double sum = 0.0;
  for (double ap : r.per_class) {
    if (std::isnan(ap)) continue;
    sum += ap;
    ++r.classes_scored;
  }
  if (r.classes_scored == 0) throw DataError("mAP: no class has a positive example");
  r.mean = sum / static_cast<double>(r.classes_scored);
  return r;
}

double global_average_precision(const PredictionSet& p, std::size_t k) {
  if (k == 0) throw DataError("gAP: k must be >= 1");
  check_shape(p);
  struct Entry {
    double score;
    std::uint32_t video;
    LabelIndex label;
    bool positive;
  };
  std::vector<Entry> pool;
  std::size_t total_positives = 0;
  for (std::size_t v = 0; v < p.video_count(); ++v) {
    total_positives += p.truth[v].size();
    for (LabelIndex y : top_k(p.scores.row(v), k))
      pool.push_back({p.scores(v, y), static_cast<std::uint32_t>(v), y, contains(p.truth[v], y)});
  }
  if (pool.empty() || total_positives == 0) throw DataError("gAP: empty pool or no positives");
  std::sort(pool.begin(), pool.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.video != b.video) return a.video < b.video;
    return a.label < b.label;
  });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!pool[i].positive) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(total_positives);
}

EvalReport evaluate(const PredictionSet& p, std::string layer, std::size_t gap_k, Exec exec) {
  EvalReport r;
  r.layer = std::move(layer);
  auto ap = mean_average_precision(p, exec);
  r.map = ap.mean;
  r.per_class_ap = std::move(ap.per_class);
  r.perr = perr(p);
  r.hit_at_1 = hit_at_1(p);
  r.gap = global_average_precision(p, gap_k);
  return r;
}

}  // namespace hli
