#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "hli/data.hpp"
#include "hli/error.hpp"

namespace hli {
namespace {

std::string padded(const char* prefix, std::size_t i, std::size_t total) {
  const int width = static_cast<int>(std::to_string(total > 0 ? total - 1 : 0).size());
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

// Distinct uniform draws of `k` indices from [0, n), returned sorted.
std::vector<LabelIndex> sample_distinct(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<LabelIndex> picked;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  while (picked.size() < k) {
    const auto c = static_cast<LabelIndex>(pick(rng));
    if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

VideoRecord make_video(std::mt19937_64& rng, const SynthConfig& c, const LabelHierarchy& h, const Matrix& protos,
                       const Matrix& audio_protos, double rate, std::string id) {
  std::poisson_distribution<std::size_t> count_dist(rate > 0.0 ? rate : 1.0);
  std::size_t k = rate > 0.0 ? count_dist(rng) : 1;
  k = std::clamp<std::size_t>(k, 1, c.entities);

  VideoRecord r;
  r.id = std::move(id);
  LabelSet entities = sample_distinct(rng, c.entities, k);
  r.labels = {h.induce_vertical_labels(entities), std::move(entities)};
  const auto& chosen = r.labels.back();

  auto mean_of = [&](const Matrix& p) {
    Vector m(p.cols(), 0.0);
    for (LabelIndex e : chosen)
      for (std::size_t d = 0; d < m.size(); ++d) m[d] += p(e, d);
    for (double& v : m) v /= static_cast<double>(chosen.size());
    return m;
  };
  std::normal_distribution<double> noise(0.0, 1.0);
  auto jitter = [&](double v) { return c.noise > 0.0 ? v + c.noise * noise(rng) : v; };

  const Vector center = mean_of(protos);
  r.dim = static_cast<std::uint32_t>(c.dim);
  if (c.frames_per_video == 0) {
    r.kind = FeatureKind::kPooled;
    r.values.resize(c.dim);
    for (std::size_t d = 0; d < c.dim; ++d) r.values[d] = static_cast<float>(jitter(center[d]));
  } else {
    r.kind = FeatureKind::kFrames;
    r.frame_count = static_cast<std::uint32_t>(c.frames_per_video);
    r.values.resize(c.frames_per_video * c.dim);
    for (std::size_t f = 0; f < c.frames_per_video; ++f)
      for (std::size_t d = 0; d < c.dim; ++d) r.values[f * c.dim + d] = static_cast<float>(jitter(center[d]));
  }
  if (c.audio_dim > 0) {
    const Vector audio_center = mean_of(audio_protos);
    r.audio.resize(c.audio_dim);
    for (std::size_t d = 0; d < c.audio_dim; ++d) r.audio[d] = static_cast<float>(jitter(audio_center[d]));
  }
  return r;
}

}  // namespace

void SynthConfig::validate() const {
  if (verticals == 0 || entities == 0 || dim == 0) throw UsageError("synth: counts and dim must be >= 1");
  if (max_parents < 1 || max_parents > kMaxParents) throw UsageError("synth: max_parents must be in 1..3");
  if (max_parents > verticals) throw UsageError("synth: max_parents exceeds vertical count");
  if (!(mean_labels >= 1.0) || mean_labels > static_cast<double>(entities))
    throw UsageError("synth: mean_labels must be in [1, entities]");
  if (!(noise >= 0.0) || !(prototype_scale > 0.0)) throw UsageError("synth: noise must be >= 0 and scale > 0");
  if (frames_per_video > kMaxFrames) throw UsageError("synth: frames_per_video exceeds 360");
  if (train_videos == 0 || val_videos == 0) throw UsageError("synth: video counts must be >= 1");
}

double clamped_poisson_rate(double mean) {
  if (!(mean >= 1.0)) throw UsageError("clamped Poisson mean must be >= 1");
  // E[max(K, 1)] = rate + exp(-rate) for K ~ Poisson(rate).
  double rate = mean;
  for (int i = 0; i < 100; ++i) {
    const double f = rate + std::exp(-rate) - mean;
    const double df = 1.0 - std::exp(-rate);
    if (df <= 0.0) break;
    const double next = std::max(0.0, rate - f / df);
    if (std::abs(next - rate) < 1e-15) {
      rate = next;
      break;
    }
    rate = next;
  }
  return mean == 1.0 ? 0.0 : rate;
}

SynthDataset synth_generate(const SynthConfig& c) {
  c.validate();
  std::mt19937_64 rng(c.seed);

  std::vector<ConceptLayer> layers(2);
  layers[0].name = "verticals";
  layers[1].name = "entities";
  for (std::size_t v = 0; v < c.verticals; ++v) layers[0].labels.push_back(padded("vertical_", v, c.verticals));
  for (std::size_t e = 0; e < c.entities; ++e) layers[1].labels.push_back(padded("entity_", e, c.entities));
  std::vector<LabelSet> parents(c.entities);
  std::uniform_int_distribution<std::size_t> parent_count(1, c.max_parents);
  for (auto& ps : parents) ps = sample_distinct(rng, c.verticals, parent_count(rng));

  SynthDataset out;
  out.hierarchy = LabelHierarchy(std::move(layers), std::move(parents));

  // Prototypes are rounded to float so noiseless records reproduce them exactly.
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](Matrix& m) {
    for (double& v : m.values()) v = static_cast<float>(c.prototype_scale * gauss(rng));
  };
  out.prototypes = Matrix(c.entities, c.dim);
  draw(out.prototypes);
  out.audio_prototypes = Matrix(c.entities, c.audio_dim);
  draw(out.audio_prototypes);

  const double rate = clamped_poisson_rate(c.mean_labels);
  for (std::size_t i = 0; i < c.train_videos; ++i)
    out.train.push_back(make_video(rng, c, out.hierarchy, out.prototypes, out.audio_prototypes, rate,
                                   padded("train_", i, c.train_videos)));
  for (std::size_t i = 0; i < c.val_videos; ++i)
    out.val.push_back(make_video(rng, c, out.hierarchy, out.prototypes, out.audio_prototypes, rate,
                                 padded("val_", i, c.val_videos)));
  return out;
}

}  // namespace hli
