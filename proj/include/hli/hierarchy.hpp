#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hli/tensor.hpp"

namespace hli {

using LabelIndex = std::uint32_t;
// Sorted, duplicate-free label indices within one concept layer.
using LabelSet = std::vector<LabelIndex>;

inline constexpr std::size_t kMaxParents = 3;

struct ConceptLayer {
  std::string name;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

// Concept layers ordered coarse (index 0, verticals) to fine (last index,
// entities). When there are at least two layers, every label of the finest
// layer has 1..3 parents in the layer directly above it.
class LabelHierarchy {
 public:
  LabelHierarchy() = default;
  // Throws DataError when an invariant is violated.
  LabelHierarchy(std::vector<ConceptLayer> layers, std::vector<LabelSet> parents);

  std::size_t layer_count() const noexcept { return layers_.size(); }
  const ConceptLayer& layer(std::size_t t) const { return layers_.at(t); }
  const std::vector<ConceptLayer>& layers() const noexcept { return layers_; }
  std::vector<std::size_t> layer_sizes() const;

  std::size_t finest() const noexcept { return layers_.size() - 1; }
  std::size_t entity_count() const noexcept { return layers_.back().size(); }
  bool has_edges() const noexcept { return layers_.size() >= 2; }

  std::optional<LabelIndex> find(std::size_t t, const std::string& name) const;

  // Throws std::out_of_range for an invalid entity index.
  const LabelSet& parents_of(LabelIndex entity) const;

  // Union of parents over `entities`; empty in, empty out.
  LabelSet induce_vertical_labels(std::span<const LabelIndex> entities) const;

  // Score of each parent-layer label as the max over its child entity scores.
  // Labels without children score 0.
  Vector induce_vertical_scores(std::span<const double> entity_scores) const;

  friend bool operator==(const LabelHierarchy& a, const LabelHierarchy& b) {
    return a.layers_.size() == b.layers_.size() && a.parents_ == b.parents_ &&
           [&] {
             for (std::size_t t = 0; t < a.layers_.size(); ++t)
               if (a.layers_[t].name != b.layers_[t].name || a.layers_[t].labels != b.layers_[t].labels)
                 return false;
             return true;
           }();
  }

 private:
  std::vector<ConceptLayer> layers_;
  std::vector<LabelSet> parents_;  // indexed by entity
  std::vector<std::unordered_map<std::string, LabelIndex>> index_;
};

// Vocabulary text format:
//   [layer <name>]      one section per concept layer, coarse first
//   <label>             one label per line
//   [edges]
//   <entity>: <parent>,<parent>
// Blank lines and lines starting with '#' are ignored.
LabelHierarchy parse_vocabulary(std::istream& in, const std::string& source = "<stream>");
LabelHierarchy load_vocabulary(const std::filesystem::path& path);
std::string vocabulary_text(const LabelHierarchy& h);
void save_vocabulary(const std::filesystem::path& path, const LabelHierarchy& h);

}  // namespace hli
