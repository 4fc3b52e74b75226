#include "hli/hierarchy.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hli/error.hpp"

namespace hli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw DataError(source + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

LabelHierarchy::LabelHierarchy(std::vector<ConceptLayer> layers, std::vector<LabelSet> parents)
    : layers_(std::move(layers)), parents_(std::move(parents)) {
  if (layers_.empty()) throw DataError("hierarchy needs at least one concept layer");
  index_.resize(layers_.size());
  for (std::size_t t = 0; t < layers_.size(); ++t) {
    const auto& layer = layers_[t];
    if (layer.labels.empty()) throw DataError("layer '" + layer.name + "' has no labels");
    for (std::size_t i = 0; i < layer.labels.size(); ++i) {
      const auto& name = layer.labels[i];
      if (name.empty() || name.front() == '[' || name.find('\n') != std::string::npos)
        throw DataError("layer '" + layer.name + "': invalid label name '" + name + "'");
      if (!index_[t].emplace(name, static_cast<LabelIndex>(i)).second)
        throw DataError("layer '" + layer.name + "': duplicate label '" + name + "'");
    }
  }
  if (!has_edges()) {
    if (!parents_.empty()) throw DataError("single-layer hierarchy cannot have edges");
    return;
  }
  for (const auto& name : layers_[layers_.size() - 2].labels) {
    if (name.find_first_of(",:") != std::string::npos)
      throw DataError("parent label '" + name + "' may not contain ',' or ':'");
  }
  if (parents_.size() != entity_count())
    throw DataError("edge table covers " + std::to_string(parents_.size()) + " of " +
                    std::to_string(entity_count()) + " entities");
  const std::size_t n_parent = layers_[layers_.size() - 2].size();
  for (std::size_t e = 0; e < parents_.size(); ++e) {
    auto& ps = parents_[e];
    const auto& ename = layers_.back().labels[e];
    if (ps.empty() || ps.size() > kMaxParents)
      throw DataError("entity '" + ename + "' has " + std::to_string(ps.size()) + " parents (expected 1.." +
                      std::to_string(kMaxParents) + ")");
    std::sort(ps.begin(), ps.end());
    if (std::adjacent_find(ps.begin(), ps.end()) != ps.end())
      throw DataError("entity '" + ename + "' has a duplicate parent");
    if (ps.back() >= n_parent) throw DataError("entity '" + ename + "' has a dangling parent index");
  }
}

std::vector<std::size_t> LabelHierarchy::layer_sizes() const {
  std::vector<std::size_t> n;
  for (const auto& l : layers_) n.push_back(l.size());
  return n;
}

std::optional<LabelIndex> LabelHierarchy::find(std::size_t t, const std::string& name) const {
  const auto& idx = index_.at(t);
  if (auto it = idx.find(name); it != idx.end()) return it->second;
  return std::nullopt;
}

const LabelSet& LabelHierarchy::parents_of(LabelIndex entity) const {
  if (!has_edges()) throw std::out_of_range("hierarchy has a single layer; no parents");
  if (entity >= parents_.size())
    throw std::out_of_range("entity index " + std::to_string(entity) + " out of range");
  return parents_[entity];
}

LabelSet LabelHierarchy::induce_vertical_labels(std::span<const LabelIndex> entities) const {
  LabelSet out;
  for (LabelIndex e : entities) {
    const auto& ps = parents_of(e);
    out.insert(out.end(), ps.begin(), ps.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Vector LabelHierarchy::induce_vertical_scores(std::span<const double> entity_scores) const {
  if (entity_scores.size() != entity_count()) throw std::invalid_argument("entity score length mismatch");
  Vector out(layers_.at(layers_.size() - 2).size(), 0.0);
  std::vector<bool> seen(out.size(), false);
  for (std::size_t e = 0; e < entity_scores.size(); ++e) {
    for (LabelIndex p : parents_[e]) {
      if (!seen[p] || entity_scores[e] > out[p]) out[p] = entity_scores[e];
      seen[p] = true;
    }
  }
  return out;
}

LabelHierarchy parse_vocabulary(std::istream& in, const std::string& source) {
  std::vector<ConceptLayer> layers;
  std::vector<std::pair<std::size_t, std::string>> edge_lines;
  enum class Section { kNone, kLayer, kEdges } section = Section::kNone;
  bool saw_edges = false;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(source, line_no, "unterminated section header");
      const std::string header = trim(line.substr(1, line.size() - 2));
      if (header == "edges") {
        if (saw_edges) fail(source, line_no, "duplicate [edges] section");
        saw_edges = true;
        section = Section::kEdges;
      } else if (header.rfind("layer", 0) == 0 && header.size() > 5 && (header[5] == ' ' || header[5] == '\t')) {
        if (saw_edges) fail(source, line_no, "layer section after [edges]");
        layers.push_back({trim(header.substr(5)), {}});
        section = Section::kLayer;
      } else {
        fail(source, line_no, "unknown section '" + header + "'");
      }
      continue;
    }
    switch (section) {
      case Section::kNone:
        fail(source, line_no, "label outside of any section");
      case Section::kLayer: {
        auto& layer = layers.back();
        if (std::find(layer.labels.begin(), layer.labels.end(), line) != layer.labels.end())
          fail(source, line_no, "duplicate label '" + line + "' in layer '" + layer.name + "'");
        layer.labels.push_back(line);
        break;
      }
      case Section::kEdges:
        edge_lines.emplace_back(line_no, line);
        break;
    }
  }

  if (layers.empty()) fail(source, line_no, "no [layer] sections");
  for (const auto& l : layers)
    if (l.labels.empty()) fail(source, line_no, "layer '" + l.name + "' is empty");

  std::vector<LabelSet> parents;
  if (layers.size() >= 2) {
    const auto& fine = layers.back();
    const auto& coarse = layers[layers.size() - 2];
    std::unordered_map<std::string, LabelIndex> fine_idx, coarse_idx;
    for (std::size_t i = 0; i < fine.labels.size(); ++i) fine_idx.emplace(fine.labels[i], static_cast<LabelIndex>(i));
    for (std::size_t i = 0; i < coarse.labels.size(); ++i)
      coarse_idx.emplace(coarse.labels[i], static_cast<LabelIndex>(i));

    parents.resize(fine.labels.size());
    std::vector<std::size_t> defined_at(fine.labels.size(), 0);
    for (const auto& [ln, text] : edge_lines) {
      const auto colon = text.rfind(':');
      if (colon == std::string::npos) fail(source, ln, "edge line missing ':'");
      const std::string child = trim(text.substr(0, colon));
      auto it = fine_idx.find(child);
      if (it == fine_idx.end()) fail(source, ln, "unknown entity '" + child + "'");
      if (defined_at[it->second] != 0)
        fail(source, ln, "entity '" + child + "' already has edges (line " + std::to_string(defined_at[it->second]) + ")");
      defined_at[it->second] = ln;

      LabelSet ps;
      std::stringstream list(text.substr(colon + 1));
      std::string tok;
      while (std::getline(list, tok, ',')) {
        const std::string name = trim(tok);
        if (name.empty()) continue;
        auto pit = coarse_idx.find(name);
        if (pit == coarse_idx.end()) fail(source, ln, "unknown parent '" + name + "' for entity '" + child + "'");
        if (std::find(ps.begin(), ps.end(), pit->second) != ps.end())
          fail(source, ln, "duplicate parent '" + name + "' for entity '" + child + "'");
        ps.push_back(pit->second);
      }
      if (ps.empty() || ps.size() > kMaxParents)
        fail(source, ln, "entity '" + child + "' has " + std::to_string(ps.size()) + " parents (expected 1..3)");
      parents[it->second] = std::move(ps);
    }
    for (std::size_t e = 0; e < parents.size(); ++e)
      if (parents[e].empty()) fail(source, line_no, "entity '" + fine.labels[e] + "' has no edges");
  } else if (!edge_lines.empty()) {
    fail(source, edge_lines.front().first, "edges require at least two layers");
  }

  try {
    return LabelHierarchy(std::move(layers), std::move(parents));
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

LabelHierarchy load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary '" + path.string() + "'");
  return parse_vocabulary(in, path.string());
}

std::string vocabulary_text(const LabelHierarchy& h) {
  std::ostringstream out;
  for (const auto& l : h.layers()) {
    out << "[layer " << l.name << "]\n";
    for (const auto& name : l.labels) out << name << '\n';
  }
  if (h.has_edges()) {
    const auto& coarse = h.layer(h.finest() - 1);
    out << "[edges]\n";
    for (std::size_t e = 0; e < h.entity_count(); ++e) {
      out << h.layer(h.finest()).labels[e] << ": ";
      const auto& ps = h.parents_of(static_cast<LabelIndex>(e));
      for (std::size_t i = 0; i < ps.size(); ++i) out << (i ? "," : "") << coarse.labels[ps[i]];
      out << '\n';
    }
  }
  return out.str();
}

void save_vocabulary(const std::filesystem::path& path, const LabelHierarchy& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary '" + path.string() + "'");
  out << vocabulary_text(h);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace hli
