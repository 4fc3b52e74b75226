#include "hli/checkpoint.hpp"

#include <charconv>
#include <cstring>
#include <limits>
#include <sstream>

#include "binary_io.hpp"
#include "hli/error.hpp"

namespace hli {
namespace {

constexpr char kMagic[4] = {'H', 'L', 'V', 'C'};
constexpr std::size_t kHeaderBytes = 6;
using Kind = FormatError::Kind;

StoredTensor from_view(const TensorView& v, const std::string& prefix) {
  return {prefix + v.name, {v.rows, v.cols}, DType::kF64, Vector(v.values.begin(), v.values.end())};
}

void restore_views(const Container& c, std::vector<TensorView> views, const std::string& prefix) {
  for (auto& v : views) {
    const auto& t = c.at(prefix + v.name);
    if (t.shape != std::vector<std::uint64_t>{v.rows, v.cols})
      throw DataError("checkpoint tensor '" + t.name + "' has the wrong shape");
    std::copy(t.values.begin(), t.values.end(), v.values.begin());
  }
}

const std::string& meta_at(const Container& c, const std::string& key) {
  auto it = c.meta.find(key);
  if (it == c.meta.end()) throw DataError("checkpoint is missing metadata '" + key + "'");
  return it->second;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw DataError("bad integer '" + s + "' in checkpoint");
  return v;
}

}  // namespace

std::string encode_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, p);
}

double decode_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc() || p != s.data() + s.size()) throw DataError("bad number '" + s + "' in checkpoint");
  return v;
}

const StoredTensor* Container::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

const StoredTensor& Container::at(const std::string& name) const {
  if (const auto* t = find(name)) return *t;
  throw DataError("checkpoint is missing tensor '" + name + "'");
}

std::vector<std::uint8_t> encode_container(const Container& c) {
  io::ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.meta.size()));
  for (const auto& [k, v] : c.meta) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(k.size()));
    w.put_bytes(k);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(v.size()));
    w.put_bytes(v);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    std::uint64_t count = 1;
    for (auto d : t.shape) count *= d;
    if (count != t.values.size()) throw DataError("tensor '" + t.name + "' shape does not match its values");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.put_bytes(t.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.dtype));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) w.put<std::uint64_t>(d);
    if (t.dtype == DType::kF64) {
      w.put_array<double>(t.values);
    } else {
      for (double v : t.values) w.put<float>(static_cast<float>(v));
    }
  }
  const auto crc = io::crc32(std::span(w.bytes()).subspan(kHeaderBytes));
  w.put<std::uint32_t>(crc);
  return std::move(w.bytes());
}

Container decode_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError(Kind::kTruncated, "checkpoint shorter than its magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError(Kind::kBadMagic, "not a checkpoint (bad magic)");
  io::ByteReader in(bytes);
  in.get_string(4);
  const auto version = in.get<std::uint16_t>();
  if (version != kCheckpointVersion)
    throw FormatError(Kind::kBadVersion, "unsupported checkpoint version " + std::to_string(version));

  Container c;
  const auto n_meta = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = in.get_string(in.get<std::uint16_t>());
    std::string value = in.get_string(in.get<std::uint32_t>());
    c.meta.emplace(std::move(key), std::move(value));
  }
  const auto n_tensors = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    StoredTensor t;
    t.name = in.get_string(in.get<std::uint16_t>());
    const auto dtype = in.get<std::uint8_t>();
    if (dtype > 1) throw FormatError(Kind::kMalformed, "tensor '" + t.name + "': unknown dtype");
    t.dtype = static_cast<DType>(dtype);
    t.shape.resize(in.get<std::uint8_t>());
    std::uint64_t count = 1;
    for (auto& d : t.shape) {
      d = in.get<std::uint64_t>();
      count *= d;
    }
    const std::size_t width = t.dtype == DType::kF64 ? 8 : 4;
    if (count > in.remaining() / width)
      throw FormatError(Kind::kTruncated, "tensor '" + t.name + "' extends past end of data");
    t.values.resize(count);
    if (t.dtype == DType::kF64) {
      in.get_array<double>(t.values);
    } else {
      for (auto& v : t.values) v = in.get<float>();
    }
    c.tensors.push_back(std::move(t));
  }
  if (in.remaining() < 4) throw FormatError(Kind::kTruncated, "missing trailing checksum");
  if (in.remaining() != 4) throw FormatError(Kind::kMalformed, "unexpected trailing bytes");
  const std::size_t end = in.position();
  const auto stored = in.get<std::uint32_t>();
  if (stored != io::crc32(bytes.subspan(kHeaderBytes, end - kHeaderBytes)))
    throw FormatError(Kind::kChecksum, "checksum mismatch");
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  io::write_file(path, encode_container(c));
}

Container read_container(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return decode_container(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

Container to_container(const TrainingCheckpoint& ckpt) {
  Container c;
  c.meta["model"] = ckpt.model;
  c.meta["step"] = std::to_string(ckpt.step);
  c.meta["vocabulary"] = vocabulary_text(ckpt.hierarchy);
  for (const auto& [k, v] : ckpt.config) c.meta["config." + k] = v;

  if (ckpt.normalizer) {
    const auto& n = *ckpt.normalizer;
    c.meta["norm.kind"] = n.kind == NormKind::kZNorm ? "znorm" : "pca";
    c.meta["norm.epsilon"] = encode_double(n.epsilon);
    c.meta["norm.l2"] = n.l2_after ? "1" : "0";
    c.tensors.push_back({"norm.mean", {n.mean.size()}, DType::kF64, n.mean});
    if (n.kind == NormKind::kZNorm) {
      c.tensors.push_back({"norm.scale", {n.scale.size()}, DType::kF64, n.scale});
    } else {
      c.tensors.push_back({"norm.transform", {n.transform.rows(), n.transform.cols()}, DType::kF64,
                           Vector(n.transform.values().begin(), n.transform.values().end())});
      c.tensors.push_back({"norm.eigenvalues", {n.eigenvalues.size()}, DType::kF64, n.eigenvalues});
    }
  }

  std::vector<TensorView> views;
  if (ckpt.model == "binn") {
    if (!ckpt.binn) throw DataError("binn checkpoint without parameters");
    auto p = *ckpt.binn;
    c.meta["input_dim"] = std::to_string(p.input_dim());
    for (const auto& v : p.tensors()) c.tensors.push_back(from_view(v, "binn."));
    views = p.tensors();
    if (ckpt.optimizer) {
      for (std::size_t i = 0; i < views.size(); ++i) {
        c.tensors.push_back({"adam.m." + views[i].name, {views[i].rows, views[i].cols}, DType::kF64, ckpt.optimizer->first_moment.at(i)});
        c.tensors.push_back({"adam.v." + views[i].name, {views[i].rows, views[i].cols}, DType::kF64, ckpt.optimizer->second_moment.at(i)});
      }
    }
  } else if (ckpt.model == "logreg") {
    if (!ckpt.logreg) throw DataError("logreg checkpoint without parameters");
    auto p = *ckpt.logreg;
    c.meta["input_dim"] = std::to_string(p.input_dim());
    c.meta["logreg.lambda"] = encode_double(p.lambda);
    for (const auto& v : p.tensors()) c.tensors.push_back(from_view(v, "logreg."));
    views = p.tensors();
    if (ckpt.optimizer) {
      c.tensors.push_back({"adam.m.weights", {p.weights.rows(), p.weights.cols()}, DType::kF64, ckpt.optimizer->first_moment.at(0)});
      c.tensors.push_back({"adam.v.weights", {p.weights.rows(), p.weights.cols()}, DType::kF64, ckpt.optimizer->second_moment.at(0)});
    }
  }
  if (ckpt.optimizer) {
    const auto& a = ckpt.optimizer->config;
    c.meta["adam.step"] = std::to_string(ckpt.optimizer->step);
    c.meta["adam.base_lr"] = encode_double(a.base_lr);
    c.meta["adam.beta1"] = encode_double(a.beta1);
    c.meta["adam.beta2"] = encode_double(a.beta2);
    c.meta["adam.eps"] = encode_double(a.eps);
    c.meta["adam.weight_decay"] = encode_double(a.weight_decay);
    c.meta["adam.decay_factor"] = encode_double(a.decay_factor);
    c.meta["adam.decay_every"] = std::to_string(a.decay_every);
  }
  return c;
}

TrainingCheckpoint from_container(const Container& c) {
  TrainingCheckpoint ckpt;
  ckpt.model = meta_at(c, "model");
  ckpt.step = parse_u64(meta_at(c, "step"));
  {
    std::istringstream vocab(meta_at(c, "vocabulary"));
    ckpt.hierarchy = parse_vocabulary(vocab, "<checkpoint vocabulary>");
  }
  for (const auto& [k, v] : c.meta)
    if (k.rfind("config.", 0) == 0) ckpt.config[k.substr(7)] = v;

  if (c.meta.contains("norm.kind")) {
    NormalizerStats n;
    const auto& kind = meta_at(c, "norm.kind");
    if (kind != "znorm" && kind != "pca") throw DataError("unknown normalizer kind '" + kind + "'");
    n.kind = kind == "znorm" ? NormKind::kZNorm : NormKind::kPcaWhitening;
    n.epsilon = decode_double(meta_at(c, "norm.epsilon"));
    n.l2_after = meta_at(c, "norm.l2") == "1";
    n.mean = c.at("norm.mean").values;
    const std::uint64_t dim = n.mean.size();
    if (n.kind == NormKind::kZNorm) {
      n.scale = c.at("norm.scale").values;
      if (n.scale.size() != dim) throw DataError("normalizer scale has the wrong length");
    } else {
      const auto& t = c.at("norm.transform");
      if (t.shape != std::vector<std::uint64_t>{dim, dim}) throw DataError("normalizer transform has the wrong shape");
      n.transform = Matrix(dim, dim);
      std::copy(t.values.begin(), t.values.end(), n.transform.values().begin());
      n.eigenvalues = c.at("norm.eigenvalues").values;
    }
    ckpt.normalizer = std::move(n);
  }

  std::vector<TensorView> views;
  if (ckpt.model == "binn") {
    const auto dim = parse_u64(meta_at(c, "input_dim"));
    const auto sizes = ckpt.hierarchy.layer_sizes();
    ckpt.binn = BinnParams::zeros(sizes, dim);
    restore_views(c, ckpt.binn->tensors(), "binn.");
    views = ckpt.binn->tensors();
  } else if (ckpt.model == "logreg") {
    const auto dim = parse_u64(meta_at(c, "input_dim"));
    ckpt.logreg = LogRegParams::zeros(ckpt.hierarchy.entity_count(), dim, decode_double(meta_at(c, "logreg.lambda")));
    restore_views(c, ckpt.logreg->tensors(), "logreg.");
    views = ckpt.logreg->tensors();
  } else if (ckpt.model != "none") {
    throw DataError("unknown model kind '" + ckpt.model + "'");
  }
  if (ckpt.normalizer && !views.empty() && ckpt.normalizer->dim() != parse_u64(meta_at(c, "input_dim")))
    throw DataError("normalizer dimension does not match the model input");

  if (c.meta.contains("adam.step")) {
    AdamConfig a;
    a.base_lr = decode_double(meta_at(c, "adam.base_lr"));
    a.beta1 = decode_double(meta_at(c, "adam.beta1"));
    a.beta2 = decode_double(meta_at(c, "adam.beta2"));
    a.eps = decode_double(meta_at(c, "adam.eps"));
    a.weight_decay = decode_double(meta_at(c, "adam.weight_decay"));
    a.decay_factor = decode_double(meta_at(c, "adam.decay_factor"));
    a.decay_every = parse_u64(meta_at(c, "adam.decay_every"));
    AdamState s = make_adam(a, views);
    s.step = parse_u64(meta_at(c, "adam.step"));
    for (std::size_t i = 0; i < views.size(); ++i) {
      const auto& m = c.at("adam.m." + views[i].name);
      const auto& v = c.at("adam.v." + views[i].name);
      if (m.values.size() != views[i].values.size() || v.values.size() != views[i].values.size())
        throw DataError("optimizer moment '" + views[i].name + "' has the wrong shape");
      s.first_moment[i] = m.values;
      s.second_moment[i] = v.values;
    }
    ckpt.optimizer = std::move(s);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const TrainingCheckpoint& ckpt) {
  write_container(path, to_container(ckpt));
}

TrainingCheckpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return from_container(read_container(path));
  } catch (const FormatError&) {
    throw;
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

TrainingCheckpoint load_checkpoint(const std::filesystem::path& path, const LabelHierarchy& expected) {
  TrainingCheckpoint ckpt = load_checkpoint(path);
  if (ckpt.hierarchy.layer_sizes() != expected.layer_sizes())
    throw DataError(path.string() + ": checkpoint layer sizes do not match the vocabulary");
  return ckpt;
}

}  // namespace hli
