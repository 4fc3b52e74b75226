#include "hli/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hli/baseline.hpp"
#include "hli/binn.hpp"
#include "hli/error.hpp"
#include "hli/optim.hpp"

namespace hli {
namespace {

constexpr std::size_t kScoreChunk = 1024;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    throw UsageError("'" + key + "': expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError("'" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError("'" + key + "': expected a boolean, got '" + v + "'");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<LayerLabels> gather_labels(std::span<const VideoRecord> records) {
  std::vector<LayerLabels> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.labels);
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::vector<TensorView> grad_views(Matrix& g) { return {{"weights", g.rows(), g.cols(), g.values()}}; }

std::filesystem::path or_default(const std::filesystem::path& p, const char* fallback) {
  return p.empty() ? std::filesystem::path(fallback) : p;
}

void require(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw UsageError(std::string("missing required path: ") + what);
  if (!std::filesystem::exists(p)) throw UsageError(std::string(what) + " '" + p.string() + "' does not exist");
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError(source + ":" + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
      throw UsageError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  return parse_key_values(in, path.string());
}

double RunConfig::resolved_lr() const { return lr.value_or(model == ModelKind::kBinn ? 0.001 : 0.01); }
std::uint64_t RunConfig::resolved_iters() const { return iters.value_or(model == ModelKind::kBinn ? 90000 : 35000); }
std::uint64_t RunConfig::resolved_decay_every() const { return decay_every.value_or(40000); }
double RunConfig::resolved_decay_factor() const {
  return decay_factor.value_or(model == ModelKind::kBinn ? 0.1 : 1.0);
}

void RunConfig::set(const std::string& key, const std::string& v) {
  if (key == "model") {
    if (v == "binn") model = ModelKind::kBinn;
    else if (v == "logreg") model = ModelKind::kLogReg;
    else throw UsageError("model must be 'binn' or 'logreg', got '" + v + "'");
  } else if (key == "features") {
    if (v == "rgb") features = FeatureSet::kRgb;
    else if (v == "rgb+audio") features = FeatureSet::kRgbAudio;
    else throw UsageError("features must be 'rgb' or 'rgb+audio', got '" + v + "'");
  } else if (key == "norm") {
    if (v == "znorm") norm = NormKind::kZNorm;
    else if (v == "pca") norm = NormKind::kPcaWhitening;
    else throw UsageError("norm must be 'znorm' or 'pca', got '" + v + "'");
  } else if (key == "l2") {
    l2 = to_bool(key, v);
  } else if (key == "lr") {
    lr = to_double(key, v);
  } else if (key == "iters") {
    iters = to_u64(key, v);
  } else if (key == "decay_every") {
    decay_every = to_u64(key, v);
  } else if (key == "decay_factor") {
    decay_factor = to_double(key, v);
  } else if (key == "batch_size") {
    batch_size = to_u64(key, v);
  } else if (key == "weight_decay") {
    weight_decay = to_double(key, v);
  } else if (key == "lambda") {
    lambda = to_double(key, v);
  } else if (key == "norm_epsilon") {
    norm_epsilon = to_double(key, v);
  } else if (key == "seed") {
    seed = to_u64(key, v);
  } else if (key == "log_every") {
    log_every = to_u64(key, v);
  } else if (key == "gap_k") {
    gap_k = to_u64(key, v);
  } else if (key == "top_k") {
    top_k = to_u64(key, v);
  } else if (key == "vocab") {
    vocab = v;
  } else if (key == "train") {
    train = v;
  } else if (key == "val") {
    val = v;
  } else if (key == "checkpoint") {
    checkpoint = v;
  } else if (key == "out") {
    out = v;
  } else if (key == "normalizer") {
    normalizer = v;
  } else if (key == "resume") {
    resume = v;
  } else if (key == "exec") {
    if (v == "serial") exec = Exec::kSerial;
    else if (v == "parallel") exec = Exec::kParallel;
    else throw UsageError("exec must be 'serial' or 'parallel'");
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

void RunConfig::apply(const KeyValues& kv) {
  for (const auto& [k, v] : kv) set(k, v);
}

KeyValues RunConfig::to_key_values() const {
  return {
      {"model", model == ModelKind::kBinn ? "binn" : "logreg"},
      {"features", features == FeatureSet::kRgb ? "rgb" : "rgb+audio"},
      {"norm", norm == NormKind::kZNorm ? "znorm" : "pca"},
      {"l2", l2 ? "true" : "false"},
      {"lr", fmt_double(resolved_lr())},
      {"iters", std::to_string(resolved_iters())},
      {"decay_every", std::to_string(resolved_decay_every())},
      {"decay_factor", fmt_double(resolved_decay_factor())},
      {"batch_size", std::to_string(batch_size)},
      {"weight_decay", fmt_double(weight_decay)},
      {"lambda", fmt_double(lambda)},
      {"norm_epsilon", fmt_double(norm_epsilon)},
      {"seed", std::to_string(seed)},
  };
}

void RunConfig::validate() const {
  if (!(resolved_lr() > 0.0)) throw UsageError("lr must be > 0");
  if (batch_size == 0) throw UsageError("batch_size must be >= 1");
  if (resolved_decay_every() == 0) throw UsageError("decay_every must be >= 1");
  if (!(resolved_decay_factor() > 0.0)) throw UsageError("decay_factor must be > 0");
  if (weight_decay < 0.0 || lambda < 0.0) throw UsageError("weight_decay and lambda must be >= 0");
  if (!(norm_epsilon > 0.0)) throw UsageError("norm_epsilon must be > 0");
  if (log_every == 0) throw UsageError("log_every must be >= 1");
  if (gap_k == 0 || top_k == 0) throw UsageError("gap_k and top_k must be >= 1");
}

SynthConfig synth_config_from(const KeyValues& kv) {
  SynthConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "verticals") c.verticals = to_u64(k, v);
    else if (k == "entities") c.entities = to_u64(k, v);
    else if (k == "max_parents") c.max_parents = to_u64(k, v);
    else if (k == "dim") c.dim = to_u64(k, v);
    else if (k == "audio_dim") c.audio_dim = to_u64(k, v);
    else if (k == "mean_labels") c.mean_labels = to_double(k, v);
    else if (k == "noise") c.noise = to_double(k, v);
    else if (k == "prototype_scale") c.prototype_scale = to_double(k, v);
    else if (k == "frames_per_video") c.frames_per_video = to_u64(k, v);
    else if (k == "train_videos") c.train_videos = to_u64(k, v);
    else if (k == "val_videos") c.val_videos = to_u64(k, v);
    else if (k == "seed") c.seed = to_u64(k, v);
    else if (k == "out") continue;
    else throw UsageError("unknown synth key '" + k + "'");
  }
  c.validate();
  return c;
}

Matrix raw_features(std::span<const VideoRecord> records, FeatureSet features) {
  if (records.empty()) throw DataError("no records");
  Matrix out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    VideoFeature x = r.rgb_feature();
    if (features == FeatureSet::kRgbAudio) {
      if (!r.has_audio()) throw DataError("record " + r.id + " has no audio feature");
      const Vector audio(r.audio.begin(), r.audio.end());
      x = concat_audio(x, audio);
    }
    if (i == 0) out = Matrix(records.size(), x.size());
    if (x.size() != out.cols())
      throw DataError("record " + r.id + " has feature dimension " + std::to_string(x.size()) + ", expected " +
                      std::to_string(out.cols()));
    std::copy(x.begin(), x.end(), out.row(i).begin());
  }
  return out;
}

void check_records(std::span<const VideoRecord> records, const LabelHierarchy& h) {
  const auto sizes = h.layer_sizes();
  for (const auto& r : records) {
    if (r.labels.size() != sizes.size())
      throw DataError("record " + r.id + " has labels for " + std::to_string(r.labels.size()) +
                      " layers; vocabulary has " + std::to_string(sizes.size()));
    for (std::size_t t = 0; t < sizes.size(); ++t)
      for (LabelIndex y : r.labels[t])
        if (y >= sizes[t])
          throw DataError("record " + r.id + ": label " + std::to_string(y) + " outside layer '" + h.layer(t).name + "'");
    if (r.labels.back().empty()) throw DataError("record " + r.id + " has no entity labels");
  }
}

NormalizerStats fit_normalizer(const Matrix& features, NormKind kind, bool l2, double epsilon, Exec exec) {
  std::vector<VideoFeature> rows;
  rows.reserve(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) rows.emplace_back(features.row(i).begin(), features.row(i).end());
  return kind == NormKind::kZNorm ? fit_znorm(rows, epsilon, l2, exec) : fit_pca_whitening(rows, epsilon, l2, exec);
}

Matrix normalize_rows(const NormalizerStats& stats, const Matrix& features) {
  Matrix out(features.rows(), features.cols());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto x = apply_normalizer(stats, features.row(i));
    std::copy(x.begin(), x.end(), out.row(i).begin());
  }
  return out;
}

TrainResult train_model(const RunConfig& cfg, const LabelHierarchy& h, std::span<const VideoRecord> train,
                        const TrainingCheckpoint* resume, std::ostream* progress) {
  cfg.validate();
  check_records(train, h);
  const Matrix raw = raw_features(train, cfg.features);
  const std::size_t dim = raw.cols();
  const std::string model_name = cfg.model == ModelKind::kBinn ? "binn" : "logreg";

  TrainResult result;
  auto& ck = result.checkpoint;
  ck.model = model_name;
  ck.hierarchy = h;
  ck.config = cfg.to_key_values();

  if (resume) {
    if (resume->model != model_name) throw UsageError("resume checkpoint holds a '" + resume->model + "' model");
    if (!resume->normalizer || !resume->optimizer) throw DataError("resume checkpoint lacks normalizer or optimizer state");
    ck.normalizer = resume->normalizer;
  } else if (!cfg.normalizer.empty()) {
    auto stored = load_checkpoint(cfg.normalizer);
    if (!stored.normalizer) throw DataError("'" + cfg.normalizer.string() + "' holds no normalizer");
    ck.normalizer = std::move(stored.normalizer);
  } else {
    ck.normalizer = fit_normalizer(raw, cfg.norm, cfg.l2, cfg.norm_epsilon, cfg.exec);
  }
  if (ck.normalizer->dim() != dim) throw DataError("normalizer dimension does not match the features");
  const Matrix x = normalize_rows(*ck.normalizer, raw);
  const auto labels = gather_labels(train);

  AdamConfig adam_cfg;
  adam_cfg.base_lr = cfg.resolved_lr();
  adam_cfg.weight_decay = cfg.weight_decay;
  adam_cfg.decay_factor = cfg.resolved_decay_factor();
  adam_cfg.decay_every = cfg.resolved_decay_every();

  std::vector<TensorView> params;
  if (cfg.model == ModelKind::kBinn) {
    ck.binn = resume ? *resume->binn : init_params(h, dim, cfg.seed);
    if (ck.binn->input_dim() != dim || ck.binn->layer_sizes() != h.layer_sizes())
      throw DataError("resume checkpoint shape does not match the data");
    params = ck.binn->tensors();
  } else {
    ck.logreg = resume ? *resume->logreg : LogRegParams::zeros(h.entity_count(), dim, cfg.lambda);
    if (ck.logreg->input_dim() != dim || ck.logreg->entity_count() != h.entity_count())
      throw DataError("resume checkpoint shape does not match the data");
    params = ck.logreg->tensors();
  }
  AdamState state = resume ? *resume->optimizer : make_adam(adam_cfg, params);

  BatchSchedule schedule(train.size(), cfg.batch_size, cfg.seed);
  const std::uint64_t iters = cfg.resolved_iters();
  const std::size_t finest = h.finest();
  for (std::uint64_t step = state.step; step < iters; ++step) {
    const auto idx = schedule.batch_at(step);
    const Matrix xb = gather_rows(x, idx);
    double batch_loss = 0.0;
    if (cfg.model == ModelKind::kBinn) {
      std::vector<LayerLabels> lb;
      lb.reserve(idx.size());
      for (auto i : idx) lb.push_back(labels[i]);
      auto r = batch_loss_grad(*ck.binn, xb, lb, cfg.exec);
      batch_loss = r.loss;
      const double lr = current_lr(state);
      if (step % cfg.log_every == 0 || step + 1 == iters) {
        result.curve.push_back({step, batch_loss / static_cast<double>(idx.size())});
        result.log.push_back("iter " + std::to_string(step) + " loss " + fmt_double(result.curve.back().loss) +
                             " lr " + fmt_double(lr));
        if (progress) *progress << result.log.back() << '\n';
      }
      adam_step(state, params, r.grads.tensors());
    } else {
      std::vector<LabelSet> lb;
      lb.reserve(idx.size());
      for (auto i : idx) lb.push_back(labels[i][finest]);
      auto r = lr_batch_loss_grad(*ck.logreg, xb, lb, cfg.exec);
      batch_loss = r.loss;
      const double lr = current_lr(state);
      if (step % cfg.log_every == 0 || step + 1 == iters) {
        result.curve.push_back({step, batch_loss / static_cast<double>(idx.size())});
        result.log.push_back("iter " + std::to_string(step) + " loss " + fmt_double(result.curve.back().loss) +
                             " lr " + fmt_double(lr));
        if (progress) *progress << result.log.back() << '\n';
      }
      adam_step(state, params, grad_views(r.grad));
    }
    if (!std::isfinite(batch_loss)) throw NumericError("non-finite loss at iteration " + std::to_string(step));
  }
  ck.step = state.step;
  ck.optimizer = std::move(state);
  return result;
}

std::vector<Matrix> score_records(const TrainingCheckpoint& ckpt, std::span<const VideoRecord> records, Exec exec) {
  if (!ckpt.normalizer) throw DataError("checkpoint has no normalizer");
  check_records(records, ckpt.hierarchy);
  FeatureSet features = FeatureSet::kRgb;
  if (auto it = ckpt.config.find("features"); it != ckpt.config.end() && it->second == "rgb+audio")
    features = FeatureSet::kRgbAudio;
  const Matrix x = normalize_rows(*ckpt.normalizer, raw_features(records, features));

  const auto sizes = ckpt.hierarchy.layer_sizes();
  std::vector<Matrix> out(sizes.size());
  if (ckpt.model == "binn") {
    if (x.cols() != ckpt.binn->input_dim()) throw DataError("shard features do not match the model input dimension");
    for (std::size_t t = 0; t < sizes.size(); ++t) out[t] = Matrix(records.size(), sizes[t]);
    for (std::size_t start = 0; start < records.size(); start += kScoreChunk) {
      const std::size_t rows = std::min(kScoreChunk, records.size() - start);
      std::vector<std::size_t> idx(rows);
      for (std::size_t i = 0; i < rows; ++i) idx[i] = start + i;
      const auto probs = predict_batch(*ckpt.binn, gather_rows(x, idx), exec);
      for (std::size_t t = 0; t < sizes.size(); ++t)
        for (std::size_t i = 0; i < rows; ++i)
          std::copy(probs[t].row(i).begin(), probs[t].row(i).end(), out[t].row(start + i).begin());
    }
  } else if (ckpt.model == "logreg") {
    if (x.cols() != ckpt.logreg->input_dim()) throw DataError("shard features do not match the model input dimension");
    const std::size_t fine = ckpt.hierarchy.finest();
    out[fine] = lr_predict_batch(*ckpt.logreg, x, exec);
    if (ckpt.hierarchy.has_edges()) {
      out[fine - 1] = Matrix(records.size(), sizes[fine - 1]);
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto v = ckpt.hierarchy.induce_vertical_scores(out[fine].row(i));
        std::copy(v.begin(), v.end(), out[fine - 1].row(i).begin());
      }
    }
  } else {
    throw DataError("checkpoint holds no model");
  }
  return out;
}

std::vector<EvalReport> evaluate_checkpoint(const TrainingCheckpoint& ckpt, std::span<const VideoRecord> records,
                                            std::size_t gap_k, Exec exec) {
  auto scores = score_records(ckpt, records, exec);
  std::vector<EvalReport> reports;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (scores[t].empty()) continue;
    PredictionSet p{std::move(scores[t]), {}};
    for (const auto& r : records) p.truth.push_back(r.labels[t]);
    reports.push_back(evaluate(p, ckpt.hierarchy.layer(t).name, gap_k, exec));
  }
  return reports;
}

std::string report_text(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  for (const auto& r : reports) {
    out << r.layer << ".map = " << fmt6(r.map) << '\n';
    out << r.layer << ".perr = " << fmt6(r.perr) << '\n';
    out << r.layer << ".hit_at_1 = " << fmt6(r.hit_at_1) << '\n';
    out << r.layer << ".gap = " << fmt6(r.gap) << '\n';
  }
  return out.str();
}

std::string report_json(const std::vector<EvalReport>& reports) {
  auto round6 = [](double v) { return std::round(v * 1e6) / 1e6; };
  nlohmann::json j = nlohmann::json::object();
  for (const auto& r : reports) {
    nlohmann::json layer;
    layer["map"] = round6(r.map);
    layer["perr"] = round6(r.perr);
    layer["hit_at_1"] = round6(r.hit_at_1);
    layer["gap"] = round6(r.gap);
    nlohmann::json ap = nlohmann::json::array();
    for (double v : r.per_class_ap) ap.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(round6(v)));
    layer["per_class_ap"] = std::move(ap);
    j[r.layer] = std::move(layer);
  }
  return j.dump(2) + "\n";
}

KeyValues parse_report_text(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in, "<report>");
}

std::vector<Prediction> predict_top_k(const TrainingCheckpoint& ckpt, std::span<const VideoRecord> records,
                                      std::size_t top_k_count, Exec exec) {
  const auto scores = score_records(ckpt, records, exec);
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t t = 0; t < scores.size(); ++t) {
      if (scores[t].empty()) continue;
      const auto& layer = ckpt.hierarchy.layer(t);
      const auto row = scores[t].row(i);
      const auto top = top_k(row, top_k_count);
      for (std::size_t k = 0; k < top.size(); ++k) {
        if (top[k] >= layer.size()) throw DataError("label index out of range for layer '" + layer.name + "'");
        out.push_back({records[i].id, layer.name, k + 1, layer.labels[top[k]], row[top[k]]});
      }
    }
  }
  return out;
}

void cmd_synth(const SynthConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
  const SynthDataset ds = synth_generate(cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw UsageError("cannot create '" + out_dir.string() + "': " + ec.message());
  save_vocabulary(out_dir / "vocab.txt", ds.hierarchy);
  write_shard(out_dir / "train.hlvs", ds.train);
  write_shard(out_dir / "val.hlvs", ds.val);

  auto mean_labels = [](const std::vector<VideoRecord>& rs, std::size_t t) {
    double s = 0.0;
    for (const auto& r : rs) s += static_cast<double>(r.labels[t].size());
    return s / static_cast<double>(rs.size());
  };
  log << "train videos: " << ds.train.size() << '\n'
      << "val videos: " << ds.val.size() << '\n'
      << "entities/video (train): " << fmt6(mean_labels(ds.train, 1)) << '\n'
      << "verticals/video (train): " << fmt6(mean_labels(ds.train, 0)) << '\n'
      << "wrote " << (out_dir / "vocab.txt").string() << ", " << (out_dir / "train.hlvs").string() << ", "
      << (out_dir / "val.hlvs").string() << '\n';
}

void cmd_fit_norm(const RunConfig& cfg, std::ostream& log) {
  require(cfg.vocab, "vocabulary");
  require(cfg.train, "train shard");
  const auto h = load_vocabulary(cfg.vocab);
  const auto records = read_shard(cfg.train);
  check_records(records, h);
  TrainingCheckpoint ck;
  ck.hierarchy = h;
  ck.config = cfg.to_key_values();
  ck.normalizer = fit_normalizer(raw_features(records, cfg.features), cfg.norm, cfg.l2, cfg.norm_epsilon, cfg.exec);
  const auto out = or_default(cfg.out, "normalizer.hlvc");
  save_checkpoint(out, ck);
  log << "fitted " << (cfg.norm == NormKind::kZNorm ? "z-norm" : "PCA whitening") << " on " << records.size()
      << " videos (D=" << ck.normalizer->dim() << "), wrote " << out.string() << '\n';
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  require(cfg.vocab, "vocabulary");
  require(cfg.train, "train shard");
  const auto h = load_vocabulary(cfg.vocab);
  const auto records = read_shard(cfg.train);
  std::optional<TrainingCheckpoint> resume;
  if (!cfg.resume.empty()) {
    require(cfg.resume, "resume checkpoint");
    resume = load_checkpoint(cfg.resume, h);
  }
  auto result = train_model(cfg, h, records, resume ? &*resume : nullptr, &log);
  const auto out = or_default(cfg.out, "model.hlvc");
  save_checkpoint(out, result.checkpoint);
  std::ofstream log_file(out.string() + ".log");
  for (const auto& line : result.log) log_file << line << '\n';
  if (!log_file) throw DataError("cannot write training log next to '" + out.string() + "'");
  log << "saved checkpoint " << out.string() << " at step " << result.checkpoint.step << '\n';
}

std::vector<EvalReport> cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  require(cfg.checkpoint, "checkpoint");
  require(cfg.val, "evaluation shard");
  const auto ckpt = cfg.vocab.empty() ? load_checkpoint(cfg.checkpoint)
                                      : load_checkpoint(cfg.checkpoint, load_vocabulary(cfg.vocab));
  const auto records = read_shard(cfg.val);
  const auto reports = evaluate_checkpoint(ckpt, records, cfg.gap_k, cfg.exec);

  const auto prefix = or_default(cfg.out, "eval").string();
  std::ofstream txt(prefix + ".txt"), json(prefix + ".json");
  txt << report_text(reports);
  json << report_json(reports);
  if (!txt || !json) throw DataError("cannot write report files with prefix '" + prefix + "'");

  const auto& head = reports.back();
  log << "layer " << head.layer << ": mAP " << fmt6(head.map) << "  PERR " << fmt6(head.perr) << "  Hit@1 "
      << fmt6(head.hit_at_1) << "  gAP " << fmt6(head.gap) << '\n';
  return reports;
}

void cmd_predict(const RunConfig& cfg, std::ostream& log) {
  require(cfg.checkpoint, "checkpoint");
  require(cfg.val, "input shard");
  const auto ckpt = load_checkpoint(cfg.checkpoint);
  const auto records = read_shard(cfg.val);
  const auto preds = predict_top_k(ckpt, records, cfg.top_k, cfg.exec);
  const auto out = or_default(cfg.out, "predictions.tsv");
  std::ofstream f(out);
  f << "video\tlayer\trank\tlabel\tprobability\n";
  char buf[40];
  for (const auto& p : preds) {
    std::snprintf(buf, sizeof(buf), "%.9g", p.probability);
    f << p.video << '\t' << p.layer << '\t' << p.rank << '\t' << p.label << '\t' << buf << '\n';
  }
  if (!f) throw DataError("cannot write predictions to '" + out.string() + "'");
  log << "wrote top-" << cfg.top_k << " predictions for " << records.size() << " videos to " << out.string() << '\n';
}

}  // namespace hli
