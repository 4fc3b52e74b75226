#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hli/pipeline.hpp"

namespace fs = std::filesystem;

namespace hli {
namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::path(::testing::TempDir()) / "hli_cli");
    fs::remove_all(*dir_);
    fs::create_directories(*dir_);
    std::ofstream(*dir_ / "synth.cfg") << "verticals = 5\nentities = 30\ndim = 16\n"
                                          "train_videos = 600\nval_videos = 200\nseed = 4\n";
    ASSERT_EQ(run("synth --config " + path("synth.cfg") + " --out " + path("data")), 0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static std::string path(const std::string& name) { return (*dir_ / name).string(); }

  // Exit status of the CLI; stdout goes to `last.out`, stderr to `last.err`.
  static int run(const std::string& args) {
    const std::string cmd = std::string(HLINFER_PATH) + " " + args + " > " + path("last.out") + " 2> " +
                            path("last.err");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string data_flags() {
    return " --vocab " + path("data/vocab.txt") + " --train " + path("data/train.hlvs");
  }

  static fs::path* dir_;
};

fs::path* CliTest::dir_ = nullptr;

TEST_F(CliTest, SynthWritesFilesAndStats) {
  EXPECT_TRUE(fs::exists(path("data/vocab.txt")));
  EXPECT_TRUE(fs::exists(path("data/train.hlvs")));
  EXPECT_TRUE(fs::exists(path("data/val.hlvs")));
  ASSERT_EQ(run("synth --config " + path("synth.cfg") + " --out " + path("data2")), 0);
  const auto out = slurp(path("last.out"));
  const auto at = out.find("entities/video (train): ");
  ASSERT_NE(at, std::string::npos) << out;
  EXPECT_NEAR(std::stod(out.substr(at + 24)), 1.8, 0.05 * 1.8 * 3);  // 600 videos: loose
  EXPECT_EQ(slurp(path("data/train.hlvs")), slurp(path("data2/train.hlvs")));
  EXPECT_EQ(slurp(path("data/vocab.txt")), slurp(path("data2/vocab.txt")));
}

TEST_F(CliTest, TrainEvaluatePredict) {
  ASSERT_EQ(run("train" + data_flags() + " --iters 300 --batch-size 32 --out " + path("m.hlvc")), 0)
      << slurp(path("last.err"));
  const auto log = slurp(path("m.hlvc.log"));
  EXPECT_EQ(log.rfind("iter 0 loss", 0), 0u);
  EXPECT_NE(log.find("iter 100 loss"), std::string::npos);
  EXPECT_NE(log.find("iter 299 loss"), std::string::npos);

  ASSERT_EQ(run("evaluate --checkpoint " + path("m.hlvc") + " --val " + path("data/val.hlvs") + " --out " +
                path("ev")),
            0)
      << slurp(path("last.err"));
  EXPECT_NE(slurp(path("last.out")).find("layer entities: mAP"), std::string::npos);
  const auto report = parse_report_text(slurp(path("ev.txt")));
  EXPECT_TRUE(report.contains("entities.hit_at_1"));
  EXPECT_TRUE(report.contains("verticals.gap"));

  ASSERT_EQ(run("predict --checkpoint " + path("m.hlvc") + " --shard " + path("data/val.hlvs") +
                " --top-k 1 --out " + path("p.tsv")),
            0);
  std::ifstream tsv(path("p.tsv"));
  std::string line;
  std::getline(tsv, line);
  EXPECT_EQ(line, "video\tlayer\trank\tlabel\tprobability");
  std::size_t rows = 0;
  while (std::getline(tsv, line)) ++rows;
  EXPECT_EQ(rows, 200u * 2);
}

TEST_F(CliTest, SameSeedGivesIdenticalCheckpoints) {
  for (const char* name : {"a.hlvc", "b.hlvc"})
    ASSERT_EQ(run("train" + data_flags() + " --model logreg --iters 50 --batch-size 16 --out " + path(name)), 0);
  EXPECT_EQ(slurp(path("a.hlvc")), slurp(path("b.hlvc")));
  EXPECT_EQ(slurp(path("a.hlvc.log")), slurp(path("b.hlvc.log")));
  EXPECT_NE(slurp(path("a.hlvc.log")).find("lr 0.01\n"), std::string::npos);
}

TEST_F(CliTest, FitNormThenTrain) {
  ASSERT_EQ(run("fit-norm" + data_flags() + " --norm pca --out " + path("norm.hlvc")), 0)
      << slurp(path("last.err"));
  ASSERT_EQ(run("train" + data_flags() + " --normalizer " + path("norm.hlvc") +
                " --iters 5 --batch-size 8 --out " + path("n.hlvc")),
            0)
      << slurp(path("last.err"));
  const auto ck = load_checkpoint(path("n.hlvc"));
  EXPECT_EQ(ck.normalizer->kind, NormKind::kPcaWhitening);
}

TEST_F(CliTest, ConfigFileAndFlagOverride) {
  std::ofstream(path("run.cfg")) << "model = logreg\nlr = 0.02\niters = 3\nbatch_size = 8\n";
  ASSERT_EQ(run("train --config " + path("run.cfg") + data_flags() + " --lr 0.03 --out " + path("c.hlvc")), 0);
  const auto ck = load_checkpoint(path("c.hlvc"));
  EXPECT_EQ(ck.model, "logreg");
  EXPECT_EQ(ck.optimizer->config.base_lr, 0.03);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("train --bogus"), 1);
  EXPECT_EQ(run("train" + data_flags() + " --model mlp"), 1);
  EXPECT_EQ(run("train" + data_flags() + " --batch-size 0"), 1);
  EXPECT_EQ(run("train --vocab " + path("data/vocab.txt")), 1);
  // Paths are checked before any work starts, so a missing file is a usage error.
  EXPECT_EQ(run("train --vocab " + path("nope.txt") + " --train " + path("data/train.hlvs")), 1);

  std::ofstream(path("bad_vocab.txt")) << "[layer v]\nA\n[layer e]\na1\n[edges]\na1: Z\n";
  EXPECT_EQ(run("train --vocab " + path("bad_vocab.txt") + " --train " + path("data/train.hlvs")), 2);
  std::ofstream(path("junk.hlvs")) << "not a shard";
  EXPECT_EQ(run("train --vocab " + path("data/vocab.txt") + " --train " + path("junk.hlvs")), 2);
  EXPECT_NE(slurp(path("last.err")).find("data error"), std::string::npos);

  // A huge learning rate on unnormalized inputs overflows the activations.
  EXPECT_EQ(run("train" + data_flags() + " --lr 1e300 --iters 20 --batch-size 8 --no-l2 --out " + path("x.hlvc")),
            3)
      << slurp(path("last.err"));
}

// A logistic-regression checkpoint whose weights are the normalized
// prototypes separates noiseless single-entity videos perfectly.
TEST_F(CliTest, PerfectClassifierScoresOne) {
  SynthConfig c;
  c.verticals = 4;
  c.entities = 12;
  c.dim = 24;
  c.mean_labels = 1.0;
  c.noise = 0.0;
  c.train_videos = 300;
  c.val_videos = 100;
  c.seed = 8;
  const auto ds = synth_generate(c);
  write_shard(path("clean_val.hlvs"), ds.val);

  TrainingCheckpoint ck;
  ck.model = "logreg";
  ck.hierarchy = ds.hierarchy;
  ck.config = RunConfig{}.to_key_values();
  ck.normalizer = fit_normalizer(raw_features(ds.train, FeatureSet::kRgb), NormKind::kZNorm, true,
                                 kDefaultNormEpsilon, Exec::kSerial);
  std::vector<Vector> unit(c.entities);
  for (std::size_t e = 0; e < c.entities; ++e) unit[e] = apply_normalizer(*ck.normalizer, ds.prototypes.row(e));
  double worst_cross = -1.0;
  for (std::size_t a = 0; a < c.entities; ++a)
    for (std::size_t b = 0; b < c.entities; ++b)
      if (a != b) {
        double dot = 0.0;
        for (std::size_t d = 0; d < c.dim; ++d) dot += unit[a][d] * unit[b][d];
        worst_cross = std::max(worst_cross, dot);
      }
  ASSERT_LT(worst_cross, 0.99);
  const double scale = 200.0;
  ck.logreg = LogRegParams::zeros(c.entities, c.dim);
  for (std::size_t e = 0; e < c.entities; ++e) {
    for (std::size_t d = 0; d < c.dim; ++d) ck.logreg->weights(e, d) = scale * unit[e][d];
    ck.logreg->weights(e, c.dim) = -scale * (1.0 + worst_cross) / 2.0;
  }
  save_checkpoint(path("perfect.hlvc"), ck);

  ASSERT_EQ(run("evaluate --checkpoint " + path("perfect.hlvc") + " --val " + path("clean_val.hlvs") + " --out " +
                path("perfect")),
            0)
      << slurp(path("last.err"));
  const auto kv = parse_report_text(slurp(path("perfect.txt")));
  for (const char* layer : {"verticals", "entities"})
    for (const char* m : {"map", "perr", "hit_at_1", "gap"})
      EXPECT_NEAR(std::stod(kv.at(std::string(layer) + "." + m)), 1.0, 1e-9) << layer << "." << m;
}

}  // namespace
}  // namespace hli
