// hlinfer: synthesize data, fit normalizers, train, evaluate and predict.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "hli/error.hpp"
#include "hli/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Flags {
  std::string config;
  std::optional<std::string> model, features, norm, lr, iters, batch_size, seed, out, top_k, vocab, train, val,
      checkpoint, resume, normalizer, exec;
  std::optional<bool> l2;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key = value config file; flags override it");
  cmd->add_option("--model", f.model, "binn | logreg");
  cmd->add_option("--features", f.features, "rgb | rgb+audio");
  cmd->add_option("--norm", f.norm, "znorm | pca");
  cmd->add_flag("--l2,!--no-l2", f.l2, "L2-normalize after z-norm / whitening");
  cmd->add_option("--lr", f.lr, "base learning rate");
  cmd->add_option("--iters", f.iters, "training iterations");
  cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out", f.out, "output path (or prefix for evaluate)");
  cmd->add_option("--top-k", f.top_k, "labels per layer for predict");
  cmd->add_option("--vocab", f.vocab, "vocabulary file");
  cmd->add_option("--train", f.train, "training shard");
  cmd->add_option("--val,--shard", f.val, "evaluation / prediction shard");
  cmd->add_option("--checkpoint", f.checkpoint, "model checkpoint");
  cmd->add_option("--resume", f.resume, "checkpoint to resume training from");
  cmd->add_option("--normalizer", f.normalizer, "normalizer written by fit-norm");
  cmd->add_option("--exec", f.exec, "serial | parallel");
}

hli::RunConfig resolve(const Flags& f) {
  hli::RunConfig cfg;
  if (!f.config.empty()) cfg.apply(hli::load_key_values(f.config));
  auto set = [&](const char* key, const std::optional<std::string>& v) {
    if (v) cfg.set(key, *v);
  };
  set("model", f.model);
  set("features", f.features);
  set("norm", f.norm);
  set("lr", f.lr);
  set("iters", f.iters);
  set("batch_size", f.batch_size);
  set("seed", f.seed);
  set("out", f.out);
  set("top_k", f.top_k);
  set("vocab", f.vocab);
  set("train", f.train);
  set("val", f.val);
  set("checkpoint", f.checkpoint);
  set("resume", f.resume);
  set("normalizer", f.normalizer);
  set("exec", f.exec);
  if (f.l2) cfg.l2 = *f.l2;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical label inference for video classification"};
  app.require_subcommand(1);

  Flags flags;
  std::string synth_config, synth_out = "synth";
  std::optional<std::string> synth_seed;
  auto* synth = app.add_subcommand("synth", "generate a synthetic hierarchical dataset");
  synth->add_option("--config", synth_config, "key = value synth config");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--seed", synth_seed, "random seed");

  auto* fit_norm = app.add_subcommand("fit-norm", "fit z-norm or PCA whitening on the training shard");
  auto* train = app.add_subcommand("train", "train BINN or the logistic-regression baseline");
  auto* evaluate = app.add_subcommand("evaluate", "compute mAP, PERR, Hit@1 and gAP");
  auto* predict = app.add_subcommand("predict", "write top-k labels per video and layer");
  for (auto* cmd : {fit_norm, train, evaluate, predict}) add_run_flags(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) {
      hli::KeyValues kv;
      if (!synth_config.empty()) kv = hli::load_key_values(synth_config);
      if (synth_seed) kv["seed"] = *synth_seed;
      hli::cmd_synth(hli::synth_config_from(kv), synth_out, std::cout);
    } else if (fit_norm->parsed()) {
      hli::cmd_fit_norm(resolve(flags), std::cout);
    } else if (train->parsed()) {
      hli::cmd_train(resolve(flags), std::cout);
    } else if (evaluate->parsed()) {
      hli::cmd_evaluate(resolve(flags), std::cout);
    } else if (predict->parsed()) {
      hli::cmd_predict(resolve(flags), std::cout);
    }
  } catch (const hli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const hli::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const hli::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
