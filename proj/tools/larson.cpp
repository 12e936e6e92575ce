// Command-line front end: train, eval, synth, selftest.

#include "checks.hpp"
#include "larson/synthetic.hpp"
#include "larson/training.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace larson;

namespace {

const char* kSynthConfig =
    "encoder.dim = 64\n"
    "gat.dim = 64\n"
    "tree.dim = 64\n"
    "fusion.dim = 64\n"
    "fusion.dropout = 0.0\n"
    "optim.lr_encoder = 1e-3\n"
    "optim.lr_rest = 1e-3\n"
    "optim.batch_size = 4\n";

int run_train(const std::string& config_path, const std::string& train_dir, const std::string& dev_dir, const std::string& out_dir,
              std::optional<std::uint64_t> seed, int repeat) {
  ModelConfig cfg = ModelConfig::load(config_path);
  if (seed) cfg.seed = *seed;
  const corpus::RelationVocab relations(cfg.relations);
  const auto train = corpus::load_corpus(train_dir, relations);
  const auto dev = corpus::load_corpus(dev_dir, relations);
  const auto vocab = pipeline::TokenVocab::build(train, pipeline::default_tokenizer());
  double sum = 0.0;
  for (int r = 0; r < repeat; ++r) {
    ModelConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(r);
    pipeline::Model model(run_cfg, vocab.size());
    training::TrainOptions opts;
    opts.out_dir = repeat == 1 ? std::filesystem::path(out_dir) : std::filesystem::path(out_dir) / ("run_" + std::to_string(r));
    opts.log = &std::cerr;
    const auto result = training::train(model, vocab, train, dev, relations, opts);
    std::cout << "seed " << run_cfg.seed << " best_dev_f1 " << result.best_dev_f1 << " at step " << result.best_step << "\n";
    sum += result.best_dev_f1;
  }
  if (repeat > 1) std::cout << "mean_best_dev_f1 " << sum / repeat << "\n";
  return 0;
}

int run_eval(const std::string& ckpt_dir, const std::string& data_dir, const std::string& train_facts_path,
             const std::string& config_path, const std::string& dump_path) {
  training::Checkpoint ckpt = training::load_checkpoint(ckpt_dir);
  if (!config_path.empty() && ModelConfig::load(config_path).hash() != ckpt.config.hash())
    throw Error("config " + config_path + " does not match the checkpoint");
  const corpus::RelationVocab relations(ckpt.config.relations);
  const auto data = corpus::load_corpus(data_dir, relations);
  const auto facts = objectives::TrainFactSet::load(train_facts_path);
  const auto docs = training::prepare_corpus(data, ckpt.vocab, ckpt.config);
  std::ofstream dump;
  if (!dump_path.empty()) {
    dump.open(dump_path);
    if (!dump) throw Error("cannot write " + dump_path);
  }
  const auto m = training::evaluate(*ckpt.model, docs, data, facts, relations, dump_path.empty() ? nullptr : &dump);
  std::cerr << m.to_table();
  std::cout << m.to_json() << "\n";
  return 0;
}

int run_synth(const std::string& kind, const std::string& out_dir, std::uint64_t seed, int documents) {
  const std::filesystem::path out(out_dir);
  synthetic::SyntheticCorpus c;
  corpus::Corpus train, dev;
  if (kind == "overfit") {
    c = synthetic::overfit_corpus(seed, documents > 0 ? documents : 20);
    train = dev = c.docs;
  } else if (kind == "cue") {
    c = synthetic::cue_corpus(seed, documents > 0 ? documents : 200);
    const auto cut = c.docs.begin() + static_cast<long>(c.docs.size() * 4 / 5);
    train.assign(c.docs.begin(), cut);
    dev.assign(cut, c.docs.end());
  } else {
    throw Error("unknown synthetic corpus kind '" + kind + "'");
  }
  corpus::save_corpus(train, c.relations, out / "train");
  corpus::save_corpus(dev, c.relations, out / "dev");
  std::ofstream cfg(out / "config.txt");
  cfg << kSynthConfig << "relations = ";
  for (int r = 0; r < c.relations.size(); ++r) cfg << (r ? "," : "") << c.relations.label(r);
  cfg << "\n";
  std::cout << "wrote " << train.size() << " train and " << dev.size() << " dev documents to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"larson: document-level relation extraction"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a model and keep the best dev checkpoint");
  std::string config_path, train_dir, dev_dir, out_dir;
  std::optional<std::uint64_t> seed;
  int repeat = 1;
  train->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  train->add_option("--train", train_dir)->required()->check(CLI::ExistingDirectory);
  train->add_option("--dev", dev_dir)->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", out_dir)->required();
  train->add_option("--seed", seed, "overrides the config seed");
  train->add_option("--repeat", repeat, "runs with seeds seed, seed+1, ...")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a corpus");
  std::string ckpt_dir, data_dir, facts_path, eval_config, dump_path;
  eval->add_option("--checkpoint", ckpt_dir)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--train-facts", facts_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--config", eval_config, "must match the checkpoint config");
  eval->add_option("--dump-attention", dump_path, "JSON lines of per-pair fusion weights");

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  std::string kind = "overfit", synth_out;
  std::uint64_t synth_seed = 7;
  int documents = 0;
  synth->add_option("--kind", kind)->check(CLI::IsMember({"overfit", "cue"}));
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--seed", synth_seed);
  synth->add_option("--documents", documents);

  auto* selftest = app.add_subcommand("selftest", "run the oracle and gradient suites");
  bool full = false;
  selftest->add_flag("--full", full, "also run the overfit and ablation trainings");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return run_train(config_path, train_dir, dev_dir, out_dir, seed, repeat);
    if (*eval) return run_eval(ckpt_dir, data_dir, facts_path, eval_config, dump_path);
    if (*synth) return run_synth(kind, synth_out, synth_seed, documents);
    if (*selftest) return checks::report(checks::run(full), std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
