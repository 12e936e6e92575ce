#pragma once

// Optimisation, evaluation and checkpoints.

#include "larson/objectives.hpp"
#include "larson/pipeline.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace larson::training {

// Linear warmup to 1 over the first warmup steps, then linear decay to 0 at
// total. step counts completed optimizer updates.
double schedule_factor(long step, long total, long warmup);
long warmup_steps(long total, double ratio);

// Adam with decoupled weight decay; one learning rate per group.
class AdamW {
 public:
  struct Group {
    ParamList params;
    double lr = 0.0;
  };
  AdamW(std::vector<Group> groups, double weight_decay, double eps, double beta1 = 0.9, double beta2 = 0.999);
  // Applies one update using each parameter's grad, scaled by lr_factor.
  void step(double lr_factor);
  long steps() const { return t_; }

 private:
  struct Slot {
    ag::Parameter* p;
    double lr;
    ag::Matrix m;
    ag::Matrix v;
  };
  std::vector<Slot> slots_;
  double weight_decay_, eps_, beta1_, beta2_;
  long t_ = 0;
};

struct BatchLoss {
  double total = 0.0;
  double relation = 0.0;  // mean over pairs
  double evidence = 0.0;  // mean over positive pairs (0 when none)
  bool has_evidence = false;
};

// Forward + backward over a batch of documents. Gradients are left in the
// parameters (zeroed first). Throws naming the document on a non-finite loss.
BatchLoss accumulate_batch(pipeline::Model& model, const std::vector<const pipeline::PreparedDocument*>& batch, Rng* dropout_rng);

// Eval-mode predictions; evidence sentences are those with p > 0.5.
std::vector<objectives::PredictedFact> predict(pipeline::Model& model, const std::vector<pipeline::PreparedDocument>& docs,
                                               std::ostream* attention_dump = nullptr);

objectives::Metrics evaluate(pipeline::Model& model, const std::vector<pipeline::PreparedDocument>& docs, const corpus::Corpus& gold,
                             const objectives::TrainFactSet& train_facts, const corpus::RelationVocab& relations,
                             std::ostream* attention_dump = nullptr);

std::vector<pipeline::PreparedDocument> prepare_corpus(const corpus::Corpus& corpus, const pipeline::TokenVocab& vocab,
                                                       const ModelConfig& config);

struct StepLog {
  long step = 0;
  double loss = 0.0;
  double lr_factor = 0.0;
};

struct EpochLog {
  int epoch = 0;
  long step = 0;
  double dev_f1 = 0.0;
  double dev_evi_f1 = 0.0;
};

struct TrainResult {
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;
  double best_dev_f1 = -1.0;
  long best_step = 0;
  objectives::Metrics best_dev;
};

struct TrainOptions {
  // Checkpoint directory; empty keeps the best parameters in memory only.
  std::filesystem::path out_dir;
  // Evaluate on dev every this many epochs (the last epoch always runs).
  int eval_every = 1;
  // Restore the best-by-dev parameters into the model when training ends.
  bool restore_best = true;
  std::ostream* log = nullptr;
};

TrainResult train(pipeline::Model& model, const pipeline::TokenVocab& vocab, const corpus::Corpus& train_corpus,
                  const corpus::Corpus& dev_corpus, const corpus::RelationVocab& relations, const TrainOptions& options = {});

// ---- checkpoints ---------------------------------------------------------
// model.bin: parameter names, shapes and raw doubles.
// meta.json: config text and hash, relation labels, token vocabulary, dev F1.

void save_checkpoint(const std::filesystem::path& dir, pipeline::Model& model, const pipeline::TokenVocab& vocab, double dev_f1);

struct Checkpoint {
  ModelConfig config;
  pipeline::TokenVocab vocab;
  std::unique_ptr<pipeline::Model> model;
  double dev_f1 = 0.0;
};

// Throws when metadata is inconsistent with the stored config or parameters.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

std::vector<ag::Matrix> snapshot(pipeline::Model& model);
void restore(pipeline::Model& model, const std::vector<ag::Matrix>& values);

}  // namespace larson::training
