#pragma once

// Adaptive-thresholding relation loss, evidence cross entropy, the TH decision
// rule and benchmark-style metrics.

#include "larson/autograd.hpp"
#include "larson/corpus.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace larson::objectives {

// Logit column of the threshold class; relation id r lives in column r + 1.
inline constexpr int kThreshold = 0;
inline constexpr double kProbClamp = 1e-12;

// positives are logit columns (never kThreshold).
double atl_loss(std::span<const double> logits, std::span<const int> positives);
// d loss / d logits.
std::vector<double> atl_loss_grad(std::span<const double> logits, std::span<const int> positives);

// Summed binary cross entropy over sentences with clamped probabilities.
double evidence_loss(std::span<const double> probs, std::span<const int> bits);

// L_RE + eta * L_Evi; a missing evidence term (no positive pairs) is skipped.
double total_loss(double relation_loss, std::optional<double> evidence, double eta);

// Logit columns strictly above the threshold logit.
std::vector<int> predict_relations(std::span<const double> logits);

// Sum of atl_loss over rows of a P x C logits matrix.
ag::Var atl_loss(const ag::Var& logits, const std::vector<std::vector<int>>& positives);
// Sum of evidence_loss over rows; probs and bits are K x I.
ag::Var evidence_loss(const ag::Var& probs, const ag::Matrix& bits);
// Same loss taking the pre-sigmoid scores; the clamp becomes a bound on the
// logits and only affects the value, the gradient is sigma(x) - y throughout.
ag::Var evidence_loss_logits(const ag::Var& logits, const ag::Matrix& bits);

struct PredictedFact {
  std::string doc_id;
  int subject = 0;
  int object = 0;
  int relation = 0;  // relation id, not logit column
  std::vector<int> evidence;
};

// Facts seen in training, keyed by mention surface names as in the public
// benchmark scorer: (subject name, object name, relation label).
class TrainFactSet {
 public:
  TrainFactSet() = default;
  static TrainFactSet from_corpus(const corpus::Corpus& corpus, const corpus::RelationVocab& relations);
  static TrainFactSet load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  void insert(const std::string& subject, const std::string& object, const std::string& relation);
  // True when any mention-name pair of (s, o) carries the relation in training.
  bool contains(const corpus::Document& doc, int subject, int object, const std::string& relation) const;
  size_t size() const { return facts_.size(); }

 private:
  std::set<std::tuple<std::string, std::string, std::string>> facts_;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ign_precision = 0.0;
  double ign_f1 = 0.0;
  double intra_f1 = 0.0;
  double inter_f1 = 0.0;
  double evi_precision = 0.0;
  double evi_recall = 0.0;
  double evi_f1 = 0.0;
  long predicted = 0;
  long gold = 0;
  long correct = 0;
  long correct_in_train = 0;

  std::string to_json() const;
  std::string to_table() const;
};

// A fact is intra-sentence when some sentence holds a mention of both entities.
bool is_intra(const corpus::Document& doc, int subject, int object);

Metrics compute_metrics(std::span<const PredictedFact> predictions, const corpus::Corpus& gold, const TrainFactSet& train,
                        const corpus::RelationVocab& relations);

}  // namespace larson::objectives
