#pragma once

// Reference oracles and the acceptance criteria built on them. The oracles
// use plain loops over Eigen storage and never touch the autograd tape.

#include "larson/pipeline.hpp"
#include "larson/synthetic.hpp"

#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace larson::checks {

using ag::Matrix;

// ---- oracles -------------------------------------------------------------

// Adaptive-thresholding loss with raw exponentials, no max shift. Column 0 is
// TH; positives are columns.
double naive_atl(const std::vector<double>& logits, const std::set<int>& positives);

// One attention layer with explicit neighbour loops.
Matrix naive_gat_layer(const Matrix& h, const std::vector<syntax::Edge>& edges, int nodes, const Matrix& w1, const Matrix& w2,
                       const Matrix& t, double slope);

struct NaiveAttention {
  Matrix beta;   // P x B
  Matrix fused;  // P x d
};
NaiveAttention naive_dedicated_attention(const Matrix& queries, const Matrix& memory, const Matrix& w, const Matrix& w_b1,
                                         const Matrix& w_b2, const Matrix& w_m);

struct NaiveTreeState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};
// Sequential recurrence along a unary chain: inputs[0] is the leaf, inputs[k]
// the k-th ancestor. Returns states bottom-up.
std::vector<NaiveTreeState> chain_oracle(const std::vector<Eigen::VectorXd>& inputs, const subsentence::TreeLstmParams& p);

// ---- fixtures ------------------------------------------------------------

// Two sentences, four entities, three facts with evidence.
corpus::Document toy_document();
corpus::RelationVocab toy_relations();
// Small dimensions for finite-difference work.
ModelConfig tiny_config();
syntax::BatchedGraph random_graph(Rng& rng, int nodes, double density);

// ---- finite differences --------------------------------------------------

struct GradReport {
  double max_rel = 0.0;
  long checked = 0;
  std::string worst;
};

inline constexpr double kFdStep = 1e-6;
// Denominator floor of the relative error.
inline constexpr double kFdFloor = 1e-5;

// Compares tape gradients of loss with central differences on the listed
// parameters. fraction < 1 samples entries (at least one per parameter).
GradReport finite_difference(const ParamList& params, const std::function<ag::Var(ag::Tape&)>& loss, double fraction, Rng& rng);

// Per-module audits; each entry is (module name, report).
std::vector<std::pair<std::string, GradReport>> gradient_audits();

// ---- acceptance criteria ---------------------------------------------------

struct Result {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

Result oracle_equivalence();
Result batching_equivalence();
Result tree_lstm_correctness();
Result gradient_audit();
Result overfit();
Result ablation();
Result determinism();
Result metrics_oracle();

struct Criterion {
  std::string name;
  std::function<Result()> run;
  bool slow = false;
};
const std::vector<Criterion>& criteria();

// Runs all criteria (slow ones only when full is set).
std::vector<Result> run(bool full);
// One line per result; returns true when all passed.
bool report(const std::vector<Result>& results, std::ostream& out);

}  // namespace larson::checks
