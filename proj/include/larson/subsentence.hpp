#pragma once

// Subsentence modelling over constituency trees: a child-sum Tree-LSTM swept
// bottom-up across all trees of a document, subsentence extraction at kept
// nodes, and tree-level sentence embeddings from a second GAT stack.

#include "larson/dep_refinement.hpp"
#include "larson/syntax_graphs.hpp"

#include <vector>

namespace larson::subsentence {

// All sentence trees of one document under a single global node numbering
// (tree k occupies [offsets[k], offsets[k] + size)).
struct Forest {
  std::vector<syntax::ConstituencyTree> trees;
  std::vector<int> offsets;
  int total_nodes = 0;

  explicit Forest(std::vector<syntax::ConstituencyTree> ts);
  Forest() = default;

  // Global ids of every tree's kept nodes, tree by tree, pre-order within.
  std::vector<ag::Index> kept_nodes() const;
  // Parent <-> child edges plus self-loops, merged by offset.
  syntax::BatchedGraph graph() const;
  // Global node ids grouped by height, leaves first.
  std::vector<std::vector<int>> levels() const;
};

struct TreeLstmParams {
  ag::Parameter w_iou;  // 3h x d: input, output and candidate input weights
  ag::Parameter u_iou;  // 3h x h
  ag::Parameter b_iou;  // 1 x 3h
  ag::Parameter w_f;    // h x d
  ag::Parameter u_f;    // h x h, shared by every child position
  ag::Parameter b_f;    // 1 x h
};

struct TreeStates {
  ag::Var hidden;  // n x h, global node order
  ag::Var cell;    // n x h
};

class TreeLstm {
 public:
  TreeLstm() = default;
  TreeLstm(const std::string& name, int input_dim, int hidden_dim, Rng& rng);

  // node_inputs: one row per global node (zeros for internal nodes).
  TreeStates forward(ag::Tape& tape, const Forest& forest, const ag::Var& node_inputs);

  TreeLstmParams& params() { return params_; }
  ParamList parameters();
  int hidden_dim() const { return hidden_dim_; }

 private:
  TreeLstmParams params_;
  int hidden_dim_ = 0;
};

// Leaf rows are the mean of the leaf word's subword rows of the embedding
// table; internal rows are zero. leaf_tokens[k][w] lists vocabulary ids of
// word w of tree k.
ag::Var leaf_inputs(const Forest& forest, const ag::Var& embedding_table, const std::vector<std::vector<std::vector<int>>>& leaf_tokens);

// Hidden states of the kept nodes (B x h); B may be zero, in which case an
// invalid Var is returned.
ag::Var collect_subsentences(const TreeStates& states, const Forest& forest);

// GAT over tree edges, then the mean of each tree's node outputs (I x d_gat).
ag::Var constituency_sentence_embeddings(ag::Tape& tape, const Forest& forest, const TreeStates& states, dep::GatStack& gat);

}  // namespace larson::subsentence
