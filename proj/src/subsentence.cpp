#include "larson/subsentence.hpp"

#include <algorithm>

namespace larson::subsentence {

Forest::Forest(std::vector<syntax::ConstituencyTree> ts) : trees(std::move(ts)) {
  for (const auto& t : trees) {
    offsets.push_back(total_nodes);
    total_nodes += static_cast<int>(t.nodes.size());
  }
}

std::vector<ag::Index> Forest::kept_nodes() const {
  std::vector<ag::Index> out;
  for (size_t k = 0; k < trees.size(); ++k)
    for (int n : trees[k].kept_nodes) out.push_back(offsets[k] + n);
  return out;
}

syntax::BatchedGraph Forest::graph() const {
  std::vector<syntax::DependencyGraph> gs;
  gs.reserve(trees.size());
  for (const auto& t : trees) gs.push_back(syntax::tree_graph(t));
  return syntax::merge_graphs(gs);
}

std::vector<std::vector<int>> Forest::levels() const {
  std::vector<std::vector<int>> out;
  for (size_t k = 0; k < trees.size(); ++k) {
    const auto lv = syntax::tree_levels(trees[k]);
    if (out.size() < lv.size()) out.resize(lv.size());
    for (size_t h = 0; h < lv.size(); ++h)
      for (int n : lv[h]) out[h].push_back(offsets[k] + n);
  }
  return out;
}

TreeLstm::TreeLstm(const std::string& name, int input_dim, int hidden_dim, Rng& rng) : hidden_dim_(hidden_dim) {
  const int h = hidden_dim;
  params_.w_iou = ag::Parameter(name + ".w_iou", xavier_uniform(3 * h, input_dim, rng));
  params_.u_iou = ag::Parameter(name + ".u_iou", xavier_uniform(3 * h, h, rng));
  params_.b_iou = ag::Parameter(name + ".b_iou", ag::Matrix::Zero(1, 3 * h));
  params_.w_f = ag::Parameter(name + ".w_f", xavier_uniform(h, input_dim, rng));
  params_.u_f = ag::Parameter(name + ".u_f", xavier_uniform(h, h, rng));
  params_.b_f = ag::Parameter(name + ".b_f", ag::Matrix::Zero(1, h));
}

ParamList TreeLstm::parameters() {
  return {&params_.w_iou, &params_.u_iou, &params_.b_iou, &params_.w_f, &params_.u_f, &params_.b_f};
}

TreeStates TreeLstm::forward(ag::Tape& tape, const Forest& forest, const ag::Var& node_inputs) {
  if (node_inputs.rows() != forest.total_nodes) throw Error("tree_lstm: input rows differ from forest size");
  const int h = hidden_dim_;
  const ag::Var w_iou = tape.parameter(params_.w_iou);
  const ag::Var u_iou = tape.parameter(params_.u_iou);
  const ag::Var b_iou = tape.parameter(params_.b_iou);
  const ag::Var w_f = tape.parameter(params_.w_f);
  const ag::Var u_f = tape.parameter(params_.u_f);
  const ag::Var b_f = tape.parameter(params_.b_f);

  // (level, row) of every finished node
  std::vector<std::pair<int, ag::Index>> where(static_cast<size_t>(forest.total_nodes), {-1, 0});
  std::vector<ag::Var> hidden_levels;
  std::vector<ag::Var> cell_levels;

  const auto levels = forest.levels();
  for (size_t lv = 0; lv < levels.size(); ++lv) {
    const auto& nodes = levels[lv];
    std::vector<ag::Index> ids(nodes.begin(), nodes.end());
    const auto k = static_cast<ag::Index>(nodes.size());
    const ag::Var x = ag::gather_rows(node_inputs, ids);

    std::vector<std::pair<int, ag::Index>> child_refs;
    std::vector<ag::Index> child_parent;
    for (ag::Index r = 0; r < k; ++r) {
      const int g = nodes[static_cast<size_t>(r)];
      size_t tree = static_cast<size_t>(std::upper_bound(forest.offsets.begin(), forest.offsets.end(), g) - forest.offsets.begin() - 1);
      const int local = g - forest.offsets[tree];
      // children summed in node-id order
      std::vector<int> children = forest.trees[tree].nodes[static_cast<size_t>(local)].children;
      std::sort(children.begin(), children.end());
      for (int c : children) {
        const auto& pos = where[static_cast<size_t>(forest.offsets[tree] + c)];
        if (pos.first < 0) throw Error("tree_lstm: child visited after its parent");
        child_refs.push_back(pos);
        child_parent.push_back(r);
      }
    }

    ag::Var pre = ag::add_row(ag::matmul_nt(x, w_iou), b_iou);
    ag::Var child_hidden;
    if (!child_refs.empty()) {
      child_hidden = ag::gather_from(hidden_levels, child_refs);
      pre = ag::add(pre, ag::matmul_nt(ag::segment_sum(child_hidden, child_parent, k), u_iou));
    }
    const ag::Var in_gate = ag::sigmoid(ag::slice_cols(pre, 0, h));
    const ag::Var out_gate = ag::sigmoid(ag::slice_cols(pre, h, h));
    const ag::Var candidate = ag::tanh(ag::slice_cols(pre, 2 * h, h));
    ag::Var cell = ag::mul(in_gate, candidate);
    if (!child_refs.empty()) {
      const ag::Var parent_x = ag::gather_rows(ag::matmul_nt(x, w_f), child_parent);
      const ag::Var forget = ag::sigmoid(ag::add_row(ag::add(parent_x, ag::matmul_nt(child_hidden, u_f)), b_f));
      const ag::Var kept = ag::mul(forget, ag::gather_from(cell_levels, child_refs));
      cell = ag::add(cell, ag::segment_sum(kept, child_parent, k));
    }
    const ag::Var hid = ag::mul(out_gate, ag::tanh(cell));
    for (ag::Index r = 0; r < k; ++r) where[static_cast<size_t>(nodes[static_cast<size_t>(r)])] = {static_cast<int>(lv), r};
    hidden_levels.push_back(hid);
    cell_levels.push_back(cell);
  }

  for (const auto& w : where)
    if (w.first < 0) throw Error("tree_lstm: node never computed");
  return {ag::gather_from(hidden_levels, where), ag::gather_from(cell_levels, where)};
}

ag::Var leaf_inputs(const Forest& forest, const ag::Var& embedding_table, const std::vector<std::vector<std::vector<int>>>& leaf_tokens) {
  if (leaf_tokens.size() != forest.trees.size()) throw Error("leaf_inputs: token lists differ from tree count");
  std::vector<ag::Index> ids;
  std::vector<ag::Index> node_of;
  std::vector<double> weights;
  for (size_t k = 0; k < forest.trees.size(); ++k) {
    const auto& tree = forest.trees[k];
    for (size_t n = 0; n < tree.nodes.size(); ++n) {
      const int w = tree.leaf_word[n];
      if (w < 0) continue;
      const auto& toks = leaf_tokens[k].at(static_cast<size_t>(w));
      if (toks.empty()) throw Error("leaf word without subword tokens");
      for (int t : toks) {
        ids.push_back(t);
        node_of.push_back(forest.offsets[k] + static_cast<int>(n));
        weights.push_back(1.0 / static_cast<double>(toks.size()));
      }
    }
  }
  ag::Tape& tape = embedding_table.tape();
  ag::Matrix wcol = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<ag::Index>(weights.size()));
  const ag::Var rows = ag::mul_rows(ag::gather_rows(embedding_table, ids), tape.constant(wcol));
  return ag::segment_sum(rows, node_of, forest.total_nodes);
}

ag::Var collect_subsentences(const TreeStates& states, const Forest& forest) {
  const auto kept = forest.kept_nodes();
  if (kept.empty()) return {};
  return ag::gather_rows(states.hidden, kept);
}

ag::Var constituency_sentence_embeddings(ag::Tape& tape, const Forest& forest, const TreeStates& states, dep::GatStack& gat) {
  const ag::Var out = gat.forward(tape, states.hidden, forest.graph());
  std::vector<ag::Var> sentences;
  for (size_t k = 0; k < forest.trees.size(); ++k) {
    std::vector<ag::Index> rows;
    for (size_t n = 0; n < forest.trees[k].nodes.size(); ++n) rows.push_back(forest.offsets[k] + static_cast<int>(n));
    sentences.push_back(ag::mean_rows(out, rows));
  }
  return ag::concat_rows(sentences);
}

}  // namespace larson::subsentence
