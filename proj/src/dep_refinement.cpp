#include "larson/dep_refinement.hpp"

#include <array>

namespace larson::dep {

ag::Var gat_layer(const ag::Var& nodes, const syntax::BatchedGraph& graph, const ag::Var& w1, const ag::Var& w2, const ag::Var& t,
                  double slope) {
  if (nodes.rows() != graph.total_nodes) throw Error("gat_layer: node state rows differ from graph size");
  std::vector<char> has_in(static_cast<size_t>(graph.total_nodes), 0);
  std::vector<ag::Index> src;
  std::vector<ag::Index> dst;
  src.reserve(graph.edges.size());
  dst.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    if (e.src < 0 || e.src >= graph.total_nodes || e.dst < 0 || e.dst >= graph.total_nodes)
      throw Error("gat_layer: edge out of range");
    has_in[static_cast<size_t>(e.dst)] = 1;
    src.push_back(e.src);
    dst.push_back(e.dst);
  }
  for (int i = 0; i < graph.total_nodes; ++i)
    if (!has_in[static_cast<size_t>(i)]) throw Error("gat_layer: node " + std::to_string(i) + " has no in-neighbours");

  const ag::Var own = ag::matmul_nt(nodes, w1);    // n x d1
  const ag::Var other = ag::matmul_nt(nodes, w2);  // n x d1
  const ag::Var msg = ag::gather_rows(other, src);
  const ag::Var pre = ag::leaky_relu(ag::add(ag::gather_rows(own, dst), msg), slope);
  const ag::Var scores = ag::matmul(pre, t);  // E x 1
  const ag::Var alpha = ag::segment_softmax(scores, dst, graph.total_nodes);
  return ag::segment_sum(ag::mul_rows(msg, alpha), dst, graph.total_nodes);
}

GatStack::GatStack(const std::string& name, int in_dim, int out_dim, int layers, double slope, Rng& rng)
    : slope_(slope), out_dim_(out_dim) {
  if (layers < 1) throw Error("GAT needs at least one layer");
  for (int l = 0; l < layers; ++l) {
    const int din = l == 0 ? in_dim : out_dim;
    const std::string p = name + ".layer" + std::to_string(l) + ".";
    layers_.push_back(GatLayerParams{ag::Parameter(p + "w1", xavier_uniform(out_dim, din, rng)),
                                     ag::Parameter(p + "w2", xavier_uniform(out_dim, din, rng)),
                                     ag::Parameter(p + "t", xavier_uniform(out_dim, 1, rng))});
  }
}

ag::Var GatStack::forward(ag::Tape& tape, const ag::Var& nodes, const syntax::BatchedGraph& graph) {
  ag::Var x = nodes;
  for (size_t l = 0; l < layers_.size(); ++l) {
    auto& p = layers_[l];
    x = gat_layer(x, graph, tape.parameter(p.w1), tape.parameter(p.w2), tape.parameter(p.t), slope_);
    if (l + 1 < layers_.size()) x = ag::leaky_relu(x, slope_);
  }
  return x;
}

ParamList GatStack::parameters() {
  ParamList out;
  for (auto& l : layers_) {
    out.push_back(&l.w1);
    out.push_back(&l.w2);
    out.push_back(&l.t);
  }
  return out;
}

ag::Var sentence_pool(const ag::Var& rows, std::span<const corpus::TokenSpan> sentences) {
  std::vector<ag::Var> pooled;
  pooled.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<ag::Index> idx;
    for (int t = s.begin; t < s.end; ++t) idx.push_back(t);
    pooled.push_back(ag::logsumexp_rows(rows, idx));
  }
  return ag::concat_rows(pooled);
}

RefinedText refine_with_dependency(ag::Tape& tape, const ag::Var& hidden, const syntax::BatchedGraph& graph, GatStack& gat,
                                   const ag::Var& w_z, std::span<const corpus::TokenSpan> sentences) {
  RefinedText out;
  out.dep_hidden = gat.forward(tape, hidden, graph);
  out.complemented = ag::add(hidden, ag::matmul(out.dep_hidden, w_z));
  out.sentence_embeds = sentence_pool(out.complemented, sentences);
  return out;
}

RefinedText skip_dependency(const ag::Var& hidden, std::span<const corpus::TokenSpan> sentences) {
  RefinedText out;
  out.complemented = hidden;
  out.sentence_embeds = sentence_pool(hidden, sentences);
  return out;
}

ag::Var pool_entity(const ag::Var& complemented, std::span<const ag::Index> marker_rows) {
  if (marker_rows.empty()) throw Error("cannot pool an entity with zero mentions");
  return ag::logsumexp_rows(complemented, marker_rows);
}

ag::Var localized_contexts(const ag::Var& complemented, const ag::Var& attention,
                           const std::vector<std::vector<ag::Index>>& entity_rows, std::span<const std::pair<int, int>> pairs,
                           double eps) {
  if (pairs.empty()) throw Error("localized_contexts: no pairs");
  std::vector<ag::Var> per_entity;
  per_entity.reserve(entity_rows.size());
  for (const auto& rows : entity_rows) per_entity.push_back(ag::mean_rows(attention, rows));
  const ag::Var ent_att = ag::concat_rows(per_entity);  // N x T
  std::vector<ag::Index> subj;
  std::vector<ag::Index> obj;
  for (const auto& [s, o] : pairs) {
    subj.push_back(s);
    obj.push_back(o);
  }
  const ag::Var joint = ag::mul(ag::gather_rows(ent_att, subj), ag::gather_rows(ent_att, obj));
  return ag::matmul(ag::normalize_rows(joint, eps), complemented);
}

ag::Var localized_context(const ag::Var& complemented, const ag::Var& attention, std::span<const ag::Index> subject_rows,
                          std::span<const ag::Index> object_rows, double eps) {
  std::vector<std::vector<ag::Index>> rows{{subject_rows.begin(), subject_rows.end()}, {object_rows.begin(), object_rows.end()}};
  const std::array<std::pair<int, int>, 1> pair{{{0, 1}}};
  return localized_contexts(complemented, attention, rows, pair, eps);
}

}  // namespace larson::dep
