#pragma once

// Dependency-syntax refinement: stacked graph attention over token graphs,
// residual complement of H, and logsumexp / attention-weighted pooling.

#include "larson/autograd.hpp"
#include "larson/corpus.hpp"
#include "larson/init.hpp"
#include "larson/syntax_graphs.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace larson::dep {

// One attention layer over in-neighbourhoods:
//   r_j   = t^T LeakyReLU(W1 h_i + W2 h_j),  j in N(i)
//   alpha = softmax(r)
//   out_i = sum_j alpha_j W2 h_j
// w1, w2 are d1 x d_in, t is d1 x 1.
ag::Var gat_layer(const ag::Var& nodes, const syntax::BatchedGraph& graph, const ag::Var& w1, const ag::Var& w2, const ag::Var& t,
                  double slope);

struct GatLayerParams {
  ag::Parameter w1;
  ag::Parameter w2;
  ag::Parameter t;
};

class GatStack {
 public:
  GatStack() = default;
  GatStack(const std::string& name, int in_dim, int out_dim, int layers, double slope, Rng& rng);

  // Leaky rectifier between layers, none after the last.
  ag::Var forward(ag::Tape& tape, const ag::Var& nodes, const syntax::BatchedGraph& graph);

  ParamList parameters();
  std::vector<GatLayerParams>& layers() { return layers_; }
  int out_dim() const { return out_dim_; }

 private:
  std::vector<GatLayerParams> layers_;
  double slope_ = 0.2;
  int out_dim_ = 0;
};

struct RefinedText {
  ag::Var dep_hidden;       // H_dep, T x d1
  ag::Var complemented;     // H_c = H + H_dep W_z, T x d
  ag::Var sentence_embeds;  // S_dep, I x d
};

// Runs the stack, applies the residual complement (w_z is d1 x d) and pools
// each sentence span by logsumexp over H_c rows.
RefinedText refine_with_dependency(ag::Tape& tape, const ag::Var& hidden, const syntax::BatchedGraph& graph, GatStack& gat,
                                   const ag::Var& w_z, std::span<const corpus::TokenSpan> sentences);

// H passes through unchanged; sentence embeddings pool H directly.
RefinedText skip_dependency(const ag::Var& hidden, std::span<const corpus::TokenSpan> sentences);

ag::Var sentence_pool(const ag::Var& rows, std::span<const corpus::TokenSpan> sentences);

// Elementwise logsumexp over the marker rows of one entity -> 1 x d.
ag::Var pool_entity(const ag::Var& complemented, std::span<const ag::Index> marker_rows);

inline constexpr double kContextEps = 1e-30;

// Localized context for many pairs at once. entity_rows[e] lists the rows of A
// that represent entity e; pairs are (subject, object). Returns P x d.
ag::Var localized_contexts(const ag::Var& complemented, const ag::Var& attention,
                           const std::vector<std::vector<ag::Index>>& entity_rows, std::span<const std::pair<int, int>> pairs,
                           double eps = kContextEps);

// Single pair form -> 1 x d.
ag::Var localized_context(const ag::Var& complemented, const ag::Var& attention, std::span<const ag::Index> subject_rows,
                          std::span<const ag::Index> object_rows, double eps = kContextEps);

}  // namespace larson::dep
