#pragma once

// Token-level dependency graphs, constituency trees and disjoint-union
// batching of both.

#include "larson/corpus.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace larson::syntax {

struct Edge {
  int src = 0;  // in-neighbour
  int dst = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct DependencyGraph {
  int node_count = 0;
  std::vector<Edge> edges;
};

struct BatchedGraph {
  int total_nodes = 0;
  std::vector<Edge> edges;
  std::vector<int> segment_offsets;
  std::vector<int> segment_sizes;

  // Edges of segment k relabelled back to local node ids.
  std::vector<Edge> segment_edges(size_t k) const;
};

// Throws unless rows form a single-rooted acyclic tree over 1..n.
void validate_dependency_rows(std::span<const corpus::DepRow> rows);

// Expands a word-level parse to tokens of one sentence. Structure attaches to
// each word's first subword, later subwords hang off the first, and every token
// of the sentence span (markers included) gets a self-loop. Node ids are local
// to the sentence span.
DependencyGraph build_dependency_graph(std::span<const corpus::DepRow> rows, const std::vector<std::vector<int>>& word_tokens,
                                       corpus::TokenSpan sentence, bool bidirectional = false);

BatchedGraph merge_graphs(std::span<const DependencyGraph> graphs);

struct TreeNode {
  std::string label;
  std::vector<int> children;
  int parent = -1;
};

struct ConstituencyTree {
  std::vector<TreeNode> nodes;
  int root = 0;
  // leaf node id -> sentence word index; -1 for internal nodes.
  std::vector<int> leaf_word;
  std::vector<int> kept_nodes;

  bool is_leaf(int node) const { return nodes[static_cast<size_t>(node)].children.empty(); }
  int leaf_count() const;
  // Node ids with leaves in left-to-right order.
  std::vector<int> leaves() const;
};

// Parses one PTB-style bracketed tree; leaves are bare tokens. Fills
// leaf_word and kept_nodes.
ConstituencyTree parse_bracketed(std::string_view text);

// parse_bracketed plus a check that leaves align one-to-one with the words
// of `word_tokens`.
ConstituencyTree build_constituency_tree(std::string_view text, const std::vector<std::vector<int>>& word_tokens);

// Assembles a tree from explicit nodes (root = the node without parent).
ConstituencyTree make_tree(std::vector<TreeNode> nodes);

// Internal nodes with at least two leaf descendants, in pre-order.
std::vector<int> select_subsentence_nodes(const ConstituencyTree& tree);

// Parent <-> child edges in both directions plus self-loops.
DependencyGraph tree_graph(const ConstituencyTree& tree);

// Node ids bottom-up, grouped by height (leaves first). Throws on cycles.
std::vector<std::vector<int>> tree_levels(const ConstituencyTree& tree);

}  // namespace larson::syntax
