#include "larson/syntax_graphs.hpp"

#include <algorithm>
#include <cctype>

namespace larson::syntax {

std::vector<Edge> BatchedGraph::segment_edges(size_t k) const {
  const int lo = segment_offsets.at(k);
  const int hi = lo + segment_sizes.at(k);
  std::vector<Edge> out;
  for (const Edge& e : edges)
    if (e.dst >= lo && e.dst < hi) out.push_back({e.src - lo, e.dst - lo});
  return out;
}

void validate_dependency_rows(std::span<const corpus::DepRow> rows) {
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw Error("empty dependency parse");
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<size_t>(i)];
    if (r.index != i + 1) throw Error("dependency row " + std::to_string(i + 1) + " has index " + std::to_string(r.index));
    if (r.head < 0 || r.head > n) throw Error("dependency head out of range at row " + std::to_string(r.index));
    if (r.head == r.index) throw Error("dependency row " + std::to_string(r.index) + " heads itself");
    if (r.head == 0) ++roots;
  }
  if (roots != 1) throw Error("dependency parse has " + std::to_string(roots) + " roots");
  for (int i = 0; i < n; ++i) {
    int at = i + 1;
    for (int steps = 0; at != 0; ++steps) {
      if (steps > n) throw Error("cycle in dependency parse through row " + std::to_string(i + 1));
      at = rows[static_cast<size_t>(at - 1)].head;
    }
  }
}

DependencyGraph build_dependency_graph(std::span<const corpus::DepRow> rows, const std::vector<std::vector<int>>& word_tokens,
                                       corpus::TokenSpan sentence, bool bidirectional) {
  validate_dependency_rows(rows);
  if (rows.size() != word_tokens.size()) throw Error("dependency rows do not match aligned word count");
  DependencyGraph g;
  g.node_count = sentence.size();
  auto local = [&](int token) {
    if (token < sentence.begin || token >= sentence.end) throw Error("aligned token outside its sentence span");
    return token - sentence.begin;
  };
  auto link = [&](int src, int dst) {
    g.edges.push_back({src, dst});
    if (bidirectional) g.edges.push_back({dst, src});
  };
  for (const auto& r : rows) {
    if (r.head == 0) continue;
    const auto& head = word_tokens.at(static_cast<size_t>(r.head - 1));
    const auto& dep = word_tokens.at(static_cast<size_t>(r.index - 1));
    if (head.empty() || dep.empty()) throw Error("word without subword tokens");
    link(local(head.front()), local(dep.front()));
  }
  for (const auto& toks : word_tokens)
    for (size_t k = 1; k < toks.size(); ++k) link(local(toks.front()), local(toks[k]));
  for (int t = 0; t < g.node_count; ++t) g.edges.push_back({t, t});
  return g;
}

BatchedGraph merge_graphs(std::span<const DependencyGraph> graphs) {
  if (graphs.empty()) throw Error("merge_graphs: empty graph list");
  BatchedGraph out;
  for (const auto& g : graphs) {
    out.segment_offsets.push_back(out.total_nodes);
    out.segment_sizes.push_back(g.node_count);
    for (const Edge& e : g.edges) {
      if (e.src < 0 || e.src >= g.node_count || e.dst < 0 || e.dst >= g.node_count)
        throw Error("merge_graphs: edge references a node outside its graph");
      out.edges.push_back({e.src + out.total_nodes, e.dst + out.total_nodes});
    }
    out.total_nodes += g.node_count;
  }
  return out;
}

int ConstituencyTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.children.empty(); }));
}

std::vector<int> ConstituencyTree::leaves() const {
  std::vector<int> out;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    const auto& ch = nodes[static_cast<size_t>(n)].children;
    if (ch.empty()) out.push_back(n);
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

namespace {

struct Lexer {
  std::string_view s;
  size_t at = 0;

  void skip() {
    while (at < s.size() && std::isspace(static_cast<unsigned char>(s[at]))) ++at;
  }
  bool done() {
    skip();
    return at >= s.size();
  }
  char peek() {
    skip();
    return at < s.size() ? s[at] : '\0';
  }
  std::string atom() {
    skip();
    const size_t b = at;
    while (at < s.size() && s[at] != '(' && s[at] != ')' && !std::isspace(static_cast<unsigned char>(s[at]))) ++at;
    return std::string(s.substr(b, at - b));
  }
};

int parse_node(Lexer& lx, std::vector<TreeNode>& nodes, int parent) {
  // at '('
  ++lx.at;
  const int id = static_cast<int>(nodes.size());
  nodes.push_back(TreeNode{"", {}, parent});
  if (lx.peek() != '(' && lx.peek() != ')') {
    if (lx.done()) throw Error("unbalanced brackets: input ends inside a node");
    nodes[static_cast<size_t>(id)].label = lx.atom();
  }
  while (true) {
    if (lx.done()) throw Error("unbalanced brackets: missing ')'");
    const char c = lx.peek();
    if (c == ')') {
      ++lx.at;
      break;
    }
    int child = 0;
    if (c == '(') {
      child = parse_node(lx, nodes, id);
    } else {
      child = static_cast<int>(nodes.size());
      nodes.push_back(TreeNode{lx.atom(), {}, id});
    }
    nodes[static_cast<size_t>(id)].children.push_back(child);
  }
  if (nodes[static_cast<size_t>(id)].children.empty() && nodes[static_cast<size_t>(id)].label.empty())
    throw Error("empty bracketed node");
  return id;
}

void finish(ConstituencyTree& t) {
  t.leaf_word.assign(t.nodes.size(), -1);
  int w = 0;
  for (int leaf : t.leaves()) t.leaf_word[static_cast<size_t>(leaf)] = w++;
  t.kept_nodes = select_subsentence_nodes(t);
}

}  // namespace

ConstituencyTree parse_bracketed(std::string_view text) {
  Lexer lx{text};
  if (lx.peek() != '(') throw Error("bracketed tree must start with '('");
  ConstituencyTree t;
  t.root = parse_node(lx, t.nodes, -1);
  if (!lx.done()) throw Error("unbalanced brackets: trailing input after the root node");
  if (t.leaf_count() == 0) throw Error("tree has zero leaves");
  finish(t);
  return t;
}

ConstituencyTree build_constituency_tree(std::string_view text, const std::vector<std::vector<int>>& word_tokens) {
  ConstituencyTree t = parse_bracketed(text);
  if (t.leaf_count() != static_cast<int>(word_tokens.size()))
    throw Error("constituency tree has " + std::to_string(t.leaf_count()) + " leaves for " + std::to_string(word_tokens.size()) +
                " words");
  return t;
}

ConstituencyTree make_tree(std::vector<TreeNode> nodes) {
  if (nodes.empty()) throw Error("tree without nodes");
  ConstituencyTree t;
  t.nodes = std::move(nodes);
  int roots = 0;
  std::vector<int> parents(t.nodes.size(), -1);
  for (size_t i = 0; i < t.nodes.size(); ++i) {
    for (int c : t.nodes[i].children) {
      if (c < 0 || c >= static_cast<int>(t.nodes.size())) throw Error("child id out of range");
      if (parents[static_cast<size_t>(c)] != -1) throw Error("node with two parents");
      parents[static_cast<size_t>(c)] = static_cast<int>(i);
    }
  }
  for (size_t i = 0; i < t.nodes.size(); ++i) {
    t.nodes[i].parent = parents[i];
    if (parents[i] == -1) {
      t.root = static_cast<int>(i);
      ++roots;
    }
  }
  if (roots != 1) throw Error("tree must have exactly one root");
  tree_levels(t);  // rejects cycles and unreachable nodes
  finish(t);
  return t;
}

std::vector<int> select_subsentence_nodes(const ConstituencyTree& tree) {
  std::vector<int> leaf_desc(tree.nodes.size(), 0);
  for (const auto& level : tree_levels(tree))
    for (int n : level) {
      const auto& ch = tree.nodes[static_cast<size_t>(n)].children;
      if (ch.empty()) {
        leaf_desc[static_cast<size_t>(n)] = 1;
      } else {
        for (int c : ch) leaf_desc[static_cast<size_t>(n)] += leaf_desc[static_cast<size_t>(c)];
      }
    }
  std::vector<int> kept;
  std::vector<int> stack{tree.root};
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    const auto& ch = tree.nodes[static_cast<size_t>(n)].children;
    if (!ch.empty() && leaf_desc[static_cast<size_t>(n)] >= 2) kept.push_back(n);
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return kept;
}

DependencyGraph tree_graph(const ConstituencyTree& tree) {
  DependencyGraph g;
  g.node_count = static_cast<int>(tree.nodes.size());
  for (size_t p = 0; p < tree.nodes.size(); ++p)
    for (int c : tree.nodes[p].children) {
      g.edges.push_back({static_cast<int>(p), c});
      g.edges.push_back({c, static_cast<int>(p)});
    }
  for (int n = 0; n < g.node_count; ++n) g.edges.push_back({n, n});
  return g;
}

std::vector<std::vector<int>> tree_levels(const ConstituencyTree& tree) {
  const size_t n = tree.nodes.size();
  std::vector<int> height(n, -1);
  std::vector<char> state(n, 0);  // 0 new, 1 open, 2 done
  std::vector<std::pair<int, size_t>> stack{{tree.root, 0}};
  state[static_cast<size_t>(tree.root)] = 1;
  size_t visited = 0;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& ch = tree.nodes[static_cast<size_t>(node)].children;
    if (next < ch.size()) {
      const int c = ch[next++];
      if (c < 0 || static_cast<size_t>(c) >= n) throw Error("child id out of range");
      if (state[static_cast<size_t>(c)] != 0) throw Error("cyclic or shared child link in tree");
      state[static_cast<size_t>(c)] = 1;
      stack.emplace_back(c, 0);
      continue;
    }
    int h = 0;
    for (int c : ch) h = std::max(h, height[static_cast<size_t>(c)] + 1);
    height[static_cast<size_t>(node)] = h;
    state[static_cast<size_t>(node)] = 2;
    ++visited;
    stack.pop_back();
  }
  if (visited != n) throw Error("tree has nodes unreachable from the root");
  const int max_h = *std::max_element(height.begin(), height.end());
  std::vector<std::vector<int>> levels(static_cast<size_t>(max_h + 1));
  for (size_t i = 0; i < n; ++i) levels[static_cast<size_t>(height[i])].push_back(static_cast<int>(i));
  return levels;
}

}  // namespace larson::syntax
