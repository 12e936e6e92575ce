#include "checks.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace larson;
using syntax::Edge;

namespace {

std::set<Edge> edge_set(const std::vector<Edge>& edges) { return {edges.begin(), edges.end()}; }

int find_label(const syntax::ConstituencyTree& t, const std::string& label) {
  for (size_t i = 0; i < t.nodes.size(); ++i)
    if (t.nodes[i].label == label) return static_cast<int>(i);
  return -1;
}

int leaf_descendants(const syntax::ConstituencyTree& t, int node) {
  if (t.is_leaf(node)) return 1;
  int n = 0;
  for (int c : t.nodes[static_cast<size_t>(node)].children) n += leaf_descendants(t, c);
  return n;
}

}  // namespace

TEST_SUITE("syntax_graphs") {
  TEST_CASE("two-word expansion with a split dependent") {
    const std::vector<corpus::DepRow> rows = {{1, "A", 0, "root"}, {2, "B", 1, "dep"}};
    const std::vector<std::vector<int>> words = {{0}, {1, 2}};
    const auto g = syntax::build_dependency_graph(rows, words, {0, 3});
    CHECK(g.node_count == 3);
    CHECK(edge_set(g.edges) == std::set<Edge>{{0, 1}, {1, 2}, {0, 0}, {1, 1}, {2, 2}});
  }

  TEST_CASE("single word gives a self-loop only") {
    const std::vector<corpus::DepRow> rows = {{1, "A", 0, "root"}};
    const auto g = syntax::build_dependency_graph(rows, {{0}}, {0, 1});
    CHECK(edge_set(g.edges) == std::set<Edge>{{0, 0}});
  }

  TEST_CASE("markers only carry self-loops and bidirectional adds reverse edges") {
    const std::vector<corpus::DepRow> rows = {{1, "A", 2, "dep"}, {2, "B", 0, "root"}};
    // tokens: * A * B  (sentence span starts at 4 in the document)
    const auto g = syntax::build_dependency_graph(rows, {{5}, {7}}, {4, 8});
    CHECK(edge_set(g.edges) == std::set<Edge>{{3, 1}, {0, 0}, {1, 1}, {2, 2}, {3, 3}});
    const auto b = syntax::build_dependency_graph(rows, {{5}, {7}}, {4, 8}, true);
    CHECK(edge_set(b.edges).count({1, 3}) == 1);
  }

  TEST_CASE("random trees match an independent edge enumeration") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 6;
      std::vector<corpus::DepRow> rows;
      const int root = std::uniform_int_distribution<int>(1, n)(rng);
      // each non-root word attaches to an earlier-visited word, so the parse is a tree
      std::vector<int> order(n);
      for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i + 1;
      std::shuffle(order.begin(), order.end(), rng);
      std::iter_swap(order.begin(), std::find(order.begin(), order.end(), root));
      std::vector<int> head(n + 1, 0);
      for (int k = 1; k < n; ++k) head[static_cast<size_t>(order[static_cast<size_t>(k)])] = order[static_cast<size_t>(std::uniform_int_distribution<int>(0, k - 1)(rng))];
      for (int i = 1; i <= n; ++i) rows.push_back({i, "w", head[static_cast<size_t>(i)], "dep"});

      std::vector<std::vector<int>> words;
      int t = 0;
      for (int i = 0; i < n; ++i) {
        const int pieces = std::uniform_int_distribution<int>(1, 3)(rng);
        std::vector<int> w;
        for (int p = 0; p < pieces; ++p) w.push_back(t++);
        words.push_back(w);
      }
      const auto g = syntax::build_dependency_graph(rows, words, {0, t});

      std::set<Edge> expect;
      for (int i = 0; i < t; ++i) expect.insert({i, i});
      for (int i = 1; i <= n; ++i) {
        const auto& dep = words[static_cast<size_t>(i - 1)];
        if (head[static_cast<size_t>(i)] > 0) expect.insert({words[static_cast<size_t>(head[static_cast<size_t>(i)] - 1)][0], dep[0]});
        for (size_t k = 1; k < dep.size(); ++k) expect.insert({dep[0], dep[k]});
      }
      CHECK(g.edges.size() == static_cast<size_t>((n - 1) + (t - n) + t));
      CHECK(edge_set(g.edges) == expect);
    }
  }

  TEST_CASE("bad dependency rows") {
    CHECK_THROWS_AS(syntax::validate_dependency_rows(std::vector<corpus::DepRow>{{1, "a", 0, ""}, {2, "b", 0, ""}}), Error);
    CHECK_THROWS_AS(syntax::validate_dependency_rows(std::vector<corpus::DepRow>{{1, "a", 2, ""}, {2, "b", 1, ""}, {3, "c", 0, ""}}), Error);
    CHECK_NOTHROW(syntax::validate_dependency_rows(std::vector<corpus::DepRow>{{1, "a", 0, ""}, {2, "b", 1, ""}}));
  }

  TEST_CASE("merge offsets node ids") {
    syntax::DependencyGraph a{3, {{0, 0}, {1, 1}, {2, 2}}};
    syntax::DependencyGraph b{2, {{0, 1}}};
    const std::vector<syntax::DependencyGraph> both = {a, b};
    const auto m = syntax::merge_graphs(both);
    CHECK(m.total_nodes == 5);
    CHECK(m.segment_offsets == std::vector<int>{0, 3});
    CHECK(edge_set(m.edges).count({3, 4}) == 1);
    CHECK(edge_set(m.segment_edges(0)) == edge_set(a.edges));
    CHECK(edge_set(m.segment_edges(1)) == edge_set(b.edges));

    const std::vector<syntax::DependencyGraph> one = {b};
    CHECK(edge_set(syntax::merge_graphs(one).edges) == edge_set(b.edges));
    CHECK_THROWS_AS(syntax::merge_graphs(std::vector<syntax::DependencyGraph>{}), Error);
  }

  TEST_CASE("bracket parser") {
    const auto t = syntax::parse_bracketed("(S (NP (A x) (B y)) (VP (C z)))");
    CHECK(t.leaf_count() == 3);
    CHECK(t.nodes[static_cast<size_t>(t.root)].label == "S");
    CHECK(leaf_descendants(t, find_label(t, "NP")) == 2);
    const auto leaves = t.leaves();
    for (size_t i = 0; i < leaves.size(); ++i) CHECK(t.leaf_word[static_cast<size_t>(leaves[i])] == static_cast<int>(i));

    const auto one = syntax::parse_bracketed("(ROOT (X w))");
    CHECK(one.leaf_count() == 1);
    CHECK(one.kept_nodes.empty());

    CHECK_THROWS_AS(syntax::parse_bracketed("((S x)"), Error);
    CHECK_THROWS_AS(syntax::parse_bracketed("(S x))"), Error);
    CHECK_THROWS_AS(syntax::parse_bracketed("()"), Error);
  }

  TEST_CASE("subsentence node selection") {
    const auto t = syntax::parse_bracketed("(S (NP (A Michelle) (B Ferre)) (VP (C is)))");
    CHECK(t.kept_nodes == std::vector<int>{find_label(t, "S"), find_label(t, "NP")});
    CHECK(syntax::select_subsentence_nodes(t) == t.kept_nodes);

    const auto bal = syntax::parse_bracketed("(S (X a b) (Y c d))");
    CHECK(bal.kept_nodes.size() == 3);

    // every ancestor of a kept node is kept, and every kept node has two leaves
    const auto deep = syntax::parse_bracketed("(S (A (B (C x y)) z) (D w))");
    std::set<int> kept(deep.kept_nodes.begin(), deep.kept_nodes.end());
    for (int k : deep.kept_nodes) {
      CHECK(leaf_descendants(deep, k) >= 2);
      for (int p = deep.nodes[static_cast<size_t>(k)].parent; p >= 0; p = deep.nodes[static_cast<size_t>(p)].parent) CHECK(kept.count(p) == 1);
    }
  }

  TEST_CASE("constituency tree must match the word count") {
    CHECK_THROWS_AS(syntax::build_constituency_tree("(S a b c)", {{0}, {1}}), Error);
    CHECK_NOTHROW(syntax::build_constituency_tree("(S a b)", {{0}, {1}}));
  }

  TEST_CASE("tree graph and levels") {
    const auto t = syntax::parse_bracketed("(S (NP a b) c)");
    const auto g = syntax::tree_graph(t);
    CHECK(g.node_count == static_cast<int>(t.nodes.size()));
    CHECK(g.edges.size() == t.nodes.size() + 2 * (t.nodes.size() - 1));
    const auto levels = syntax::tree_levels(t);
    CHECK(levels.back() == std::vector<int>{t.root});
    std::vector<int> seen(t.nodes.size(), 0);
    for (const auto& lvl : levels)
      for (int n : lvl) {
        for (int c : t.nodes[static_cast<size_t>(n)].children) CHECK(seen[static_cast<size_t>(c)] == 1);
        seen[static_cast<size_t>(n)] = 1;
      }
  }

  TEST_CASE("make_tree rejects cycles and double parents") {
    std::vector<syntax::TreeNode> two_parents(3);
    two_parents[0].children = {2};
    two_parents[1].children = {2};
    CHECK_THROWS_AS(syntax::make_tree(two_parents), Error);
    std::vector<syntax::TreeNode> cyclic(3);
    cyclic[0].children = {1};
    cyclic[1].children = {0};
    CHECK_THROWS_AS(syntax::make_tree(cyclic), Error);
  }
}
