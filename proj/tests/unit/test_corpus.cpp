#include "checks.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <fstream>

using namespace larson;

namespace {

corpus::Tokenizer identity_tokenizer() {
  return [](const std::string& w) { return std::vector<std::string>{w}; };
}

corpus::Document two_word_doc() {
  corpus::Document d;
  d.doc_id = "tw";
  d.sentences = {{"w1", "w2"}};
  d.dep_parses = {{{1, "w1", 2, "dep"}, {2, "w2", 0, "root"}}};
  d.con_parses = {"(S (A w1) (B w2))"};
  d.entities = {{{0, 0, 0, 1, -1}}};
  return d;
}

std::vector<std::string> strip_markers(const corpus::MarkedDocument& m, const corpus::Document& doc) {
  std::vector<std::string> words;
  for (size_t s = 0; s < doc.sentences.size(); ++s)
    for (const auto& toks : m.alignment.words[s]) {
      std::string w;
      for (int t : toks) {
        std::string piece = m.tokens[static_cast<size_t>(t)];
        if (piece.rfind("##", 0) == 0) piece = piece.substr(2);
        w += piece;
      }
      words.push_back(w);
    }
  return words;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("save and load round trip keeps every field") {
    const unit::TempDir dir("corpus");
    const auto rel = checks::toy_relations();
    const corpus::Document doc = checks::toy_document();
    corpus::save_corpus({doc}, rel, dir.path);
    const corpus::Corpus back = corpus::load_corpus(dir.path, rel);
    REQUIRE(back.size() == 1);
    CHECK(back[0].doc_id == doc.doc_id);
    CHECK(back[0].sentences == doc.sentences);
    CHECK(back[0].con_parses == doc.con_parses);
    REQUIRE(back[0].facts.size() == doc.facts.size());
    for (size_t i = 0; i < doc.facts.size(); ++i) {
      CHECK(back[0].facts[i].relation == doc.facts[i].relation);
      CHECK(back[0].facts[i].evidence == doc.facts[i].evidence);
    }
    REQUIRE(back[0].dep_parses.size() == 2);
    CHECK(back[0].dep_parses[1][2].head == 2);
    CHECK(back[0].entities[1].size() == 2);
  }

  TEST_CASE("missing sidecar names the document") {
    const unit::TempDir dir("sidecar");
    const auto rel = checks::toy_relations();
    corpus::save_corpus({checks::toy_document()}, rel, dir.path);
    std::filesystem::remove(dir.path / "toy.con.txt");
    try {
      corpus::load_corpus(dir.path, rel);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("'toy'") != std::string::npos);
    }
  }

  TEST_CASE("leaf count mismatch is rejected") {
    const unit::TempDir dir("leaves");
    corpus::Document d = two_word_doc();
    d.con_parses = {"(S (A w1) (B w2) (C w3))"};
    corpus::save_corpus({d}, corpus::RelationVocab({"r"}), dir.path);
    CHECK_THROWS_AS(corpus::load_corpus(dir.path, corpus::RelationVocab({"r"})), Error);
  }

  TEST_CASE("unknown relation label is rejected") {
    const unit::TempDir dir("label");
    corpus::Document d = checks::toy_document();
    d.facts = {};
    corpus::save_corpus({d}, checks::toy_relations(), dir.path);
    std::ofstream(dir.path / "corpus.json") << R"([{"doc_id":"toy","sents":[["Alice","founded","Acmecorp","in","Paris","."],["Acmecorp","hired","Bob","later","."]],
      "entities":[[{"sent":0,"start":0,"end":1}],[{"sent":0,"start":2,"end":3}]],"facts":[{"s":0,"o":1,"r":"P999","evidence":[0]}]}])";
    CHECK_THROWS_WITH_AS(corpus::load_corpus(dir.path, checks::toy_relations()), doctest::Contains("P999"), Error);
  }

  TEST_CASE("self relation and out of range evidence violate invariants") {
    corpus::Document d = checks::toy_document();
    d.facts = {{1, 1, 0, {0}}};
    CHECK_THROWS_AS(d.validate(3), Error);
    d.facts = {{0, 1, 0, {5}}};
    CHECK_THROWS_AS(d.validate(3), Error);
  }

  TEST_CASE("one mention on the first word") {
    const corpus::Document d = two_word_doc();
    const auto m = corpus::insert_mention_markers(d, identity_tokenizer());
    CHECK(m.tokens == std::vector<std::string>{"*", "w1", "*", "w2"});
    CHECK(m.entities[0][0].marker_pos == 0);
  }

  TEST_CASE("identical spans get distinct markers") {
    corpus::Document d = two_word_doc();
    d.entities = {{{0, 0, 0, 1, -1}}, {{1, 0, 0, 1, -1}}};
    const auto m = corpus::insert_mention_markers(d, identity_tokenizer());
    CHECK(m.tokens == std::vector<std::string>{"*", "*", "w1", "*", "*", "w2"});
    const int a = m.entities[0][0].marker_pos;
    const int b = m.entities[1][0].marker_pos;
    CHECK(a != b);
    CHECK(std::min(a, b) == 0);
    CHECK(std::max(a, b) == 1);
  }

  TEST_CASE("nested spans order markers by start then longer first") {
    corpus::Document d;
    d.doc_id = "n";
    d.sentences = {{"a", "b", "c"}};
    d.entities = {{{0, 0, 1, 2, -1}}, {{1, 0, 0, 3, -1}}};
    const auto m = corpus::insert_mention_markers(d, identity_tokenizer());
    CHECK(m.tokens == std::vector<std::string>{"*", "a", "*", "b", "*", "c", "*"});
    CHECK(m.entities[1][0].marker_pos == 0);
    CHECK(m.entities[0][0].marker_pos == 2);
  }

  TEST_CASE("crossing spans are rejected") {
    corpus::Document d;
    d.doc_id = "x";
    d.sentences = {{"a", "b", "c"}};
    d.entities = {{{0, 0, 0, 2, -1}}, {{1, 0, 1, 3, -1}}};
    CHECK_THROWS_AS(corpus::insert_mention_markers(d, identity_tokenizer()), Error);
  }

  TEST_CASE("alignment follows the tokenizer") {
    corpus::Document d;
    d.doc_id = "hk";
    d.sentences = {{"Hong", "Kong"}};
    const corpus::Tokenizer tok = [](const std::string& w) {
      return w == "Kong" ? std::vector<std::string>{"K", "##ong"} : std::vector<std::string>{w};
    };
    const auto m = corpus::insert_mention_markers(d, tok);
    CHECK(m.alignment.words[0] == std::vector<std::vector<int>>{{0}, {1, 2}});
  }

  TEST_CASE("marker count, span tiling and round trip on the toy document") {
    const corpus::Document d = checks::toy_document();
    const auto tok = [](const std::string& w) { return corpus::chunk_tokenize(w, 3); };
    const auto m = corpus::insert_mention_markers(d, tok);
    int mentions = 0;
    for (const auto& ms : d.entities) mentions += static_cast<int>(ms.size());
    int markers = 0;
    for (bool b : m.is_marker) markers += b ? 1 : 0;
    CHECK(markers == 2 * mentions);
    for (const auto& ms : m.entities)
      for (const auto& mm : ms) CHECK(m.tokens[static_cast<size_t>(mm.marker_pos)] == "*");

    int cursor = 0;
    for (const auto& span : m.sentence_spans) {
      CHECK(span.begin == cursor);
      cursor = span.end;
    }
    CHECK(cursor == static_cast<int>(m.tokens.size()));

    std::vector<std::string> words;
    for (const auto& s : d.sentences) words.insert(words.end(), s.begin(), s.end());
    CHECK(strip_markers(m, d) == words);
  }

  TEST_CASE("chunk tokenizer") {
    CHECK(corpus::chunk_tokenize("cat") == std::vector<std::string>{"cat"});
    CHECK(corpus::chunk_tokenize("Acmecorporation") == std::vector<std::string>{"Acmeco", "##rporat", "##ion"});
    CHECK(corpus::chunk_tokenize("abcdefg", 3) == std::vector<std::string>{"abc", "##def", "##g"});
  }
}
