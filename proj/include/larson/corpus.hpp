#pragma once

// Documents, relation facts and parse sidecars, plus mention marking and
// word -> subword alignment.

#include "larson/autograd.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace larson::corpus {

struct Mention {
  int entity_id = 0;
  int sent_index = 0;
  // Half-open word span inside the sentence.
  int start = 0;
  int end = 0;
  // Token index of the "*" preceding the mention; -1 until marked.
  int marker_pos = -1;
};

struct Fact {
  int subject = 0;
  int object = 0;
  int relation = 0;  // index into RelationVocab
  std::vector<int> evidence;
};

// One row of a word-level dependency parse, 1-based like CoNLL.
struct DepRow {
  int index = 0;
  std::string word;
  int head = 0;  // 0 = root
  std::string deprel;
};

struct Document {
  std::string doc_id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::vector<Mention>> entities;
  std::vector<Fact> facts;
  std::vector<std::vector<DepRow>> dep_parses;
  std::vector<std::string> con_parses;

  int sentence_count() const { return static_cast<int>(sentences.size()); }
  int entity_count() const { return static_cast<int>(entities.size()); }

  // Throws Error naming the document on any structural violation.
  void validate(int relation_count) const;
};

using Corpus = std::vector<Document>;

class RelationVocab {
 public:
  RelationVocab() = default;
  explicit RelationVocab(std::vector<std::string> labels);

  // Throws on an unknown label.
  int id(const std::string& label) const;
  const std::string& label(int id) const { return labels_.at(static_cast<size_t>(id)); }
  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

// Reads corpus.json plus <doc_id>.dep.tsv / <doc_id>.con.txt from dir.
Corpus load_corpus(const std::filesystem::path& dir, const RelationVocab& relations);
// Writes the same layout load_corpus reads.
void save_corpus(const Corpus& corpus, const RelationVocab& relations, const std::filesystem::path& dir);

// word -> subword pieces; must return at least one piece.
using Tokenizer = std::function<std::vector<std::string>(const std::string&)>;

// Splits a word into pieces of at most max_piece characters; continuation
// pieces carry a "##" prefix.
std::vector<std::string> chunk_tokenize(const std::string& word, size_t max_piece = 6);

inline constexpr const char* kMarker = "*";

struct TokenSpan {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
};

// words[sentence][word] -> ordered document-global token indices.
struct AlignmentMap {
  std::vector<std::vector<std::vector<int>>> words;
};

struct MarkedDocument {
  std::vector<std::string> tokens;
  std::vector<bool> is_marker;
  std::vector<std::vector<Mention>> entities;  // marker_pos filled
  AlignmentMap alignment;
  std::vector<TokenSpan> sentence_spans;
};

MarkedDocument insert_mention_markers(const Document& doc, const Tokenizer& tokenizer);

// Surface string of a mention (its words joined by single spaces).
std::string mention_text(const Document& doc, const Mention& m);

}  // namespace larson::corpus
