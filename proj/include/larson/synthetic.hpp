#pragma once

// Small generated corpora with synthetic parses, used for overfitting and
// ablation runs.

#include "larson/corpus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace larson::synthetic {

struct SyntheticCorpus {
  corpus::RelationVocab relations;
  corpus::Corpus docs;
};

// Head of word i is word i + 1; the last word is the root.
std::vector<corpus::DepRow> chain_parse(const std::vector<std::string>& words);
// (S w1 (X w2 (X ... (X w_{n-1} w_n))))
std::string right_branching(const std::vector<std::string>& words);
// (S (X ... (X w1 w2) ...) w_n)
std::string left_branching(const std::vector<std::string>& words);
// (S (X first half) (X second half))
std::string balanced(const std::vector<std::string>& words);

// 2-4 sentences and 2-4 entities per document, three relation types. Each
// fact gets its own sentence "subject trigger object ." which is its only
// evidence sentence. No two facts share an unordered entity pair.
SyntheticCorpus overfit_corpus(std::uint64_t seed, int documents = 20);

// Three-sentence documents whose single fact (entity 0 -> entity 1) is
// decided only by the bracketing of a fixed-word cue sentence that mentions
// neither entity. Tokens and dependency parses do not depend on the label.
SyntheticCorpus cue_corpus(std::uint64_t seed, int documents = 200);

}  // namespace larson::synthetic
