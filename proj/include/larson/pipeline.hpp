#pragma once

// End-to-end forward pass for one document:
// encode -> dependency refinement -> subsentence modelling -> fusion -> heads.

#include "larson/config.hpp"
#include "larson/corpus.hpp"
#include "larson/dep_refinement.hpp"
#include "larson/encoder.hpp"
#include "larson/fusion_heads.hpp"
#include "larson/subsentence.hpp"

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace larson::pipeline {

// Subword vocabulary of the mock encoder. Id 0 is the unknown piece, id 1 the
// mention marker.
class TokenVocab {
 public:
  static constexpr int kUnknown = 0;
  static constexpr int kMarkerId = 1;

  TokenVocab();
  explicit TokenVocab(std::vector<std::string> pieces);
  static TokenVocab build(const corpus::Corpus& corpus, const corpus::Tokenizer& tokenizer);

  int id(const std::string& piece) const;
  int size() const { return static_cast<int>(pieces_.size()); }
  const std::vector<std::string>& pieces() const { return pieces_; }

 private:
  void add(const std::string& piece);
  std::vector<std::string> pieces_;
  std::map<std::string, int> index_;
};

corpus::Tokenizer default_tokenizer();

// Everything about a document that does not depend on parameters.
struct PreparedDocument {
  const corpus::Document* doc = nullptr;
  corpus::MarkedDocument marked;
  std::vector<int> token_ids;
  syntax::BatchedGraph dep_graph;  // node ids = document token positions
  subsentence::Forest forest;
  // leaf_tokens[sentence][word] -> vocabulary ids of the word's pieces
  std::vector<std::vector<std::vector<int>>> leaf_tokens;
  std::vector<std::vector<ag::Index>> entity_markers;
  std::vector<std::vector<ag::Index>> entity_context_rows;
  // Ordered pairs (s asc, o asc, s != o).
  std::vector<std::pair<int, int>> pairs;
  // Positive logit columns per pair.
  std::vector<std::vector<int>> positives;
  // Pairs with at least one relation and their evidence bits (rows x I).
  std::vector<ag::Index> positive_pairs;
  ag::Matrix evidence_bits;
};

PreparedDocument prepare_document(const corpus::Document& doc, const TokenVocab& vocab, const ModelConfig& config,
                                  const corpus::Tokenizer& tokenizer = default_tokenizer());

struct DocumentOutput {
  ag::Var entities;        // N x d, pooled entity embeddings
  ag::Var contexts;        // P x d, localized contexts
  ag::Var subsentences;    // B x h (invalid when B = 0)
  fusion::FusedPair fused;
  ag::Var sentences;       // I x d, combined sentence embeddings
  ag::Var logits;          // P x (|R| + 1), column 0 = TH
  ag::Var evidence_logits;  // P x I, before the sigmoid
  ag::Var evidence_probs;   // P x I
};

struct LossTerms {
  ag::Var relation;  // summed over pairs
  ag::Var evidence;  // summed over positive pairs; invalid when there are none
  int pairs = 0;
  int positive_pairs = 0;
};

class Model {
 public:
  // Parameters are initialised from config.seed. An external encoder, when
  // given, replaces the mock one.
  Model(const ModelConfig& config, int vocab_size, std::unique_ptr<encoder::Encoder> external = nullptr);

  // Dropout is active only when dropout_rng is non-null.
  DocumentOutput forward(ag::Tape& tape, const PreparedDocument& doc, Rng* dropout_rng = nullptr);
  LossTerms losses(const DocumentOutput& out, const PreparedDocument& doc) const;

  ParamList encoder_parameters() { return encoder_->parameters(); }
  ParamList rest_parameters();
  ParamList parameters();

  const ModelConfig& config() const { return config_; }
  encoder::Encoder& encoder() { return *encoder_; }
  dep::GatStack& dep_gat() { return dep_gat_; }
  subsentence::TreeLstm& tree_lstm() { return tree_lstm_; }
  dep::GatStack& con_gat() { return con_gat_; }
  fusion::DedicatedAttention& pair_fusion() { return pair_fusion_; }
  fusion::DedicatedAttention& sentence_fusion() { return sentence_fusion_; }
  fusion::Heads& heads() { return heads_; }

 private:
  ModelConfig config_;
  std::unique_ptr<encoder::Encoder> encoder_;
  dep::GatStack dep_gat_;
  ag::Parameter w_z_;
  subsentence::TreeLstm tree_lstm_;
  dep::GatStack con_gat_;
  fusion::DedicatedAttention pair_fusion_;
  fusion::DedicatedAttention sentence_fusion_;
  fusion::Heads heads_;
};

}  // namespace larson::pipeline
