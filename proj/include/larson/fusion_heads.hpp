#pragma once

// Dedicated attention over subsentence states, residual fusion, the bilinear
// relation head and the evidence head.

#include "larson/autograd.hpp"
#include "larson/init.hpp"

#include <string>

namespace larson::fusion {

struct FusionParams {
  ag::Parameter w;     // d2 x 1
  ag::Parameter w_b1;  // d2 x d
  ag::Parameter w_b2;  // d2 x d1
  ag::Parameter w_m;   // d x d1
};

enum class Weighting { kAttention, kUniform };

class DedicatedAttention {
 public:
  DedicatedAttention() = default;
  DedicatedAttention(const std::string& name, int query_dim, int memory_dim, int attn_dim, Rng& rng);

  // q(p, i) = w^T tanh(W_b1 v_p + W_b2 n_i), queries P x d, memory B x d1.
  ag::Var scores(ag::Tape& tape, const ag::Var& queries, const ag::Var& memory);

  // Row-wise softmax of the scores (or uniform 1/B). With a dropout rng and a
  // positive rate, inverted dropout is applied after the softmax without
  // renormalising.
  ag::Var weights(ag::Tape& tape, const ag::Var& queries, const ag::Var& memory, Weighting mode, double dropout = 0.0,
                  Rng* rng = nullptr);

  // v + W_m (beta N); memory may be invalid (no subsentences), then v.
  ag::Var fuse(ag::Tape& tape, const ag::Var& queries, const ag::Var& memory, const ag::Var& beta);

  FusionParams& params() { return params_; }
  ParamList parameters() { return {&params_.w, &params_.w_b1, &params_.w_b2, &params_.w_m}; }

 private:
  FusionParams params_;
};

struct FusedPair {
  ag::Var subject;  // P x d
  ag::Var object;
  ag::Var context;
  // Attention weights per component, P x B (invalid when B = 0).
  ag::Var subject_beta;
  ag::Var object_beta;
  ag::Var context_beta;
};

// Three independent attention+fuse applications sharing one parameter set.
FusedPair enhance_pair(ag::Tape& tape, DedicatedAttention& attn, const ag::Var& subjects, const ag::Var& objects,
                       const ag::Var& contexts, const ag::Var& memory, Weighting mode, double dropout = 0.0, Rng* rng = nullptr);

enum class SentenceCombine { kAttention, kPaired };

// Each dependency-aware sentence attends over all constituency sentence
// embeddings (kAttention) or adds its own partner through W_m (kPaired).
ag::Var combine_sentence_embeddings(ag::Tape& tape, DedicatedAttention& attn, const ag::Var& dep_sentences,
                                    const ag::Var& con_sentences, SentenceCombine mode, double dropout = 0.0, Rng* rng = nullptr);

struct HeadParams {
  ag::Parameter w_t1, w_t2, w_q1, w_q2;  // d x d
  ag::Parameter w_r;                     // d x (C*d), or C x (d*k) when grouped
  ag::Parameter b_r;                     // 1 x C
  ag::Parameter w_g;                     // d x d
  ag::Parameter b_g;                     // 1 x 1
};

class Heads {
 public:
  Heads() = default;
  // classes counts TH at index 0. block_size > 0 selects the grouped bilinear.
  Heads(const std::string& name, int dim, int classes, int block_size, Rng& rng);

  // z_s = tanh(W_t1 e_s + W_t2 c), z_o = tanh(W_q1 e_o + W_q2 c),
  // l_r = z_s^T W_r z_o + b_r. Returns P x C.
  ag::Var relation_logits(ag::Tape& tape, const ag::Var& subjects, const ag::Var& objects, const ag::Var& contexts);

  // sigma(s_i^T W_g c_p + b_g) as a P x I matrix; logits variant for losses.
  ag::Var evidence_logits(ag::Tape& tape, const ag::Var& sentences, const ag::Var& contexts);
  ag::Var evidence_probabilities(ag::Tape& tape, const ag::Var& sentences, const ag::Var& contexts);

  HeadParams& params() { return params_; }
  ParamList parameters();
  int classes() const { return classes_; }

 private:
  HeadParams params_;
  int classes_ = 0;
  int block_size_ = 0;
};

}  // namespace larson::fusion
