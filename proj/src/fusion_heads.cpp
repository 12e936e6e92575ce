#include "larson/fusion_heads.hpp"

#include <random>

namespace larson::fusion {

DedicatedAttention::DedicatedAttention(const std::string& name, int query_dim, int memory_dim, int attn_dim, Rng& rng) {
  params_.w = ag::Parameter(name + ".w", xavier_uniform(attn_dim, 1, rng));
  params_.w_b1 = ag::Parameter(name + ".w_b1", xavier_uniform(attn_dim, query_dim, rng));
  params_.w_b2 = ag::Parameter(name + ".w_b2", xavier_uniform(attn_dim, memory_dim, rng));
  params_.w_m = ag::Parameter(name + ".w_m", xavier_uniform(query_dim, memory_dim, rng));
}

ag::Var DedicatedAttention::scores(ag::Tape& tape, const ag::Var& queries, const ag::Var& memory) {
  const ag::Var left = ag::matmul_nt(queries, tape.parameter(params_.w_b1));
  const ag::Var right = ag::matmul_nt(memory, tape.parameter(params_.w_b2));
  return ag::additive_scores(left, right, tape.parameter(params_.w));
}

ag::Var DedicatedAttention::weights(ag::Tape& tape, const ag::Var& queries, const ag::Var& memory, Weighting mode, double dropout,
                                    Rng* rng) {
  if (!memory.valid() || memory.rows() == 0) return {};
  ag::Var beta;
  if (mode == Weighting::kUniform) {
    beta = tape.constant(ag::Matrix::Constant(queries.rows(), memory.rows(), 1.0 / static_cast<double>(memory.rows())));
  } else {
    beta = ag::softmax_rows(scores(tape, queries, memory));
  }
  if (rng != nullptr && dropout > 0.0) {
    if (dropout >= 1.0) throw Error("fusion dropout rate must be below 1");
    std::bernoulli_distribution keep(1.0 - dropout);
    ag::Matrix mask(beta.rows(), beta.cols());
    for (ag::Index j = 0; j < mask.cols(); ++j)
      for (ag::Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(*rng) ? 1.0 / (1.0 - dropout) : 0.0;
    beta = ag::mul(beta, tape.constant(std::move(mask)));
  }
  return beta;
}

ag::Var DedicatedAttention::fuse(ag::Tape& tape, const ag::Var& queries, const ag::Var& memory, const ag::Var& beta) {
  if (!memory.valid() || memory.rows() == 0) return queries;
  const ag::Var pooled = ag::matmul(beta, memory);  // P x d1
  return ag::add(queries, ag::matmul_nt(pooled, tape.parameter(params_.w_m)));
}

FusedPair enhance_pair(ag::Tape& tape, DedicatedAttention& attn, const ag::Var& subjects, const ag::Var& objects,
                       const ag::Var& contexts, const ag::Var& memory, Weighting mode, double dropout, Rng* rng) {
  FusedPair out;
  out.subject_beta = attn.weights(tape, subjects, memory, mode, dropout, rng);
  out.object_beta = attn.weights(tape, objects, memory, mode, dropout, rng);
  out.context_beta = attn.weights(tape, contexts, memory, mode, dropout, rng);
  out.subject = attn.fuse(tape, subjects, memory, out.subject_beta);
  out.object = attn.fuse(tape, objects, memory, out.object_beta);
  out.context = attn.fuse(tape, contexts, memory, out.context_beta);
  return out;
}

ag::Var combine_sentence_embeddings(ag::Tape& tape, DedicatedAttention& attn, const ag::Var& dep_sentences,
                                    const ag::Var& con_sentences, SentenceCombine mode, double dropout, Rng* rng) {
  if (!con_sentences.valid()) return dep_sentences;
  if (con_sentences.rows() != dep_sentences.rows()) throw Error("sentence embedding sets cover different sentence counts");
  if (mode == SentenceCombine::kPaired)
    return ag::add(dep_sentences, ag::matmul_nt(con_sentences, tape.parameter(attn.params().w_m)));
  const ag::Var beta = attn.weights(tape, dep_sentences, con_sentences, Weighting::kAttention, dropout, rng);
  return attn.fuse(tape, dep_sentences, con_sentences, beta);
}

Heads::Heads(const std::string& name, int dim, int classes, int block_size, Rng& rng) : classes_(classes), block_size_(block_size) {
  if (classes < 2) throw Error("relation head needs at least one relation besides TH");
  if (block_size < 0 || (block_size > 0 && dim % block_size != 0)) throw Error("head.block_size must divide the encoder dimension");
  params_.w_t1 = ag::Parameter(name + ".w_t1", xavier_uniform(dim, dim, rng));
  params_.w_t2 = ag::Parameter(name + ".w_t2", xavier_uniform(dim, dim, rng));
  params_.w_q1 = ag::Parameter(name + ".w_q1", xavier_uniform(dim, dim, rng));
  params_.w_q2 = ag::Parameter(name + ".w_q2", xavier_uniform(dim, dim, rng));
  if (block_size == 0) {
    params_.w_r = ag::Parameter(name + ".w_r", normal_matrix(dim, classes * dim, 1.0 / dim, rng));
  } else {
    params_.w_r = ag::Parameter(name + ".w_r", xavier_uniform(classes, dim * block_size, rng));
  }
  params_.b_r = ag::Parameter(name + ".b_r", ag::Matrix::Zero(1, classes));
  params_.w_g = ag::Parameter(name + ".w_g", xavier_uniform(dim, dim, rng));
  params_.b_g = ag::Parameter(name + ".b_g", ag::Matrix::Zero(1, 1));
}

ParamList Heads::parameters() {
  return {&params_.w_t1, &params_.w_t2, &params_.w_q1, &params_.w_q2, &params_.w_r, &params_.b_r, &params_.w_g, &params_.b_g};
}

ag::Var Heads::relation_logits(ag::Tape& tape, const ag::Var& subjects, const ag::Var& objects, const ag::Var& contexts) {
  const ag::Var zs = ag::tanh(
      ag::add(ag::matmul_nt(subjects, tape.parameter(params_.w_t1)), ag::matmul_nt(contexts, tape.parameter(params_.w_t2))));
  const ag::Var zo = ag::tanh(
      ag::add(ag::matmul_nt(objects, tape.parameter(params_.w_q1)), ag::matmul_nt(contexts, tape.parameter(params_.w_q2))));
  ag::Var logits;
  if (block_size_ == 0) {
    logits = ag::bilinear_forms(zs, tape.parameter(params_.w_r), zo, classes_);
  } else {
    logits = ag::matmul_nt(ag::grouped_outer(zs, zo, block_size_), tape.parameter(params_.w_r));
  }
  return ag::add_row(logits, tape.parameter(params_.b_r));
}

ag::Var Heads::evidence_logits(ag::Tape& tape, const ag::Var& sentences, const ag::Var& contexts) {
  const ag::Var proj = ag::matmul_nt(contexts, tape.parameter(params_.w_g));  // P x d
  return ag::add_scalar(ag::matmul_nt(proj, sentences), tape.parameter(params_.b_g));
}

ag::Var Heads::evidence_probabilities(ag::Tape& tape, const ag::Var& sentences, const ag::Var& contexts) {
  return ag::sigmoid(evidence_logits(tape, sentences, contexts));
}

}  // namespace larson::fusion
