#include "larson/encoder.hpp"

#include <array>
#include <cmath>
#include <string>

namespace larson::encoder {

ag::Matrix sinusoidal_positions(int length, int dim) {
  ag::Matrix p(length, dim);
  for (int pos = 0; pos < length; ++pos)
    for (int i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      p(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  return p;
}

MockEncoder::MockEncoder(const MockEncoderConfig& config, Rng& rng) : config_(config) {
  if (config_.dim <= 0 || config_.heads <= 0 || config_.dim % config_.heads != 0)
    throw Error("encoder.dim must be a positive multiple of encoder.heads");
  if (config_.layers <= 0) throw Error("encoder.layers must be positive");
  if (config_.attention_layer >= config_.layers || config_.attention_layer < -config_.layers)
    throw Error("encoder.attention_layer out of range");
  if (config_.vocab_size <= 0) throw Error("encoder vocabulary is empty");
  const int d = config_.dim;
  embedding_ = ag::Parameter("encoder.embedding", normal_matrix(config_.vocab_size, d, 0.5, rng));
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "encoder.block" + std::to_string(l) + ".";
    Block b;
    b.wq = ag::Parameter(p + "wq", xavier_uniform(d, d, rng));
    b.wk = ag::Parameter(p + "wk", xavier_uniform(d, d, rng));
    b.wv = ag::Parameter(p + "wv", xavier_uniform(d, d, rng));
    b.wo = ag::Parameter(p + "wo", xavier_uniform(d, d, rng));
    b.ff1 = ag::Parameter(p + "ff1", xavier_uniform(2 * d, d, rng));
    b.ff1_bias = ag::Parameter(p + "ff1_bias", ag::Matrix::Zero(1, 2 * d));
    b.ff2 = ag::Parameter(p + "ff2", xavier_uniform(d, 2 * d, rng));
    b.ff2_bias = ag::Parameter(p + "ff2_bias", ag::Matrix::Zero(1, d));
    blocks_.push_back(std::move(b));
  }
}

ParamList MockEncoder::parameters() {
  ParamList out{&embedding_};
  for (Block& b : blocks_)
    for (ag::Parameter* p : {&b.wq, &b.wk, &b.wv, &b.wo, &b.ff1, &b.ff1_bias, &b.ff2, &b.ff2_bias}) out.push_back(p);
  return out;
}

EncodedDocument MockEncoder::encode(ag::Tape& tape, std::span<const int> token_ids) {
  const int T = static_cast<int>(token_ids.size());
  if (T < 1) throw Error("cannot encode an empty token sequence");
  if (T > config_.max_len)
    throw Error("document has " + std::to_string(T) + " tokens, above encoder.max_len " + std::to_string(config_.max_len));
  std::vector<ag::Index> ids;
  ids.reserve(token_ids.size());
  for (int id : token_ids) {
    if (id < 0 || id >= config_.vocab_size) throw Error("token id " + std::to_string(id) + " outside the vocabulary");
    ids.push_back(id);
  }

  const int d = config_.dim;
  const int dh = d / config_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const int keep_layer = config_.attention_layer < 0 ? config_.layers + config_.attention_layer : config_.attention_layer;

  ag::Var x = ag::add(ag::gather_rows(tape.parameter(embedding_), ids), tape.constant(sinusoidal_positions(T, d)));
  ag::Var attention;
  for (int l = 0; l < config_.layers; ++l) {
    Block& b = blocks_[static_cast<size_t>(l)];
    const ag::Var q = ag::matmul_nt(x, tape.parameter(b.wq));
    const ag::Var k = ag::matmul_nt(x, tape.parameter(b.wk));
    const ag::Var v = ag::matmul_nt(x, tape.parameter(b.wv));
    std::vector<ag::Var> heads;
    ag::Var prob_sum;
    for (int h = 0; h < config_.heads; ++h) {
      const ag::Var qh = ag::slice_cols(q, h * dh, dh);
      const ag::Var kh = ag::slice_cols(k, h * dh, dh);
      const ag::Var vh = ag::slice_cols(v, h * dh, dh);
      const ag::Var probs = ag::softmax_rows(ag::scale(ag::matmul_nt(qh, kh), inv_sqrt));
      heads.push_back(ag::matmul(probs, vh));
      if (l == keep_layer) prob_sum = prob_sum.valid() ? ag::add(prob_sum, probs) : probs;
    }
    if (l == keep_layer) attention = ag::scale(prob_sum, 1.0 / static_cast<double>(config_.heads));
    const ag::Var mixed = ag::matmul_nt(ag::concat_cols(heads), tape.parameter(b.wo));
    x = ag::add(x, mixed);
    ag::Var ff = ag::gelu(ag::add_row(ag::matmul_nt(x, tape.parameter(b.ff1)), tape.parameter(b.ff1_bias)));
    ff = ag::add_row(ag::matmul_nt(ff, tape.parameter(b.ff2)), tape.parameter(b.ff2_bias));
    x = ag::add(x, ff);
  }
  return {x, attention};
}

}  // namespace larson::encoder
