#pragma once

// Contextual token encoders. Every encoder yields token representations H
// (T x d) and a row-stochastic, head-averaged token attention matrix A (T x T).

#include "larson/autograd.hpp"
#include "larson/init.hpp"

#include <memory>
#include <span>

namespace larson::encoder {

struct EncodedDocument {
  ag::Var hidden;     // H, T x d
  ag::Var attention;  // A, T x T
};

// Adapter surface for any encoder, including external pretrained ones.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual EncodedDocument encode(ag::Tape& tape, std::span<const int> token_ids) = 0;
  // The input embedding matrix E (vocab x d) as a tape leaf.
  virtual ag::Var embedding_table(ag::Tape& tape) = 0;
  virtual int dim() const = 0;
  virtual int max_len() const = 0;
  virtual ParamList parameters() = 0;
};

struct MockEncoderConfig {
  int vocab_size = 2;
  int dim = 64;
  int heads = 2;
  int layers = 1;
  // Layer whose head-averaged attention becomes A; negative counts from the end.
  int attention_layer = -1;
  int max_len = 1024;
};

// Trainable embedding table plus a fixed sinusoidal position signal feeding
// `layers` blocks of multi-head scaled dot-product attention and a two-layer
// feed-forward, each with a residual connection.
class MockEncoder final : public Encoder {
 public:
  MockEncoder(const MockEncoderConfig& config, Rng& rng);

  EncodedDocument encode(ag::Tape& tape, std::span<const int> token_ids) override;
  ag::Var embedding_table(ag::Tape& tape) override { return tape.parameter(embedding_); }
  int dim() const override { return config_.dim; }
  int max_len() const override { return config_.max_len; }
  ParamList parameters() override;

  const MockEncoderConfig& config() const { return config_; }

 private:
  struct Block {
    ag::Parameter wq, wk, wv, wo;
    ag::Parameter ff1, ff1_bias, ff2, ff2_bias;
  };

  MockEncoderConfig config_;
  ag::Parameter embedding_;
  std::vector<Block> blocks_;
};

ag::Matrix sinusoidal_positions(int length, int dim);

}  // namespace larson::encoder
