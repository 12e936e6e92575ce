#pragma once

// Flat `key = value` model/training configuration.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace larson {

struct ModelConfig {
  // encoder
  std::string encoder_kind = "mock";
  int encoder_dim = 64;
  int encoder_heads = 2;
  int encoder_layers = 1;
  int encoder_attention_layer = -1;
  int encoder_max_len = 1024;
  // dependency GAT
  int gat_layers = 3;
  int gat_heads = 1;
  int gat_dim = 256;
  double gat_leaky_slope = 0.2;
  bool dep_bidirectional = false;
  std::string context_entity_rows = "markers";  // markers | mention_tokens
  // constituency
  int tree_dim = 256;
  // fusion and heads
  int fusion_dim = 256;
  double fusion_dropout = 0.5;
  int head_block_size = 0;
  std::string sentence_combine_mode = "attention";  // attention | paired
  // ablations
  bool ablate_dependency = false;
  bool ablate_constituency = false;
  bool ablate_dynamic_fusion = false;
  // labels and loss
  std::vector<std::string> relations;
  double eta = 0.1;
  std::uint64_t seed = 42;
  // optimisation
  double lr_encoder = 3e-5;
  double lr_rest = 2e-4;
  double warmup_ratio = 0.06;
  double weight_decay = 0.0;
  double adam_eps = 1e-6;
  int epochs = 30;
  int batch_size = 4;
  int max_steps = 0;  // 0 = epochs decide

  static ModelConfig parse(std::string_view text);
  static ModelConfig load(const std::filesystem::path& path);

  // Applies one `key = value` assignment; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  // Canonical text: every key, fixed order. parse(to_text()) round-trips.
  std::string to_text() const;
  // FNV-1a over to_text().
  std::uint64_t hash() const;
};

}  // namespace larson
