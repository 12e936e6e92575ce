#include "larson/config.hpp"

#include "larson/autograd.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace larson {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw Error("config " + key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw Error("config " + key + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw Error("config " + key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error("config " + key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

void ModelConfig::set(const std::string& key, const std::string& value) {
  using Setter = std::function<void(ModelConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"encoder.kind", [](ModelConfig& c, const std::string& v) { c.encoder_kind = v; }},
      {"encoder.dim", [](ModelConfig& c, const std::string& v) { c.encoder_dim = to_int("encoder.dim", v); }},
      {"encoder.heads", [](ModelConfig& c, const std::string& v) { c.encoder_heads = to_int("encoder.heads", v); }},
      {"encoder.layers", [](ModelConfig& c, const std::string& v) { c.encoder_layers = to_int("encoder.layers", v); }},
      {"encoder.attention_layer",
       [](ModelConfig& c, const std::string& v) { c.encoder_attention_layer = to_int("encoder.attention_layer", v); }},
      {"encoder.max_len", [](ModelConfig& c, const std::string& v) { c.encoder_max_len = to_int("encoder.max_len", v); }},
      {"gat.layers", [](ModelConfig& c, const std::string& v) { c.gat_layers = to_int("gat.layers", v); }},
      {"gat.heads", [](ModelConfig& c, const std::string& v) { c.gat_heads = to_int("gat.heads", v); }},
      {"gat.dim", [](ModelConfig& c, const std::string& v) { c.gat_dim = to_int("gat.dim", v); }},
      {"gat.leaky_slope", [](ModelConfig& c, const std::string& v) { c.gat_leaky_slope = to_double("gat.leaky_slope", v); }},
      {"dep_bidirectional", [](ModelConfig& c, const std::string& v) { c.dep_bidirectional = to_bool("dep_bidirectional", v); }},
      {"context.entity_rows", [](ModelConfig& c, const std::string& v) { c.context_entity_rows = v; }},
      {"tree.dim", [](ModelConfig& c, const std::string& v) { c.tree_dim = to_int("tree.dim", v); }},
      {"fusion.dim", [](ModelConfig& c, const std::string& v) { c.fusion_dim = to_int("fusion.dim", v); }},
      {"fusion.dropout", [](ModelConfig& c, const std::string& v) { c.fusion_dropout = to_double("fusion.dropout", v); }},
      {"head.block_size", [](ModelConfig& c, const std::string& v) { c.head_block_size = to_int("head.block_size", v); }},
      {"sentence_combine.mode", [](ModelConfig& c, const std::string& v) { c.sentence_combine_mode = v; }},
      {"ablate.dependency", [](ModelConfig& c, const std::string& v) { c.ablate_dependency = to_bool("ablate.dependency", v); }},
      {"ablate.constituency",
       [](ModelConfig& c, const std::string& v) { c.ablate_constituency = to_bool("ablate.constituency", v); }},
      {"ablate.dynamic_fusion",
       [](ModelConfig& c, const std::string& v) { c.ablate_dynamic_fusion = to_bool("ablate.dynamic_fusion", v); }},
      {"relations",
       [](ModelConfig& c, const std::string& v) {
         c.relations.clear();
         std::string cur;
         std::istringstream in(v);
         while (std::getline(in, cur, ',')) {
           cur = trim(cur);
           if (!cur.empty()) c.relations.push_back(cur);
         }
       }},
      {"loss.eta", [](ModelConfig& c, const std::string& v) { c.eta = to_double("loss.eta", v); }},
      {"seed", [](ModelConfig& c, const std::string& v) { c.seed = to_u64("seed", v); }},
      {"optim.lr_encoder", [](ModelConfig& c, const std::string& v) { c.lr_encoder = to_double("optim.lr_encoder", v); }},
      {"optim.lr_rest", [](ModelConfig& c, const std::string& v) { c.lr_rest = to_double("optim.lr_rest", v); }},
      {"optim.warmup_ratio", [](ModelConfig& c, const std::string& v) { c.warmup_ratio = to_double("optim.warmup_ratio", v); }},
      {"optim.weight_decay", [](ModelConfig& c, const std::string& v) { c.weight_decay = to_double("optim.weight_decay", v); }},
      {"optim.adam_eps", [](ModelConfig& c, const std::string& v) { c.adam_eps = to_double("optim.adam_eps", v); }},
      {"optim.epochs", [](ModelConfig& c, const std::string& v) { c.epochs = to_int("optim.epochs", v); }},
      {"optim.batch_size", [](ModelConfig& c, const std::string& v) { c.batch_size = to_int("optim.batch_size", v); }},
      {"optim.max_steps", [](ModelConfig& c, const std::string& v) { c.max_steps = to_int("optim.max_steps", v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw Error("unknown config key '" + key + "'");
  it->second(*this, value);
}

ModelConfig ModelConfig::parse(std::string_view text) {
  ModelConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ModelConfig::validate() const {
  if (encoder_kind != "mock" && encoder_kind != "external") throw Error("encoder.kind must be mock or external");
  if (encoder_dim <= 0 || encoder_heads <= 0 || encoder_dim % encoder_heads != 0)
    throw Error("encoder.dim must be a positive multiple of encoder.heads");
  if (encoder_layers <= 0) throw Error("encoder.layers must be positive");
  if (encoder_max_len <= 0) throw Error("encoder.max_len must be positive");
  if (gat_layers <= 0 || gat_dim <= 0) throw Error("gat.layers and gat.dim must be positive");
  if (gat_heads != 1) throw Error("gat.heads must be 1");
  if (tree_dim <= 0 || fusion_dim <= 0) throw Error("tree.dim and fusion.dim must be positive");
  if (fusion_dropout < 0.0 || fusion_dropout >= 1.0) throw Error("fusion.dropout must lie in [0, 1)");
  if (head_block_size < 0 || (head_block_size > 0 && encoder_dim % head_block_size != 0))
    throw Error("head.block_size must divide encoder.dim");
  if (context_entity_rows != "markers" && context_entity_rows != "mention_tokens")
    throw Error("context.entity_rows must be markers or mention_tokens");
  if (sentence_combine_mode != "attention" && sentence_combine_mode != "paired")
    throw Error("sentence_combine.mode must be attention or paired");
  if (relations.empty()) throw Error("config needs a non-empty relations list");
  if (eta < 0.0) throw Error("loss.eta must be non-negative");
  if (batch_size < 1) throw Error("optim.batch_size must be at least 1");
  if (epochs < 1) throw Error("optim.epochs must be at least 1");
  if (max_steps < 0) throw Error("optim.max_steps must be non-negative");
  if (warmup_ratio < 0.0 || warmup_ratio > 1.0) throw Error("optim.warmup_ratio must lie in [0, 1]");
}

std::string ModelConfig::to_text() const {
  std::ostringstream s;
  auto b = [](bool v) { return v ? "true" : "false"; };
  s << "encoder.kind = " << encoder_kind << "\n";
  s << "encoder.dim = " << encoder_dim << "\n";
  s << "encoder.heads = " << encoder_heads << "\n";
  s << "encoder.layers = " << encoder_layers << "\n";
  s << "encoder.attention_layer = " << encoder_attention_layer << "\n";
  s << "encoder.max_len = " << encoder_max_len << "\n";
  s << "gat.layers = " << gat_layers << "\n";
  s << "gat.heads = " << gat_heads << "\n";
  s << "gat.dim = " << gat_dim << "\n";
  s << "gat.leaky_slope = " << fmt(gat_leaky_slope) << "\n";
  s << "dep_bidirectional = " << b(dep_bidirectional) << "\n";
  s << "context.entity_rows = " << context_entity_rows << "\n";
  s << "tree.dim = " << tree_dim << "\n";
  s << "fusion.dim = " << fusion_dim << "\n";
  s << "fusion.dropout = " << fmt(fusion_dropout) << "\n";
  s << "head.block_size = " << head_block_size << "\n";
  s << "sentence_combine.mode = " << sentence_combine_mode << "\n";
  s << "ablate.dependency = " << b(ablate_dependency) << "\n";
  s << "ablate.constituency = " << b(ablate_constituency) << "\n";
  s << "ablate.dynamic_fusion = " << b(ablate_dynamic_fusion) << "\n";
  s << "relations = ";
  for (size_t i = 0; i < relations.size(); ++i) s << (i ? "," : "") << relations[i];
  s << "\n";
  s << "loss.eta = " << fmt(eta) << "\n";
  s << "seed = " << seed << "\n";
  s << "optim.lr_encoder = " << fmt(lr_encoder) << "\n";
  s << "optim.lr_rest = " << fmt(lr_rest) << "\n";
  s << "optim.warmup_ratio = " << fmt(warmup_ratio) << "\n";
  s << "optim.weight_decay = " << fmt(weight_decay) << "\n";
  s << "optim.adam_eps = " << fmt(adam_eps) << "\n";
  s << "optim.epochs = " << epochs << "\n";
  s << "optim.batch_size = " << batch_size << "\n";
  s << "optim.max_steps = " << max_steps << "\n";
  return s.str();
}

std::uint64_t ModelConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace larson
