#include "larson/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

namespace larson::training {

using json = nlohmann::json;

long warmup_steps(long total, double ratio) { return static_cast<long>(std::ceil(ratio * static_cast<double>(total))); }

double schedule_factor(long step, long total, long warmup) {
  if (step < warmup) return static_cast<double>(step) / static_cast<double>(std::max(1L, warmup));
  if (total <= warmup) return 1.0;
  return std::max(0.0, static_cast<double>(total - step) / static_cast<double>(total - warmup));
}

AdamW::AdamW(std::vector<Group> groups, double weight_decay, double eps, double beta1, double beta2)
    : weight_decay_(weight_decay), eps_(eps), beta1_(beta1), beta2_(beta2) {
  for (auto& g : groups)
    for (auto* p : g.params)
      slots_.push_back({p, g.lr, ag::Matrix::Zero(p->value.rows(), p->value.cols()), ag::Matrix::Zero(p->value.rows(), p->value.cols())});
}

void AdamW::step(double lr_factor) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& s : slots_) {
    const double lr = s.lr * lr_factor;
    s.m = beta1_ * s.m + (1.0 - beta1_) * s.p->grad;
    s.v = beta2_ * s.v + (1.0 - beta2_) * s.p->grad.cwiseProduct(s.p->grad);
    if (weight_decay_ > 0.0) s.p->value *= 1.0 - lr * weight_decay_;
    s.p->value.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + eps_);
  }
}

BatchLoss accumulate_batch(pipeline::Model& model, const std::vector<const pipeline::PreparedDocument*>& batch, Rng* dropout_rng) {
  for (auto* p : model.parameters()) p->zero_grad();
  long pairs = 0;
  long positive = 0;
  for (const auto* d : batch) {
    pairs += static_cast<long>(d->pairs.size());
    positive += static_cast<long>(d->positive_pairs.size());
  }
  const double eta = model.config().eta;
  BatchLoss out;
  out.has_evidence = positive > 0;
  for (const auto* d : batch) {
    ag::Tape tape;
    const pipeline::DocumentOutput fwd = model.forward(tape, *d, dropout_rng);
    const pipeline::LossTerms terms = model.losses(fwd, *d);
    ag::Var root = ag::scale(terms.relation, 1.0 / static_cast<double>(pairs));
    double evi = 0.0;
    if (terms.evidence.valid()) {
      evi = terms.evidence.scalar();
      root = ag::add(root, ag::scale(terms.evidence, eta / static_cast<double>(positive)));
    }
    const double rel = terms.relation.scalar();
    if (!std::isfinite(rel) || !std::isfinite(evi))
      throw Error("non-finite loss on document '" + d->doc->doc_id + "' (relation " + std::to_string(rel) + ", evidence " +
                  std::to_string(evi) + ")");
    tape.backward(root);
    out.relation += rel / static_cast<double>(pairs);
    if (positive > 0) out.evidence += evi / static_cast<double>(positive);
  }
  out.total = objectives::total_loss(out.relation, out.has_evidence ? std::optional<double>(out.evidence) : std::nullopt, eta);
  return out;
}

namespace {

// Half-open word span of every kept node of one tree.
std::vector<std::pair<int, int>> kept_spans(const syntax::ConstituencyTree& tree) {
  std::vector<std::pair<int, int>> span(tree.nodes.size(), {1 << 30, -1});
  for (const auto& level : syntax::tree_levels(tree))
    for (int n : level) {
      auto& s = span[static_cast<size_t>(n)];
      if (tree.is_leaf(n)) {
        const int w = tree.leaf_word[static_cast<size_t>(n)];
        s = {w, w + 1};
      }
      for (int c : tree.nodes[static_cast<size_t>(n)].children) {
        s.first = std::min(s.first, span[static_cast<size_t>(c)].first);
        s.second = std::max(s.second, span[static_cast<size_t>(c)].second);
      }
    }
  std::vector<std::pair<int, int>> out;
  for (int n : tree.kept_nodes) out.push_back(span[static_cast<size_t>(n)]);
  return out;
}

json row_of(const ag::Var& m, ag::Index r) {
  json a = json::array();
  for (ag::Index c = 0; c < m.cols(); ++c) a.push_back(m.value()(r, c));
  return a;
}

void dump_attention(std::ostream& out, const pipeline::PreparedDocument& doc, const pipeline::DocumentOutput& fwd) {
  json spans = json::array();
  for (size_t k = 0; k < doc.forest.trees.size(); ++k)
    for (const auto& [b, e] : kept_spans(doc.forest.trees[k])) spans.push_back({{"sentence", k}, {"start", b}, {"end", e}});
  for (size_t p = 0; p < doc.pairs.size(); ++p) {
    json line;
    line["doc_id"] = doc.doc->doc_id;
    line["subject"] = doc.pairs[p].first;
    line["object"] = doc.pairs[p].second;
    line["subsentences"] = spans;
    const bool has = fwd.fused.subject_beta.valid();
    const auto r = static_cast<ag::Index>(p);
    line["beta_subject"] = has ? row_of(fwd.fused.subject_beta, r) : json::array();
    line["beta_object"] = has ? row_of(fwd.fused.object_beta, r) : json::array();
    line["beta_context"] = has ? row_of(fwd.fused.context_beta, r) : json::array();
    out << line.dump() << "\n";
  }
}

}  // namespace

std::vector<objectives::PredictedFact> predict(pipeline::Model& model, const std::vector<pipeline::PreparedDocument>& docs,
                                               std::ostream* attention_dump) {
  std::vector<objectives::PredictedFact> out;
  for (const auto& d : docs) {
    ag::Tape tape;
    const pipeline::DocumentOutput fwd = model.forward(tape, d, nullptr);
    if (attention_dump != nullptr) dump_attention(*attention_dump, d, fwd);
    const ag::Matrix& logits = fwd.logits.value();
    const ag::Matrix& probs = fwd.evidence_probs.value();
    for (size_t p = 0; p < d.pairs.size(); ++p) {
      const auto r = static_cast<ag::Index>(p);
      std::vector<double> row(static_cast<size_t>(logits.cols()));
      for (ag::Index c = 0; c < logits.cols(); ++c) row[static_cast<size_t>(c)] = logits(r, c);
      const std::vector<int> cols = objectives::predict_relations(row);
      if (cols.empty()) continue;
      std::vector<int> evidence;
      for (ag::Index i = 0; i < probs.cols(); ++i)
        if (probs(r, i) > 0.5) evidence.push_back(static_cast<int>(i));
      for (int c : cols) out.push_back({d.doc->doc_id, d.pairs[p].first, d.pairs[p].second, c - 1, evidence});
    }
  }
  return out;
}

objectives::Metrics evaluate(pipeline::Model& model, const std::vector<pipeline::PreparedDocument>& docs, const corpus::Corpus& gold,
                             const objectives::TrainFactSet& train_facts, const corpus::RelationVocab& relations,
                             std::ostream* attention_dump) {
  const auto preds = predict(model, docs, attention_dump);
  return objectives::compute_metrics(preds, gold, train_facts, relations);
}

std::vector<pipeline::PreparedDocument> prepare_corpus(const corpus::Corpus& corpus, const pipeline::TokenVocab& vocab,
                                                       const ModelConfig& config) {
  std::vector<pipeline::PreparedDocument> out;
  out.reserve(corpus.size());
  for (const auto& d : corpus) out.push_back(pipeline::prepare_document(d, vocab, config));
  return out;
}

std::vector<ag::Matrix> snapshot(pipeline::Model& model) {
  std::vector<ag::Matrix> out;
  for (auto* p : model.parameters()) out.push_back(p->value);
  return out;
}

void restore(pipeline::Model& model, const std::vector<ag::Matrix>& values) {
  const auto params = model.parameters();
  if (params.size() != values.size()) throw Error("parameter count mismatch on restore");
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

TrainResult train(pipeline::Model& model, const pipeline::TokenVocab& vocab, const corpus::Corpus& train_corpus,
                  const corpus::Corpus& dev_corpus, const corpus::RelationVocab& relations, const TrainOptions& options) {
  const ModelConfig& cfg = model.config();
  if (train_corpus.empty()) throw Error("training corpus is empty");
  const auto train_docs = prepare_corpus(train_corpus, vocab, cfg);
  const auto dev_docs = prepare_corpus(dev_corpus, vocab, cfg);
  const auto train_facts = objectives::TrainFactSet::from_corpus(train_corpus, relations);

  const long per_epoch = static_cast<long>((train_docs.size() + static_cast<size_t>(cfg.batch_size) - 1) / static_cast<size_t>(cfg.batch_size));
  const long total = cfg.max_steps > 0 ? cfg.max_steps : per_epoch * cfg.epochs;
  const int epochs = static_cast<int>((total + per_epoch - 1) / per_epoch);
  const long warmup = warmup_steps(total, cfg.warmup_ratio);

  AdamW opt({{model.encoder_parameters(), cfg.lr_encoder}, {model.rest_parameters(), cfg.lr_rest}}, cfg.weight_decay, cfg.adam_eps);
  Rng shuffle_rng(cfg.seed ^ 0x5eedULL);
  Rng dropout_rng(cfg.seed ^ 0xd70bULL);

  TrainResult result;
  std::vector<ag::Matrix> best;
  std::vector<size_t> order(train_docs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  long step = 0;
  for (int epoch = 1; epoch <= epochs && step < total; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (size_t b = 0; b < order.size() && step < total; b += static_cast<size_t>(cfg.batch_size)) {
      std::vector<const pipeline::PreparedDocument*> batch;
      for (size_t i = b; i < std::min(order.size(), b + static_cast<size_t>(cfg.batch_size)); ++i) batch.push_back(&train_docs[order[i]]);
      const BatchLoss loss = accumulate_batch(model, batch, &dropout_rng);
      const double factor = schedule_factor(step, total, warmup);
      opt.step(factor);
      ++step;
      result.steps.push_back({step, loss.total, factor});
    }
    const bool last = epoch == epochs || step >= total;
    if (!last && epoch % std::max(1, options.eval_every) != 0) continue;
    const objectives::Metrics m = evaluate(model, dev_docs, dev_corpus, train_facts, relations);
    result.epochs.push_back({epoch, step, m.f1, m.evi_f1});
    if (options.log != nullptr)
      *options.log << "epoch " << epoch << " step " << step << " loss " << result.steps.back().loss << " dev_f1 " << m.f1 << " dev_evi_f1 " << m.evi_f1 << "\n";
    if (m.f1 >= result.best_dev_f1) {  // ties keep the later checkpoint
      result.best_dev_f1 = m.f1;
      result.best_step = step;
      result.best_dev = m;
      best = snapshot(model);
      if (!options.out_dir.empty()) save_checkpoint(options.out_dir, model, vocab, m.f1);
    }
  }
  if (!options.out_dir.empty()) train_facts.save(options.out_dir / "train_facts.tsv");
  if (options.restore_best && !best.empty()) restore(model, best);
  return result;
}

// ---- checkpoints ---------------------------------------------------------

namespace {

void write_blob(const std::filesystem::path& path, const ParamList& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  out.write("LRSN", 4);
  put_u64(params.size());
  for (const auto* p : params) {
    put_u64(p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_u64(static_cast<std::uint64_t>(p->value.rows()));
    put_u64(static_cast<std::uint64_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()), static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(p->value.size())));
  }
  if (!out) throw Error("failed writing " + path.string());
}

void read_blob(const std::filesystem::path& path, const ParamList& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  auto get_u64 = [&]() {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw Error("truncated checkpoint " + path.string());
    return v;
  };
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "LRSN") throw Error("not a checkpoint blob: " + path.string());
  if (get_u64() != params.size()) throw Error("checkpoint parameter count does not match the model");
  for (auto* p : params) {
    std::string name(get_u64(), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto rows = static_cast<ag::Index>(get_u64());
    const auto cols = static_cast<ag::Index>(get_u64());
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols())
      throw Error("checkpoint parameter '" + name + "' does not match model parameter '" + p->name + "'");
    in.read(reinterpret_cast<char*>(p->value.data()), static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(p->value.size())));
    if (!in) throw Error("truncated checkpoint " + path.string());
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, pipeline::Model& model, const pipeline::TokenVocab& vocab, double dev_f1) {
  std::filesystem::create_directories(dir);
  write_blob(dir / "model.bin", model.parameters());
  json meta;
  meta["config"] = model.config().to_text();
  meta["config_hash"] = model.config().hash();
  meta["relations"] = model.config().relations;
  meta["tokens"] = vocab.pieces();
  meta["dev_f1"] = dev_f1;
  std::ofstream out(dir / "meta.json");
  if (!out) throw Error("cannot write " + (dir / "meta.json").string());
  out << meta.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw Error("cannot open " + (dir / "meta.json").string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("malformed checkpoint metadata: " + std::string(e.what()));
  }
  Checkpoint c;
  c.config = ModelConfig::parse(meta.at("config").get<std::string>());
  if (c.config.hash() != meta.at("config_hash").get<std::uint64_t>()) throw Error("checkpoint config hash mismatch");
  if (c.config.relations != meta.at("relations").get<std::vector<std::string>>())
    throw Error("checkpoint relation vocabulary does not match its config");
  c.vocab = pipeline::TokenVocab(meta.at("tokens").get<std::vector<std::string>>());
  c.dev_f1 = meta.at("dev_f1").get<double>();
  c.model = std::make_unique<pipeline::Model>(c.config, c.vocab.size());
  read_blob(dir / "model.bin", c.model->parameters());
  return c;
}

}  // namespace larson::training
