#include "larson/pipeline.hpp"

#include "larson/objectives.hpp"

#include <algorithm>

namespace larson::pipeline {

TokenVocab::TokenVocab() {
  add("[UNK]");
  add(corpus::kMarker);
}

TokenVocab::TokenVocab(std::vector<std::string> pieces) {
  if (pieces.size() < 2 || pieces[0] != "[UNK]" || pieces[1] != corpus::kMarker)
    throw Error("token vocabulary must start with [UNK] and the marker");
  for (const auto& p : pieces) add(p);
}

TokenVocab TokenVocab::build(const corpus::Corpus& corpus, const corpus::Tokenizer& tokenizer) {
  TokenVocab v;
  for (const auto& doc : corpus)
    for (const auto& sent : doc.sentences)
      for (const auto& w : sent)
        for (const auto& p : tokenizer(w)) v.add(p);
  return v;
}

void TokenVocab::add(const std::string& piece) {
  if (index_.count(piece) != 0) return;
  index_.emplace(piece, static_cast<int>(pieces_.size()));
  pieces_.push_back(piece);
}

int TokenVocab::id(const std::string& piece) const {
  const auto it = index_.find(piece);
  return it == index_.end() ? kUnknown : it->second;
}

corpus::Tokenizer default_tokenizer() {
  return [](const std::string& w) { return corpus::chunk_tokenize(w); };
}

PreparedDocument prepare_document(const corpus::Document& doc, const TokenVocab& vocab, const ModelConfig& config,
                                  const corpus::Tokenizer& tokenizer) {
  PreparedDocument p;
  p.doc = &doc;
  p.marked = corpus::insert_mention_markers(doc, tokenizer);
  const int T = static_cast<int>(p.marked.tokens.size());
  if (T > config.encoder_max_len)
    throw Error("document '" + doc.doc_id + "' has " + std::to_string(T) + " tokens, above encoder.max_len " +
                std::to_string(config.encoder_max_len));

  p.token_ids.reserve(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t)
    p.token_ids.push_back(p.marked.is_marker[static_cast<size_t>(t)] ? TokenVocab::kMarkerId : vocab.id(p.marked.tokens[static_cast<size_t>(t)]));

  std::vector<syntax::DependencyGraph> graphs;
  std::vector<syntax::ConstituencyTree> trees;
  for (size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& words = p.marked.alignment.words[s];
    try {
      graphs.push_back(syntax::build_dependency_graph(doc.dep_parses[s], words, p.marked.sentence_spans[s], config.dep_bidirectional));
      trees.push_back(syntax::build_constituency_tree(doc.con_parses[s], words));
    } catch (const Error& e) {
      throw Error("document '" + doc.doc_id + "' sentence " + std::to_string(s) + ": " + e.what());
    }
    std::vector<std::vector<int>> ids;
    for (const auto& toks : words) {
      std::vector<int> w;
      for (int t : toks) w.push_back(p.token_ids[static_cast<size_t>(t)]);
      ids.push_back(std::move(w));
    }
    p.leaf_tokens.push_back(std::move(ids));
  }
  p.dep_graph = syntax::merge_graphs(graphs);
  for (size_t s = 0; s < graphs.size(); ++s)
    if (p.dep_graph.segment_offsets[s] != p.marked.sentence_spans[s].begin) throw Error("sentence spans do not tile the document");
  p.forest = subsentence::Forest(std::move(trees));

  for (const auto& ms : p.marked.entities) {
    std::vector<ag::Index> markers;
    std::vector<ag::Index> rows;
    for (const auto& m : ms) {
      markers.push_back(m.marker_pos);
      const auto& words = p.marked.alignment.words[static_cast<size_t>(m.sent_index)];
      for (int w = m.start; w < m.end; ++w)
        for (int t : words[static_cast<size_t>(w)]) rows.push_back(t);
    }
    p.entity_markers.push_back(markers);
    p.entity_context_rows.push_back(config.context_entity_rows == "markers" ? markers : rows);
  }

  const int n = doc.entity_count();
  std::vector<std::vector<int>> pair_index(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(n), -1));
  for (int s = 0; s < n; ++s)
    for (int o = 0; o < n; ++o) {
      if (s == o) continue;
      pair_index[static_cast<size_t>(s)][static_cast<size_t>(o)] = static_cast<int>(p.pairs.size());
      p.pairs.emplace_back(s, o);
    }
  p.positives.assign(p.pairs.size(), {});
  std::vector<std::vector<int>> evidence(p.pairs.size());
  for (const auto& f : doc.facts) {
    const int k = pair_index[static_cast<size_t>(f.subject)][static_cast<size_t>(f.object)];
    auto& pos = p.positives[static_cast<size_t>(k)];
    if (std::find(pos.begin(), pos.end(), f.relation + 1) == pos.end()) pos.push_back(f.relation + 1);
    evidence[static_cast<size_t>(k)].insert(evidence[static_cast<size_t>(k)].end(), f.evidence.begin(), f.evidence.end());
  }
  for (size_t k = 0; k < p.pairs.size(); ++k) {
    std::sort(p.positives[k].begin(), p.positives[k].end());
    if (!p.positives[k].empty()) p.positive_pairs.push_back(static_cast<ag::Index>(k));
  }
  p.evidence_bits = ag::Matrix::Zero(static_cast<ag::Index>(p.positive_pairs.size()), doc.sentence_count());
  for (size_t r = 0; r < p.positive_pairs.size(); ++r)
    for (int s : evidence[static_cast<size_t>(p.positive_pairs[r])]) p.evidence_bits(static_cast<ag::Index>(r), s) = 1.0;
  return p;
}

Model::Model(const ModelConfig& config, int vocab_size, std::unique_ptr<encoder::Encoder> external) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  if (external) {
    encoder_ = std::move(external);
  } else {
    if (config_.encoder_kind != "mock") throw Error("encoder.kind = external requires an encoder adapter");
    encoder::MockEncoderConfig ec;
    ec.vocab_size = vocab_size;
    ec.dim = config_.encoder_dim;
    ec.heads = config_.encoder_heads;
    ec.layers = config_.encoder_layers;
    ec.attention_layer = config_.encoder_attention_layer;
    ec.max_len = config_.encoder_max_len;
    encoder_ = std::make_unique<encoder::MockEncoder>(ec, rng);
  }
  const int d = encoder_->dim();
  const int classes = static_cast<int>(config_.relations.size()) + 1;
  dep_gat_ = dep::GatStack("dep_gat", d, config_.gat_dim, config_.gat_layers, config_.gat_leaky_slope, rng);
  w_z_ = ag::Parameter("dep.w_z", xavier_uniform(config_.gat_dim, d, rng));
  tree_lstm_ = subsentence::TreeLstm("tree_lstm", d, config_.tree_dim, rng);
  con_gat_ = dep::GatStack("con_gat", config_.tree_dim, config_.gat_dim, config_.gat_layers, config_.gat_leaky_slope, rng);
  pair_fusion_ = fusion::DedicatedAttention("pair_fusion", d, config_.tree_dim, config_.fusion_dim, rng);
  sentence_fusion_ = fusion::DedicatedAttention("sentence_fusion", d, config_.gat_dim, config_.fusion_dim, rng);
  heads_ = fusion::Heads("head", d, classes, config_.head_block_size, rng);
}

ParamList Model::rest_parameters() {
  ParamList out = dep_gat_.parameters();
  out.push_back(&w_z_);
  for (auto* p : tree_lstm_.parameters()) out.push_back(p);
  for (auto* p : con_gat_.parameters()) out.push_back(p);
  for (auto* p : pair_fusion_.parameters()) out.push_back(p);
  for (auto* p : sentence_fusion_.parameters()) out.push_back(p);
  for (auto* p : heads_.parameters()) out.push_back(p);
  return out;
}

ParamList Model::parameters() {
  ParamList out = encoder_parameters();
  for (auto* p : rest_parameters()) out.push_back(p);
  return out;
}

DocumentOutput Model::forward(ag::Tape& tape, const PreparedDocument& doc, Rng* dropout_rng) {
  if (doc.pairs.empty()) throw Error("document '" + doc.doc->doc_id + "' has fewer than two entities");
  const auto& spans = doc.marked.sentence_spans;
  const encoder::EncodedDocument enc = encoder_->encode(tape, doc.token_ids);

  const dep::RefinedText refined = config_.ablate_dependency
                                       ? dep::skip_dependency(enc.hidden, spans)
                                       : dep::refine_with_dependency(tape, enc.hidden, doc.dep_graph, dep_gat_, tape.parameter(w_z_), spans);

  DocumentOutput out;
  std::vector<ag::Var> ents;
  for (const auto& markers : doc.entity_markers) ents.push_back(dep::pool_entity(refined.complemented, markers));
  out.entities = ag::concat_rows(ents);
  out.contexts = dep::localized_contexts(refined.complemented, enc.attention, doc.entity_context_rows, doc.pairs);

  std::vector<ag::Index> subj;
  std::vector<ag::Index> obj;
  for (const auto& [s, o] : doc.pairs) {
    subj.push_back(s);
    obj.push_back(o);
  }
  const ag::Var es = ag::gather_rows(out.entities, subj);
  const ag::Var eo = ag::gather_rows(out.entities, obj);

  const double dropout = dropout_rng != nullptr ? config_.fusion_dropout : 0.0;
  if (config_.ablate_constituency) {
    out.fused = fusion::FusedPair{es, eo, out.contexts, {}, {}, {}};
    out.sentences = refined.sentence_embeds;
  } else {
    const ag::Var inputs = subsentence::leaf_inputs(doc.forest, encoder_->embedding_table(tape), doc.leaf_tokens);
    const subsentence::TreeStates states = tree_lstm_.forward(tape, doc.forest, inputs);
    out.subsentences = subsentence::collect_subsentences(states, doc.forest);
    const ag::Var con_sentences = subsentence::constituency_sentence_embeddings(tape, doc.forest, states, con_gat_);
    const auto weighting = config_.ablate_dynamic_fusion ? fusion::Weighting::kUniform : fusion::Weighting::kAttention;
    out.fused = fusion::enhance_pair(tape, pair_fusion_, es, eo, out.contexts, out.subsentences, weighting, dropout, dropout_rng);
    const auto combine = (config_.ablate_dynamic_fusion || config_.sentence_combine_mode == "paired") ? fusion::SentenceCombine::kPaired
                                                                                                       : fusion::SentenceCombine::kAttention;
    out.sentences =
        fusion::combine_sentence_embeddings(tape, sentence_fusion_, refined.sentence_embeds, con_sentences, combine, dropout, dropout_rng);
  }

  out.logits = heads_.relation_logits(tape, out.fused.subject, out.fused.object, out.fused.context);
  out.evidence_logits = heads_.evidence_logits(tape, out.sentences, out.fused.context);
  out.evidence_probs = ag::sigmoid(out.evidence_logits);
  return out;
}

LossTerms Model::losses(const DocumentOutput& out, const PreparedDocument& doc) const {
  LossTerms t;
  t.pairs = static_cast<int>(doc.pairs.size());
  t.positive_pairs = static_cast<int>(doc.positive_pairs.size());
  t.relation = objectives::atl_loss(out.logits, doc.positives);
  if (!doc.positive_pairs.empty())
    t.evidence = objectives::evidence_loss_logits(ag::gather_rows(out.evidence_logits, doc.positive_pairs), doc.evidence_bits);
  return t;
}

}  // namespace larson::pipeline
