#include "larson/objectives.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace larson::objectives {

namespace {

bool contains_col(std::span<const int> cols, int c) { return std::find(cols.begin(), cols.end(), c) != cols.end(); }

void check_positives(std::span<const double> logits, std::span<const int> positives) {
  for (int p : positives)
    if (p <= kThreshold || p >= static_cast<int>(logits.size())) throw Error("positive label column out of range");
}

// logsumexp over the columns selected by `in`.
template <typename Pred>
double masked_lse(std::span<const double> logits, Pred in) {
  double m = -std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < logits.size(); ++c)
    if (in(static_cast<int>(c))) m = std::max(m, logits[c]);
  double s = 0.0;
  for (size_t c = 0; c < logits.size(); ++c)
    if (in(static_cast<int>(c))) s += std::exp(logits[c] - m);
  return m + std::log(s);
}

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }
double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

double atl_loss(std::span<const double> logits, std::span<const int> positives) {
  check_positives(logits, positives);
  const double th = logits[kThreshold];
  const double neg_lse = masked_lse(logits, [&](int c) { return !contains_col(positives, c); });
  double loss = neg_lse - th;
  if (!positives.empty()) {
    const double pos_lse = masked_lse(logits, [&](int c) { return c == kThreshold || contains_col(positives, c); });
    for (int p : positives) loss += pos_lse - logits[static_cast<size_t>(p)];
  }
  return loss;
}

std::vector<double> atl_loss_grad(std::span<const double> logits, std::span<const int> positives) {
  check_positives(logits, positives);
  std::vector<double> g(logits.size(), 0.0);
  const double neg_lse = masked_lse(logits, [&](int c) { return !contains_col(positives, c); });
  for (size_t c = 0; c < logits.size(); ++c)
    if (!contains_col(positives, static_cast<int>(c))) g[c] += std::exp(logits[c] - neg_lse);
  g[kThreshold] -= 1.0;
  if (!positives.empty()) {
    const double n_pos = static_cast<double>(positives.size());
    const double pos_lse = masked_lse(logits, [&](int c) { return c == kThreshold || contains_col(positives, c); });
    for (size_t c = 0; c < logits.size(); ++c) {
      const bool pos = contains_col(positives, static_cast<int>(c));
      if (c == kThreshold || pos) g[c] += n_pos * std::exp(logits[c] - pos_lse);
      if (pos) g[c] -= 1.0;
    }
  }
  return g;
}

double evidence_loss(std::span<const double> probs, std::span<const int> bits) {
  if (probs.size() != bits.size()) throw Error("evidence_loss: probability and label counts differ");
  double loss = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    loss -= bits[i] != 0 ? std::log(p) : std::log(1.0 - p);
  }
  return loss;
}

double total_loss(double relation_loss, std::optional<double> evidence, double eta) {
  if (!evidence) return relation_loss;
  return relation_loss + eta * *evidence;
}

std::vector<int> predict_relations(std::span<const double> logits) {
  std::vector<int> out;
  for (size_t c = 1; c < logits.size(); ++c)
    if (logits[c] > logits[kThreshold]) out.push_back(static_cast<int>(c));
  return out;
}

ag::Var atl_loss(const ag::Var& logits, const std::vector<std::vector<int>>& positives) {
  const ag::Matrix& l = logits.value();
  if (static_cast<ag::Index>(positives.size()) != l.rows()) throw Error("atl_loss: one label set per row required");
  ag::Matrix grad(l.rows(), l.cols());
  double total = 0.0;
  std::vector<double> row(static_cast<size_t>(l.cols()));
  for (ag::Index p = 0; p < l.rows(); ++p) {
    for (ag::Index c = 0; c < l.cols(); ++c) row[static_cast<size_t>(c)] = l(p, c);
    total += atl_loss(row, positives[static_cast<size_t>(p)]);
    const auto g = atl_loss_grad(row, positives[static_cast<size_t>(p)]);
    for (ag::Index c = 0; c < l.cols(); ++c) grad(p, c) = g[static_cast<size_t>(c)];
  }
  ag::Tape& t = logits.tape();
  const std::array<ag::Var, 1> in{logits};
  return t.record(ag::Matrix::Constant(1, 1, total), in,
                  [&t, logits, grad = std::move(grad)](const ag::Matrix& g) { t.accumulate(logits, grad * g(0, 0)); });
}

ag::Var evidence_loss(const ag::Var& probs, const ag::Matrix& bits) {
  const ag::Matrix& p = probs.value();
  if (p.rows() != bits.rows() || p.cols() != bits.cols()) throw Error("evidence_loss: shape mismatch");
  ag::Matrix grad(p.rows(), p.cols());
  double total = 0.0;
  for (ag::Index i = 0; i < p.rows(); ++i)
    for (ag::Index j = 0; j < p.cols(); ++j) {
      const double raw = p(i, j);
      const double c = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
      const bool y = bits(i, j) != 0.0;
      total -= y ? std::log(c) : std::log(1.0 - c);
      const bool clamped = raw < kProbClamp || raw > 1.0 - kProbClamp;
      grad(i, j) = clamped ? 0.0 : (y ? -1.0 / c : 1.0 / (1.0 - c));
    }
  ag::Tape& t = probs.tape();
  const std::array<ag::Var, 1> in{probs};
  return t.record(ag::Matrix::Constant(1, 1, total), in,
                  [&t, probs, grad = std::move(grad)](const ag::Matrix& g) { t.accumulate(probs, grad * g(0, 0)); });
}

ag::Var evidence_loss_logits(const ag::Var& logits, const ag::Matrix& bits) {
  const ag::Matrix& x = logits.value();
  if (x.rows() != bits.rows() || x.cols() != bits.cols()) throw Error("evidence_loss: shape mismatch");
  // logit of the clamp bounds
  const double bound = std::log((1.0 - kProbClamp) / kProbClamp);
  auto softplus = [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); };
  ag::Matrix grad(x.rows(), x.cols());
  double total = 0.0;
  for (ag::Index i = 0; i < x.rows(); ++i)
    for (ag::Index j = 0; j < x.cols(); ++j) {
      const double raw = x(i, j);
      const double c = std::clamp(raw, -bound, bound);
      const bool y = bits(i, j) != 0.0;
      total += y ? softplus(-c) : softplus(c);
      // unclamped gradient so saturated scores can recover
      grad(i, j) = 1.0 / (1.0 + std::exp(-raw)) - (y ? 1.0 : 0.0);
    }
  ag::Tape& t = logits.tape();
  const std::array<ag::Var, 1> in{logits};
  return t.record(ag::Matrix::Constant(1, 1, total), in,
                  [&t, logits, grad = std::move(grad)](const ag::Matrix& g) { t.accumulate(logits, grad * g(0, 0)); });
}

TrainFactSet TrainFactSet::from_corpus(const corpus::Corpus& corpus, const corpus::RelationVocab& relations) {
  TrainFactSet out;
  for (const auto& doc : corpus)
    for (const auto& f : doc.facts)
      for (const auto& ms : doc.entities[static_cast<size_t>(f.subject)])
        for (const auto& mo : doc.entities[static_cast<size_t>(f.object)])
          out.insert(corpus::mention_text(doc, ms), corpus::mention_text(doc, mo), relations.label(f.relation));
  return out;
}

TrainFactSet TrainFactSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open train-fact file " + path.string());
  TrainFactSet out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos || line.find('\t', b + 1) != std::string::npos)
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected subject<TAB>object<TAB>relation");
    out.insert(line.substr(0, a), line.substr(a + 1, b - a - 1), line.substr(b + 1));
  }
  return out;
}

void TrainFactSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  for (const auto& [s, o, r] : facts_) out << s << '\t' << o << '\t' << r << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

void TrainFactSet::insert(const std::string& subject, const std::string& object, const std::string& relation) {
  facts_.emplace(subject, object, relation);
}

bool TrainFactSet::contains(const corpus::Document& doc, int subject, int object, const std::string& relation) const {
  for (const auto& ms : doc.entities.at(static_cast<size_t>(subject)))
    for (const auto& mo : doc.entities.at(static_cast<size_t>(object)))
      if (facts_.count({corpus::mention_text(doc, ms), corpus::mention_text(doc, mo), relation}) != 0) return true;
  return false;
}

bool is_intra(const corpus::Document& doc, int subject, int object) {
  for (const auto& ms : doc.entities.at(static_cast<size_t>(subject)))
    for (const auto& mo : doc.entities.at(static_cast<size_t>(object)))
      if (ms.sent_index == mo.sent_index) return true;
  return false;
}

Metrics compute_metrics(std::span<const PredictedFact> predictions, const corpus::Corpus& gold, const TrainFactSet& train,
                        const corpus::RelationVocab& relations) {
  using Key = std::tuple<std::string, int, int, int>;
  std::map<std::string, const corpus::Document*> docs;
  for (const auto& d : gold) docs[d.doc_id] = &d;

  std::map<Key, std::vector<int>> gold_facts;
  for (const auto& d : gold)
    for (const auto& f : d.facts) {
      auto& ev = gold_facts[{d.doc_id, f.subject, f.object, f.relation}];
      ev.insert(ev.end(), f.evidence.begin(), f.evidence.end());
      std::sort(ev.begin(), ev.end());
      ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
    }

  std::map<Key, std::vector<int>> pred_facts;
  for (const auto& p : predictions) {
    const auto it = docs.find(p.doc_id);
    if (it == docs.end()) throw Error("prediction references unknown document '" + p.doc_id + "'");
    const auto& doc = *it->second;
    if (p.subject < 0 || p.subject >= doc.entity_count() || p.object < 0 || p.object >= doc.entity_count())
      throw Error("prediction references unknown entity in document '" + p.doc_id + "'");
    if (p.relation < 0 || p.relation >= relations.size()) throw Error("prediction references unknown relation id");
    auto& ev = pred_facts[{p.doc_id, p.subject, p.object, p.relation}];
    ev.insert(ev.end(), p.evidence.begin(), p.evidence.end());
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
  }

  Metrics m;
  m.predicted = static_cast<long>(pred_facts.size());
  m.gold = static_cast<long>(gold_facts.size());
  long pred_intra = 0, gold_intra = 0, correct_intra = 0;
  long pred_inter = 0, gold_inter = 0, correct_inter = 0;
  long evi_hit = 0, evi_pred = 0, evi_gold = 0;

  for (const auto& [key, ev] : gold_facts) {
    const auto& [doc_id, s, o, r] = key;
    (is_intra(*docs.at(doc_id), s, o) ? gold_intra : gold_inter) += 1;
  }
  for (const auto& [key, ev] : pred_facts) {
    const auto& [doc_id, s, o, r] = key;
    const auto& doc = *docs.at(doc_id);
    const bool intra = is_intra(doc, s, o);
    (intra ? pred_intra : pred_inter) += 1;
    const auto g = gold_facts.find(key);
    if (g == gold_facts.end()) continue;
    ++m.correct;
    (intra ? correct_intra : correct_inter) += 1;
    if (train.contains(doc, s, o, relations.label(r))) ++m.correct_in_train;
    evi_pred += static_cast<long>(ev.size());
    evi_gold += static_cast<long>(g->second.size());
    for (int e : ev)
      if (std::binary_search(g->second.begin(), g->second.end(), e)) ++evi_hit;
  }

  m.precision = safe_div(m.correct, m.predicted);
  m.recall = safe_div(m.correct, m.gold);
  m.f1 = harmonic(m.precision, m.recall);
  m.ign_precision = safe_div(m.correct - m.correct_in_train, m.predicted - m.correct_in_train);
  m.ign_f1 = harmonic(m.ign_precision, m.recall);
  m.intra_f1 = harmonic(safe_div(correct_intra, pred_intra), safe_div(correct_intra, gold_intra));
  m.inter_f1 = harmonic(safe_div(correct_inter, pred_inter), safe_div(correct_inter, gold_inter));
  m.evi_precision = safe_div(evi_hit, evi_pred);
  m.evi_recall = safe_div(evi_hit, evi_gold);
  m.evi_f1 = harmonic(m.evi_precision, m.evi_recall);
  return m;
}

std::string Metrics::to_json() const {
  nlohmann::ordered_json j;
  j["f1"] = f1;
  j["ign_f1"] = ign_f1;
  j["intra_f1"] = intra_f1;
  j["inter_f1"] = inter_f1;
  j["evi_f1"] = evi_f1;
  j["precision"] = precision;
  j["recall"] = recall;
  j["predicted"] = predicted;
  j["gold"] = gold;
  j["correct"] = correct;
  return j.dump();
}

std::string Metrics::to_table() const {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "  F1        " << std::setw(7) << 100.0 * f1 << "\n";
  s << "  Ign F1    " << std::setw(7) << 100.0 * ign_f1 << "\n";
  s << "  Intra F1  " << std::setw(7) << 100.0 * intra_f1 << "\n";
  s << "  Inter F1  " << std::setw(7) << 100.0 * inter_f1 << "\n";
  s << "  Evi F1    " << std::setw(7) << 100.0 * evi_f1 << "\n";
  s << "  P / R     " << std::setw(7) << 100.0 * precision << " / " << 100.0 * recall << "  (" << correct << " of " << predicted
    << " predicted, " << gold << " gold)\n";
  return s.str();
}

}  // namespace larson::objectives
