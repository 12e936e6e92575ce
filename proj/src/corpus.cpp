#include "larson/corpus.hpp"

#include "larson/syntax_graphs.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace larson::corpus {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& doc_id, const std::string& what) {
  throw Error("document '" + doc_id + "': " + what);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<DepRow>> parse_dep_tsv(const std::string& doc_id, const std::string& text) {
  std::vector<std::vector<DepRow>> sentences;
  std::vector<DepRow> cur;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!cur.empty()) sentences.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    const auto cols = split(line, '\t');
    if (cols.size() != 4) fail(doc_id, "dep.tsv line " + std::to_string(line_no) + ": expected 4 tab-separated columns");
    DepRow row;
    try {
      row.index = std::stoi(cols[0]);
      row.head = std::stoi(cols[2]);
    } catch (const std::exception&) {
      fail(doc_id, "dep.tsv line " + std::to_string(line_no) + ": non-integer index or head");
    }
    row.word = cols[1];
    row.deprel = cols[3];
    cur.push_back(std::move(row));
  }
  if (!cur.empty()) sentences.push_back(std::move(cur));
  return sentences;
}

std::vector<std::string> parse_con_txt(const std::string& text) {
  std::vector<std::string> trees;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    trees.push_back(line);
  }
  return trees;
}

bool crossing(const Mention& a, const Mention& b) {
  return (a.start < b.start && b.start < a.end && a.end < b.end) || (b.start < a.start && a.start < b.end && b.end < a.end);
}

}  // namespace

RelationVocab::RelationVocab(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (size_t i = 0; i < labels_.size(); ++i)
    for (size_t j = i + 1; j < labels_.size(); ++j)
      if (labels_[i] == labels_[j]) throw Error("duplicate relation label '" + labels_[i] + "'");
}

int RelationVocab::id(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw Error("unknown relation label '" + label + "'");
  return static_cast<int>(it - labels_.begin());
}

void Document::validate(int relation_count) const {
  const int n_sent = sentence_count();
  if (n_sent == 0) fail(doc_id, "no sentences");
  for (int i = 0; i < n_sent; ++i)
    if (sentences[static_cast<size_t>(i)].empty()) fail(doc_id, "sentence " + std::to_string(i) + " is empty");
  for (size_t e = 0; e < entities.size(); ++e) {
    if (entities[e].empty()) fail(doc_id, "entity " + std::to_string(e) + " has no mentions");
    for (const Mention& m : entities[e]) {
      if (m.entity_id != static_cast<int>(e)) fail(doc_id, "mention entity id mismatch");
      if (m.sent_index < 0 || m.sent_index >= n_sent) fail(doc_id, "mention sentence index out of range");
      const int len = static_cast<int>(sentences[static_cast<size_t>(m.sent_index)].size());
      if (m.start < 0 || m.start >= m.end || m.end > len) fail(doc_id, "mention span out of range");
    }
  }
  for (const Fact& f : facts) {
    if (f.subject == f.object) fail(doc_id, "fact with identical subject and object");
    if (f.subject < 0 || f.subject >= entity_count() || f.object < 0 || f.object >= entity_count())
      fail(doc_id, "fact entity id out of range");
    if (f.relation < 0 || f.relation >= relation_count) fail(doc_id, "fact relation id out of range");
    for (int s : f.evidence)
      if (s < 0 || s >= n_sent) fail(doc_id, "evidence sentence id out of range");
  }
  if (static_cast<int>(dep_parses.size()) != n_sent) fail(doc_id, "dependency parse count differs from sentence count");
  if (static_cast<int>(con_parses.size()) != n_sent) fail(doc_id, "constituency parse count differs from sentence count");
  for (int i = 0; i < n_sent; ++i) {
    const auto& words = sentences[static_cast<size_t>(i)];
    const auto& rows = dep_parses[static_cast<size_t>(i)];
    if (rows.size() != words.size()) fail(doc_id, "sentence " + std::to_string(i) + ": dependency rows differ from word count");
    try {
      syntax::validate_dependency_rows(rows);
      const auto tree = syntax::parse_bracketed(con_parses[static_cast<size_t>(i)]);
      if (tree.leaf_count() != static_cast<int>(words.size()))
        fail(doc_id, "sentence " + std::to_string(i) + ": constituency leaf count " + std::to_string(tree.leaf_count()) +
                         " differs from word count " + std::to_string(words.size()));
    } catch (const Error& e) {
      const std::string msg = e.what();
      if (msg.rfind("document '", 0) == 0) throw;
      fail(doc_id, "sentence " + std::to_string(i) + ": " + msg);
    }
  }
}

Corpus load_corpus(const std::filesystem::path& dir, const RelationVocab& relations) {
  const auto index = dir / "corpus.json";
  json root;
  try {
    root = json::parse(read_file(index));
  } catch (const json::exception& e) {
    throw Error(index.string() + ": " + e.what());
  }
  if (!root.is_array()) throw Error(index.string() + ": expected a JSON array of documents");

  Corpus corpus;
  corpus.reserve(root.size());
  for (const json& jd : root) {
    Document doc;
    try {
      doc.doc_id = jd.at("doc_id").get<std::string>();
      doc.sentences = jd.at("sents").get<std::vector<std::vector<std::string>>>();
      const json& ents = jd.at("entities");
      for (size_t e = 0; e < ents.size(); ++e) {
        std::vector<Mention> ms;
        for (const json& jm : ents[e]) {
          Mention m;
          m.entity_id = static_cast<int>(e);
          m.sent_index = jm.at("sent").get<int>();
          m.start = jm.at("start").get<int>();
          m.end = jm.at("end").get<int>();
          ms.push_back(m);
        }
        doc.entities.push_back(std::move(ms));
      }
      if (jd.contains("facts")) {
        for (const json& jf : jd.at("facts")) {
          Fact f;
          f.subject = jf.at("s").get<int>();
          f.object = jf.at("o").get<int>();
          f.relation = relations.id(jf.at("r").get<std::string>());
          if (jf.contains("evidence")) f.evidence = jf.at("evidence").get<std::vector<int>>();
          std::sort(f.evidence.begin(), f.evidence.end());
          f.evidence.erase(std::unique(f.evidence.begin(), f.evidence.end()), f.evidence.end());
          doc.facts.push_back(std::move(f));
        }
      }
    } catch (const json::exception& e) {
      throw Error(index.string() + ": malformed document " + (doc.doc_id.empty() ? "" : "'" + doc.doc_id + "' ") + e.what());
    } catch (const Error& e) {
      fail(doc.doc_id, e.what());
    }

    const auto dep_path = dir / (doc.doc_id + ".dep.tsv");
    const auto con_path = dir / (doc.doc_id + ".con.txt");
    if (!std::filesystem::exists(dep_path)) fail(doc.doc_id, "missing sidecar " + dep_path.filename().string());
    if (!std::filesystem::exists(con_path)) fail(doc.doc_id, "missing sidecar " + con_path.filename().string());
    doc.dep_parses = parse_dep_tsv(doc.doc_id, read_file(dep_path));
    doc.con_parses = parse_con_txt(read_file(con_path));
    doc.validate(relations.size());
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const RelationVocab& relations, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json root = json::array();
  for (const Document& doc : corpus) {
    json jd;
    jd["doc_id"] = doc.doc_id;
    jd["sents"] = doc.sentences;
    json ents = json::array();
    for (const auto& ms : doc.entities) {
      json je = json::array();
      for (const Mention& m : ms) je.push_back({{"sent", m.sent_index}, {"start", m.start}, {"end", m.end}});
      ents.push_back(je);
    }
    jd["entities"] = ents;
    json facts = json::array();
    for (const Fact& f : doc.facts)
      facts.push_back({{"s", f.subject}, {"o", f.object}, {"r", relations.label(f.relation)}, {"evidence", f.evidence}});
    jd["facts"] = facts;
    root.push_back(jd);

    std::ofstream dep(dir / (doc.doc_id + ".dep.tsv"));
    for (size_t i = 0; i < doc.dep_parses.size(); ++i) {
      if (i > 0) dep << '\n';
      for (const DepRow& r : doc.dep_parses[i]) dep << r.index << '\t' << r.word << '\t' << r.head << '\t' << r.deprel << '\n';
    }
    std::ofstream con(dir / (doc.doc_id + ".con.txt"));
    for (const auto& t : doc.con_parses) con << t << '\n';
  }
  std::ofstream out(dir / "corpus.json");
  out << root.dump(1) << '\n';
  if (!out) throw Error("failed writing " + (dir / "corpus.json").string());
}

std::vector<std::string> chunk_tokenize(const std::string& word, size_t max_piece) {
  if (word.empty()) return {word};
  std::vector<std::string> pieces;
  for (size_t at = 0; at < word.size(); at += max_piece) {
    std::string piece = word.substr(at, max_piece);
    pieces.push_back(at == 0 ? piece : "##" + piece);
  }
  return pieces;
}

MarkedDocument insert_mention_markers(const Document& doc, const Tokenizer& tokenizer) {
  MarkedDocument out;
  out.entities = doc.entities;
  out.alignment.words.resize(doc.sentences.size());

  for (size_t si = 0; si < doc.sentences.size(); ++si) {
    const auto& words = doc.sentences[si];
    std::vector<Mention*> here;
    for (auto& ms : out.entities)
      for (Mention& m : ms)
        if (m.sent_index == static_cast<int>(si)) here.push_back(&m);

    for (size_t a = 0; a < here.size(); ++a)
      for (size_t b = a + 1; b < here.size(); ++b)
        if (crossing(*here[a], *here[b]))
          fail(doc.doc_id, "crossing mention spans in sentence " + std::to_string(si) + " (entities " +
                               std::to_string(here[a]->entity_id) + " and " + std::to_string(here[b]->entity_id) + ")");

    // Opening order: start asc, end desc, then entity/mention order (stable).
    std::stable_sort(here.begin(), here.end(), [](const Mention* x, const Mention* y) {
      if (x->start != y->start) return x->start < y->start;
      return x->end > y->end;
    });

    TokenSpan span;
    span.begin = static_cast<int>(out.tokens.size());
    auto emit = [&out](const std::string& tok, bool marker) {
      out.tokens.push_back(tok);
      out.is_marker.push_back(marker);
      return static_cast<int>(out.tokens.size() - 1);
    };
    auto close_at = [&](int pos) {
      for (auto it = here.rbegin(); it != here.rend(); ++it)
        if ((*it)->end == pos) emit(kMarker, true);
    };

    auto& align = out.alignment.words[si];
    align.resize(words.size());
    for (size_t w = 0; w < words.size(); ++w) {
      close_at(static_cast<int>(w));
      for (Mention* m : here)
        if (m->start == static_cast<int>(w)) m->marker_pos = emit(kMarker, true);
      const auto pieces = tokenizer(words[w]);
      if (pieces.empty()) fail(doc.doc_id, "tokenizer returned no pieces for word '" + words[w] + "'");
      for (const auto& p : pieces) align[w].push_back(emit(p, false));
    }
    close_at(static_cast<int>(words.size()));
    span.end = static_cast<int>(out.tokens.size());
    out.sentence_spans.push_back(span);
  }
  return out;
}

std::string mention_text(const Document& doc, const Mention& m) {
  const auto& words = doc.sentences.at(static_cast<size_t>(m.sent_index));
  std::string s;
  for (int w = m.start; w < m.end; ++w) {
    if (w > m.start) s.push_back(' ');
    s += words.at(static_cast<size_t>(w));
  }
  return s;
}

}  // namespace larson::corpus
