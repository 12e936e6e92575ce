#include "larson/synthetic.hpp"

#include "larson/init.hpp"

#include <algorithm>
#include <set>

namespace larson::synthetic {

namespace {

const std::vector<std::string> kSyllables = {"ka", "ro", "mi", "tel", "su", "van", "po", "lie", "dar", "gu", "nem", "bo", "fi", "xu", "zar"};
const std::vector<std::string> kFiller = {"the", "report", "was", "quiet", "about", "many", "later", "events", "in", "spring", "and", "then"};

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Fresh capitalised names, unique within one document.
std::vector<std::string> entity_names(Rng& rng, int n) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (static_cast<int>(out.size()) < n) {
    std::string name = kSyllables[static_cast<size_t>(uniform(rng, 0, static_cast<int>(kSyllables.size()) - 1))] +
                       kSyllables[static_cast<size_t>(uniform(rng, 0, static_cast<int>(kSyllables.size()) - 1))];
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    if (seen.insert(name).second) out.push_back(name);
  }
  return out;
}

std::string bracket(const std::vector<std::string>& words, size_t b, size_t e, const char* label) {
  if (e - b == 1) return words[b];
  std::string s = std::string("(") + label;
  for (size_t i = b; i < e; ++i) s += " " + words[i];
  return s + ")";
}

void add_sentence(corpus::Document& doc, std::vector<std::string> words, std::string con) {
  doc.dep_parses.push_back(chain_parse(words));
  doc.con_parses.push_back(std::move(con));
  doc.sentences.push_back(std::move(words));
}

void add_mention(corpus::Document& doc, int entity, int sent, int word) {
  corpus::Mention m;
  m.entity_id = entity;
  m.sent_index = sent;
  m.start = word;
  m.end = word + 1;
  doc.entities[static_cast<size_t>(entity)].push_back(m);
}

}  // namespace

std::vector<corpus::DepRow> chain_parse(const std::vector<std::string>& words) {
  std::vector<corpus::DepRow> rows;
  const int n = static_cast<int>(words.size());
  for (int i = 1; i <= n; ++i) rows.push_back({i, words[static_cast<size_t>(i - 1)], i == n ? 0 : i + 1, i == n ? "root" : "dep"});
  return rows;
}

std::string right_branching(const std::vector<std::string>& words) {
  if (words.size() == 1) return "(S " + words[0] + ")";
  std::string s = "(X " + words[words.size() - 2] + " " + words.back() + ")";
  for (size_t i = words.size() - 2; i-- > 0;) s = "(X " + words[i] + " " + s + ")";
  return "(S" + s.substr(2);
}

std::string left_branching(const std::vector<std::string>& words) {
  if (words.size() == 1) return "(S " + words[0] + ")";
  std::string s = "(X " + words[0] + " " + words[1] + ")";
  for (size_t i = 2; i < words.size(); ++i) s = "(X " + s + " " + words[i] + ")";
  return "(S" + s.substr(2);
}

std::string balanced(const std::vector<std::string>& words) {
  if (words.size() < 4) return right_branching(words);
  const size_t mid = words.size() / 2;
  return "(S " + bracket(words, 0, mid, "X") + " " + bracket(words, mid, words.size(), "X") + ")";
}

SyntheticCorpus overfit_corpus(std::uint64_t seed, int documents) {
  SyntheticCorpus out{corpus::RelationVocab({"founded", "located_in", "member_of"}), {}};
  const std::vector<std::string> triggers = {"founded", "inside", "joined"};
  Rng rng(seed);
  for (int d = 0; d < documents; ++d) {
    corpus::Document doc;
    doc.doc_id = "overfit_" + std::to_string(d);
    const int n_sent = uniform(rng, 2, 4);
    const int n_ent = uniform(rng, 2, 4);
    const auto names = entity_names(rng, n_ent);
    doc.entities.assign(static_cast<size_t>(n_ent), {});

    // one orientation per unordered pair
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < n_ent; ++a)
      for (int b = a + 1; b < n_ent; ++b) pairs.push_back(uniform(rng, 0, 1) == 0 ? std::make_pair(a, b) : std::make_pair(b, a));
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const int n_fact = std::min({uniform(rng, 1, 2), n_sent, static_cast<int>(pairs.size())});
    // Fact sentences first at random positions, filler elsewhere.
    std::vector<int> fact_sent(static_cast<size_t>(n_sent), -1);
    std::vector<int> slots(static_cast<size_t>(n_sent));
    for (int i = 0; i < n_sent; ++i) slots[static_cast<size_t>(i)] = i;
    std::shuffle(slots.begin(), slots.end(), rng);
    for (int f = 0; f < n_fact; ++f) fact_sent[static_cast<size_t>(slots[static_cast<size_t>(f)])] = f;

    std::vector<bool> mentioned(static_cast<size_t>(n_ent), false);
    for (int i = 0; i < n_sent; ++i) {
      const int f = fact_sent[static_cast<size_t>(i)];
      if (f >= 0) {
        const auto [s, o] = pairs[static_cast<size_t>(f)];
        const int r = uniform(rng, 0, 2);
        add_sentence(doc, {names[static_cast<size_t>(s)], triggers[static_cast<size_t>(r)], names[static_cast<size_t>(o)], "."},
                     right_branching({names[static_cast<size_t>(s)], triggers[static_cast<size_t>(r)], names[static_cast<size_t>(o)], "."}));
        add_mention(doc, s, i, 0);
        add_mention(doc, o, i, 2);
        mentioned[static_cast<size_t>(s)] = mentioned[static_cast<size_t>(o)] = true;
        doc.facts.push_back({s, o, r, {i}});
      } else {
        std::vector<std::string> words;
        for (int w = uniform(rng, 3, 6); w > 0; --w) words.push_back(kFiller[static_cast<size_t>(uniform(rng, 0, static_cast<int>(kFiller.size()) - 1))]);
        words.push_back(".");
        add_sentence(doc, words, right_branching(words));
      }
    }
    // Entities without a fact are mentioned at the start of some sentence.
    for (int e = 0; e < n_ent; ++e) {
      if (mentioned[static_cast<size_t>(e)]) continue;
      int target = -1;
      for (int i = 0; i < n_sent && target < 0; ++i)
        if (fact_sent[static_cast<size_t>(i)] < 0) target = i;
      if (target < 0) target = uniform(rng, 0, n_sent - 1);
      auto& words = doc.sentences[static_cast<size_t>(target)];
      words.insert(words.begin(), names[static_cast<size_t>(e)]);
      for (auto& ms : doc.entities)
        for (auto& m : ms)
          if (m.sent_index == target) ++m.start, ++m.end;
      add_mention(doc, e, target, 0);
      doc.dep_parses[static_cast<size_t>(target)] = chain_parse(words);
      doc.con_parses[static_cast<size_t>(target)] = right_branching(words);
    }
    out.docs.push_back(std::move(doc));
  }
  return out;
}

SyntheticCorpus cue_corpus(std::uint64_t seed, int documents) {
  SyntheticCorpus out{corpus::RelationVocab({"cue_right", "cue_left", "cue_balanced"}), {}};
  const std::vector<std::string> cue = {"quietly", "the", "river", "bends", "past", "old", "stones", "."};
  Rng rng(seed);
  for (int d = 0; d < documents; ++d) {
    corpus::Document doc;
    doc.doc_id = "cue_" + std::to_string(d);
    const auto names = entity_names(rng, 2);
    doc.entities.assign(2, {});
    const int label = d % 3;

    const std::vector<std::string> first = {names[0], "met", names[1], "there", "."};
    add_sentence(doc, first, right_branching(first));
    add_mention(doc, 0, 0, 0);
    add_mention(doc, 1, 0, 2);

    const std::string tree = label == 0 ? right_branching(cue) : label == 1 ? left_branching(cue) : balanced(cue);
    add_sentence(doc, cue, tree);

    const std::vector<std::string> last = {"nothing", "else", "was", "said", "."};
    add_sentence(doc, last, right_branching(last));

    doc.facts.push_back({0, 1, label, {1}});
    out.docs.push_back(std::move(doc));
  }
  std::shuffle(out.docs.begin(), out.docs.end(), rng);
  return out;
}

}  // namespace larson::synthetic
