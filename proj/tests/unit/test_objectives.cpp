#include "checks.hpp"
#include "helpers.hpp"
#include "larson/objectives.hpp"

#include <doctest.h>

#include <cmath>

using namespace larson;
using objectives::PredictedFact;

namespace {

const double kLn2 = std::log(2.0);

corpus::Document metric_doc() {
  corpus::Document d = checks::toy_document();
  d.facts = {{0, 1, 0, {0}}, {1, 3, 1, {1}}};
  return d;
}

}  // namespace

TEST_SUITE("objectives") {
  TEST_CASE("threshold loss hand values") {
    const std::vector<double> tie = {0.0, 0.0};
    CHECK(objectives::atl_loss(tie, std::vector<int>{1}) == doctest::Approx(kLn2).epsilon(1e-14));
    CHECK(objectives::atl_loss(tie, std::vector<int>{}) == doctest::Approx(kLn2).epsilon(1e-14));
    const std::vector<double> sat = {0.0, 100.0};
    CHECK(objectives::atl_loss(sat, std::vector<int>{1}) < 1e-10);
  }

  TEST_CASE("threshold loss agrees with the naive evaluation and ignores shifts") {
    Rng rng(41);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
      const int classes = std::uniform_int_distribution<int>(2, 6)(rng);
      std::vector<double> l(static_cast<size_t>(classes));
      for (auto& x : l) x = u(rng);
      std::vector<int> pos;
      std::set<int> pset;
      for (int c = 1; c < classes; ++c)
        if (std::bernoulli_distribution(0.4)(rng)) pos.push_back(c), pset.insert(c);
      const double a = objectives::atl_loss(l, pos);
      CHECK(a >= 0.0);
      CHECK(std::abs(a - checks::naive_atl(l, pset)) < 1e-8);
      std::vector<double> shifted = l;
      for (auto& x : shifted) x += 3.25;
      CHECK(std::abs(objectives::atl_loss(shifted, pos) - a) < 1e-8);
      const auto p1 = objectives::predict_relations(l);
      CHECK(objectives::predict_relations(shifted) == p1);
    }
  }

  TEST_CASE("threshold loss gradient") {
    const std::vector<double> l = {0.3, -1.2, 2.0, 0.7};
    const std::vector<int> pos = {2, 3};
    const auto g = objectives::atl_loss_grad(l, pos);
    for (size_t i = 0; i < l.size(); ++i) {
      auto hi = l;
      auto lo = l;
      hi[i] += 1e-6;
      lo[i] -= 1e-6;
      const double fd = (objectives::atl_loss(hi, pos) - objectives::atl_loss(lo, pos)) / 2e-6;
      CHECK(std::abs(fd - g[i]) < 1e-8);
    }
  }

  TEST_CASE("evidence cross entropy") {
    const std::vector<double> half = {0.5, 0.5, 0.5};
    CHECK(objectives::evidence_loss(half, std::vector<int>{1, 0, 1}) == doctest::Approx(3 * kLn2).epsilon(1e-14));
    const std::vector<double> p = {0.75};
    CHECK(objectives::evidence_loss(p, std::vector<int>{1}) == doctest::Approx(-std::log(0.75)).epsilon(1e-14));
    CHECK(objectives::evidence_loss(p, std::vector<int>{1}) == doctest::Approx(0.2877).epsilon(1e-4));
    const std::vector<double> exact = {1.0, 0.0, 1.0};
    CHECK(objectives::evidence_loss(exact, std::vector<int>{1, 0, 1}) <= 3e-11);
  }

  TEST_CASE("logit-space evidence loss agrees with the probability form") {
    Rng rng(42);
    const ag::Matrix logits = normal_matrix(2, 3, 2.0, rng);
    ag::Matrix bits(2, 3);
    bits << 1, 0, 0, 0, 1, 1;
    ag::Tape tape;
    const auto x = tape.constant(logits);
    const double a = objectives::evidence_loss_logits(x, bits).scalar();
    const double b = objectives::evidence_loss(ag::sigmoid(x), bits).scalar();
    CHECK(a == doctest::Approx(b).epsilon(1e-12));

    ag::Parameter p("x", logits);
    const auto report = checks::finite_difference(
        {&p}, [&](ag::Tape& t) { return objectives::evidence_loss_logits(t.parameter(p), bits); }, 1.0, rng);
    CHECK(report.max_rel < 1e-4);
  }

  TEST_CASE("total loss") {
    CHECK(objectives::total_loss(1.0, 2.0, 0.1) == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(objectives::total_loss(1.0, 2.0, 0.0) == 1.0);
    CHECK(objectives::total_loss(1.0, std::nullopt, 0.1) == 1.0);
  }

  TEST_CASE("threshold rule") {
    CHECK(objectives::predict_relations(std::vector<double>{0.0, 1.0}) == std::vector<int>{1});
    CHECK(objectives::predict_relations(std::vector<double>{0.0, -1.0, -0.5}).empty());
    CHECK(objectives::predict_relations(std::vector<double>{0.0, 0.0}).empty());
  }

  TEST_CASE("metrics hand counts") {
    const auto rel = checks::toy_relations();
    const corpus::Corpus gold{metric_doc()};
    const objectives::TrainFactSet none;

    std::vector<PredictedFact> perfect = {{"toy", 0, 1, 0, {0}}, {"toy", 1, 3, 1, {1}}};
    auto m = objectives::compute_metrics(perfect, gold, none, rel);
    CHECK(m.f1 == 1.0);
    CHECK(m.evi_f1 == 1.0);

    std::vector<PredictedFact> half = {{"toy", 0, 1, 0, {0}}, {"toy", 2, 3, 1, {}}};
    m = objectives::compute_metrics(half, gold, none, rel);
    CHECK(m.precision == 0.5);
    CHECK(m.recall == 0.5);
    CHECK(m.f1 == 0.5);

    objectives::TrainFactSet train;
    train.insert("Alice", "Acmecorp", "founded");
    m = objectives::compute_metrics(perfect, gold, train, rel);
    CHECK(m.correct_in_train == 1);
    CHECK(m.ign_precision == 1.0);
    CHECK(m.ign_f1 == 1.0);

    m = objectives::compute_metrics(std::vector<PredictedFact>{}, gold, none, rel);
    CHECK(m.f1 == 0.0);
    std::vector<PredictedFact> wrong = {{"toy", 3, 0, 2, {}}};
    CHECK(objectives::compute_metrics(wrong, gold, none, rel).f1 == 0.0);

    std::vector<PredictedFact> unknown = {{"nope", 0, 1, 0, {}}};
    CHECK_THROWS_AS(objectives::compute_metrics(unknown, gold, none, rel), Error);
    std::vector<PredictedFact> bad_entity = {{"toy", 0, 9, 0, {}}};
    CHECK_THROWS_AS(objectives::compute_metrics(bad_entity, gold, none, rel), Error);
  }

  TEST_CASE("intra and inter facts partition the gold set") {
    const corpus::Document d = metric_doc();
    CHECK(objectives::is_intra(d, 0, 1));
    CHECK(objectives::is_intra(d, 1, 3));
    CHECK_FALSE(objectives::is_intra(d, 0, 3));
    CHECK_FALSE(objectives::is_intra(d, 2, 3));

    corpus::Document mixed = d;
    mixed.facts = {{0, 1, 0, {0}}, {0, 3, 1, {0, 1}}};
    const corpus::Corpus gold{mixed};
    std::vector<PredictedFact> preds = {{"toy", 0, 1, 0, {}}};
    const auto m = objectives::compute_metrics(preds, gold, {}, checks::toy_relations());
    CHECK(m.intra_f1 == 1.0);
    CHECK(m.inter_f1 == 0.0);
  }

  TEST_CASE("train fact set round trip") {
    const unit::TempDir dir("facts");
    const corpus::Corpus c{checks::toy_document()};
    const auto facts = objectives::TrainFactSet::from_corpus(c, checks::toy_relations());
    facts.save(dir.path / "f.tsv");
    const auto back = objectives::TrainFactSet::load(dir.path / "f.tsv");
    CHECK(back.size() == facts.size());
    CHECK(back.contains(c[0], 0, 1, "founded"));
    CHECK_FALSE(back.contains(c[0], 1, 0, "founded"));
  }

  TEST_CASE("metrics json keys") {
    const std::string j = objectives::Metrics{}.to_json();
    for (const char* k : {"\"f1\"", "\"ign_f1\"", "\"intra_f1\"", "\"inter_f1\"", "\"evi_f1\""}) CHECK(j.find(k) != std::string::npos);
  }
}
