#include "checks.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace larson;
using ag::Matrix;

namespace {

struct AttnFixture {
  Rng rng{31};
  fusion::DedicatedAttention attn{"f", 4, 3, 5, rng};
  Matrix v = normal_matrix(2, 4, 1.0, rng);
  Matrix n = normal_matrix(4, 3, 1.0, rng);
  AttnFixture() {
    for (auto* p : attn.parameters()) p->value = normal_matrix(p->value.rows(), p->value.cols(), 0.7, rng);
  }
};

}  // namespace

TEST_SUITE("fusion_heads") {
  TEST_CASE_FIXTURE(AttnFixture, "single subsentence gets all the weight") {
    ag::Tape tape;
    const Matrix one = n.topRows(1);
    const auto beta = attn.weights(tape, tape.constant(v), tape.constant(one), fusion::Weighting::kAttention);
    CHECK(beta.value() == Matrix::Ones(2, 1));
    const auto fused = attn.fuse(tape, tape.constant(v), tape.constant(one), beta);
    const Matrix expect = v.rowwise() + (attn.params().w_m.value * one.transpose()).transpose().row(0);
    CHECK(unit::max_abs(fused.value(), expect) < 1e-14);
  }

  TEST_CASE_FIXTURE(AttnFixture, "identical subsentences get uniform weight") {
    ag::Tape tape;
    const Matrix same = n.row(0).replicate(4, 1);
    const auto beta = attn.weights(tape, tape.constant(v), tape.constant(same), fusion::Weighting::kAttention);
    CHECK(unit::max_abs(beta.value(), Matrix::Constant(2, 4, 0.25)) < 1e-15);
  }

  TEST_CASE_FIXTURE(AttnFixture, "random inputs match the naive oracle and sum to one") {
    ag::Tape tape;
    const auto beta = attn.weights(tape, tape.constant(v), tape.constant(n), fusion::Weighting::kAttention);
    const auto fused = attn.fuse(tape, tape.constant(v), tape.constant(n), beta);
    const auto& p = attn.params();
    const auto naive = checks::naive_dedicated_attention(v, n, p.w.value, p.w_b1.value, p.w_b2.value, p.w_m.value);
    CHECK(unit::max_abs(beta.value(), naive.beta) < 1e-12);
    CHECK(unit::max_abs(fused.value(), naive.fused) < 1e-12);
    CHECK(beta.value().minCoeff() >= 0.0);
    for (ag::Index r = 0; r < 2; ++r) CHECK(std::abs(beta.value().row(r).sum() - 1.0) < 1e-6);
  }

  TEST_CASE_FIXTURE(AttnFixture, "softmax shift invariance") {
    ag::Tape tape;
    const Matrix q = attn.scores(tape, tape.constant(v), tape.constant(n)).value();
    const auto soft = [](const Matrix& s) {
      Matrix e = (s.colwise() - s.rowwise().maxCoeff()).array().exp().matrix();
      return Matrix(e.array().colwise() / e.rowwise().sum().array());
    };
    const Matrix shifted = (q.array() + 7.5).matrix();
    CHECK(unit::max_abs(ag::softmax_rows(tape.constant(q)).value(), ag::softmax_rows(tape.constant(shifted)).value()) < 1e-12);
    CHECK(unit::max_abs(soft(q), ag::softmax_rows(tape.constant(q)).value()) < 1e-12);
  }

  TEST_CASE_FIXTURE(AttnFixture, "fusion fallbacks") {
    ag::Tape tape;
    attn.params().w_m.value.setZero();
    const auto beta = attn.weights(tape, tape.constant(v), tape.constant(n), fusion::Weighting::kAttention);
    CHECK(attn.fuse(tape, tape.constant(v), tape.constant(n), beta).value() == v);
    const ag::Var none;
    CHECK_FALSE(attn.weights(tape, tape.constant(v), none, fusion::Weighting::kAttention).valid());
    CHECK(attn.fuse(tape, tape.constant(v), none, none).value() == v);
  }

  TEST_CASE_FIXTURE(AttnFixture, "residual lies in the column space of W_m") {
    ag::Tape tape;
    attn.params().w_m.value.col(2).setZero();
    const auto beta = attn.weights(tape, tape.constant(v), tape.constant(n), fusion::Weighting::kAttention);
    const Matrix delta = attn.fuse(tape, tape.constant(v), tape.constant(n), beta).value() - v;
    const Matrix wm = attn.params().w_m.value.leftCols(2);
    const Matrix coef = wm.colPivHouseholderQr().solve(delta.transpose());
    CHECK(unit::max_abs(wm * coef, delta.transpose()) < 1e-12);
  }

  TEST_CASE_FIXTURE(AttnFixture, "dropout scales kept weights without renormalising") {
    ag::Tape tape;
    Rng drop(5);
    const Matrix clean = attn.weights(tape, tape.constant(v), tape.constant(n), fusion::Weighting::kAttention).value();
    const Matrix noisy = attn.weights(tape, tape.constant(v), tape.constant(n), fusion::Weighting::kAttention, 0.5, &drop).value();
    bool dropped = false;
    for (ag::Index i = 0; i < clean.rows(); ++i)
      for (ag::Index j = 0; j < clean.cols(); ++j) {
        if (noisy(i, j) == 0.0) dropped = true;
        else CHECK(noisy(i, j) == doctest::Approx(2.0 * clean(i, j)).epsilon(1e-14));
      }
    CHECK(dropped);
  }

  TEST_CASE_FIXTURE(AttnFixture, "enhance_pair uses separate weights per component") {
    ag::Tape tape;
    const Matrix c = normal_matrix(2, 4, 1.0, rng);
    const Matrix o = normal_matrix(2, 4, 1.0, rng);
    const auto out = fusion::enhance_pair(tape, attn, tape.constant(v), tape.constant(o), tape.constant(c), tape.constant(n),
                                          fusion::Weighting::kAttention);
    CHECK(unit::max_abs(out.subject_beta.value(), out.object_beta.value()) > 1e-6);

    const auto uni = fusion::enhance_pair(tape, attn, tape.constant(v), tape.constant(o), tape.constant(c), tape.constant(n),
                                          fusion::Weighting::kUniform);
    const Eigen::RowVectorXd mean = n.colwise().mean();
    const Matrix expect = c.rowwise() + (attn.params().w_m.value * mean.transpose()).transpose();
    CHECK(unit::max_abs(uni.context.value(), expect) < 1e-14);

    for (auto* p : attn.parameters()) p->value.setZero();
    const auto zero = fusion::enhance_pair(tape, attn, tape.constant(v), tape.constant(o), tape.constant(c), tape.constant(n),
                                           fusion::Weighting::kAttention);
    CHECK(zero.subject.value() == v);
    CHECK(zero.object.value() == o);
    CHECK(zero.context.value() == c);
  }

  TEST_CASE("sentence combination") {
    Rng rng(32);
    fusion::DedicatedAttention attn("s", 4, 3, 5, rng);
    const Matrix sd = normal_matrix(3, 4, 1.0, rng);
    const Matrix sc = normal_matrix(3, 3, 1.0, rng);
    ag::Tape tape;
    const auto& p = attn.params();

    const Matrix single = fusion::combine_sentence_embeddings(tape, attn, tape.constant(sd.topRows(1)), tape.constant(sc.topRows(1)),
                                                              fusion::SentenceCombine::kAttention)
                              .value();
    CHECK(unit::max_abs(single, sd.topRows(1) + sc.topRows(1) * p.w_m.value.transpose()) < 1e-14);

    const Matrix all =
        fusion::combine_sentence_embeddings(tape, attn, tape.constant(sd), tape.constant(sc), fusion::SentenceCombine::kAttention).value();
    const auto naive = checks::naive_dedicated_attention(sd, sc, p.w.value, p.w_b1.value, p.w_b2.value, p.w_m.value);
    CHECK(unit::max_abs(all, naive.fused) < 1e-12);

    const Matrix paired =
        fusion::combine_sentence_embeddings(tape, attn, tape.constant(sd), tape.constant(sc), fusion::SentenceCombine::kPaired).value();
    CHECK(unit::max_abs(paired, sd + sc * p.w_m.value.transpose()) < 1e-14);

    attn.params().w_m.value.setZero();
    CHECK(fusion::combine_sentence_embeddings(tape, attn, tape.constant(sd), tape.constant(sc), fusion::SentenceCombine::kAttention).value() ==
          sd);
    CHECK(fusion::combine_sentence_embeddings(tape, attn, tape.constant(sd), ag::Var(), fusion::SentenceCombine::kAttention).value() == sd);
  }

  TEST_CASE("relation logits") {
    Rng rng(33);
    const int d = 3;
    const int classes = 4;
    fusion::Heads heads("h", d, classes, 0, rng);
    auto& p = heads.params();
    for (auto* q : heads.parameters()) q->value = normal_matrix(q->value.rows(), q->value.cols(), 0.8, rng);
    const Matrix es = normal_matrix(2, d, 1.0, rng);
    const Matrix eo = normal_matrix(2, d, 1.0, rng);
    const Matrix c = normal_matrix(2, d, 1.0, rng);
    ag::Tape tape;
    const Matrix l = heads.relation_logits(tape, tape.constant(es), tape.constant(eo), tape.constant(c)).value();
    REQUIRE(l.cols() == classes);
    for (int r = 0; r < 2; ++r) {
      const Eigen::VectorXd zs = (p.w_t1.value * es.row(r).transpose() + p.w_t2.value * c.row(r).transpose()).array().tanh();
      const Eigen::VectorXd zo = (p.w_q1.value * eo.row(r).transpose() + p.w_q2.value * c.row(r).transpose()).array().tanh();
      for (int k = 0; k < classes; ++k) {
        double acc = p.b_r.value(0, k);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) acc += zs(i) * p.w_r.value(i, k * d + j) * zo(j);
        CHECK(std::abs(l(r, k) - acc) < 1e-12);
      }
    }

    p.w_t1.value.setZero();
    p.w_t2.value.setZero();
    p.w_q1.value.setZero();
    p.w_q2.value.setZero();
    const Matrix bias_only = heads.relation_logits(tape, tape.constant(es), tape.constant(eo), tape.constant(c)).value();
    for (int r = 0; r < 2; ++r) CHECK(bias_only.row(r) == p.b_r.value);
    p.b_r.value.setZero();
    CHECK(heads.relation_logits(tape, tape.constant(es), tape.constant(eo), tape.constant(c)).value().isZero(0.0));
  }

  TEST_CASE("grouped bilinear matches its block definition") {
    Rng rng(34);
    fusion::Heads heads("h", 4, 3, 2, rng);
    auto& p = heads.params();
    const Matrix es = normal_matrix(1, 4, 1.0, rng);
    const Matrix eo = normal_matrix(1, 4, 1.0, rng);
    const Matrix c = normal_matrix(1, 4, 1.0, rng);
    ag::Tape tape;
    const Matrix l = heads.relation_logits(tape, tape.constant(es), tape.constant(eo), tape.constant(c)).value();
    const Eigen::VectorXd zs = (p.w_t1.value * es.transpose() + p.w_t2.value * c.transpose()).array().tanh();
    const Eigen::VectorXd zo = (p.w_q1.value * eo.transpose() + p.w_q2.value * c.transpose()).array().tanh();
    for (int k = 0; k < 3; ++k) {
      double acc = 0.0;
      for (int g = 0; g < 2; ++g)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) acc += zs(g * 2 + i) * zo(g * 2 + j) * p.w_r.value(k, g * 4 + i * 2 + j);
      CHECK(std::abs(l(0, k) - acc) < 1e-12);
    }
    CHECK_THROWS_AS(fusion::Heads("h", 4, 3, 3, rng), Error);
  }

  TEST_CASE("evidence probability") {
    Rng rng(35);
    fusion::Heads heads("h", 3, 2, 0, rng);
    const Matrix s = normal_matrix(2, 3, 1.0, rng);
    const Matrix c = normal_matrix(1, 3, 1.0, rng);
    ag::Tape tape;
    heads.params().w_g.value.setZero();
    CHECK(heads.evidence_probabilities(tape, tape.constant(s), tape.constant(c)).value() == Matrix::Constant(1, 2, 0.5));

    heads.params().b_g.value(0, 0) = std::log(3.0);
    CHECK(heads.evidence_probabilities(tape, tape.constant(s), tape.constant(c)).value()(0, 1) == doctest::Approx(0.75).epsilon(1e-14));

    for (auto* q : heads.parameters()) q->value = normal_matrix(q->value.rows(), q->value.cols(), 4.0, rng);
    const Matrix p = heads.evidence_probabilities(tape, tape.constant(s), tape.constant(c)).value();
    CHECK(p.minCoeff() > 0.0);
    CHECK(p.maxCoeff() < 1.0);
  }

  TEST_CASE("fusion and head gradients match finite differences") {
    Rng rng(36);
    fusion::DedicatedAttention attn("f", 3, 2, 4, rng);
    fusion::Heads heads("h", 3, 3, 0, rng);
    const Matrix es = normal_matrix(2, 3, 1.0, rng);
    const Matrix eo = normal_matrix(2, 3, 1.0, rng);
    const Matrix c = normal_matrix(2, 3, 1.0, rng);
    const Matrix n = normal_matrix(3, 2, 1.0, rng);
    const Matrix s = normal_matrix(2, 3, 1.0, rng);
    ParamList params = attn.parameters();
    for (auto* q : heads.parameters()) params.push_back(q);
    for (auto* q : params) q->value = normal_matrix(q->value.rows(), q->value.cols(), 0.5, rng);
    const auto report = checks::finite_difference(
        params,
        [&](ag::Tape& tape) {
          const auto f = fusion::enhance_pair(tape, attn, tape.constant(es), tape.constant(eo), tape.constant(c), tape.constant(n),
                                              fusion::Weighting::kAttention);
          const auto l = heads.relation_logits(tape, f.subject, f.object, f.context);
          const auto e = heads.evidence_probabilities(tape, tape.constant(s), f.context);
          return ag::add(ag::sum(ag::mul(l, l)), ag::sum(e));
        },
        1.0, rng);
    CHECK(report.max_rel < 1e-4);
  }
}
