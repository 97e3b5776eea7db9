#include <doctest.h>

#include <cmath>
#include <random>

#include "wsvae/corpus.hpp"
#include "wsvae/model.hpp"
#include "wsvae/oracle.hpp"

using namespace wsvae;
using ag::Vec;

namespace {

ModelConfig toy_config(int vocab, int k, int t = 2) {
  ModelConfig cfg;
  cfg.vocab_size = vocab;
  cfg.num_strategies = k;
  cfg.num_doc_labels = t;
  cfg.token_dim = 4;
  cfg.enc_hidden = 5;
  cfg.infer_hidden = 4;
  cfg.z_dim = 0;
  cfg.strategy_dim = 3;
  cfg.doclabel_dim = 2;
  cfg.dec_hidden = 5;
  cfg.pred_hidden = 4;
  cfg.attn_dim = 4;
  cfg.max_len = 3;
  return cfg;
}

PriorEstimate uniform_prior(int k) {
  return PriorEstimate{CategoricalParams(Vec::Constant(k, 1.0 / k)), 0};
}

Document make_doc(std::vector<std::vector<int>> sentences, int label) {
  Document doc;
  doc.doc_id = "toy";
  doc.doc_label = label;
  for (auto& toks : sentences) {
    Sentence s;
    s.tokens = std::move(toks);
    doc.sentences.push_back(std::move(s));
  }
  return doc;
}

void force_uniform_decoder(ModelParams& params) {
  params.dec_wout.value.setZero();
  params.dec_bout.value.setZero();
}

void force_uniform_predictor(ModelParams& params) {
  params.pred_wout.value.setZero();
  params.pred_bout.value.setZero();
}

}  // namespace

TEST_CASE("sentence marginal with a single class is the decoder likelihood") {
  ModelParams params(toy_config(6, 1));
  params.init_random(3);
  PriorEstimate prior = uniform_prior(1);
  std::vector<int> tokens = {4, 5};
  double marginal = oracle::exact_sentence_log_marginal(params, prior, tokens);
  Vec y1 = Vec::Ones(1);
  double ll = decode_sentence(params, y1, Vec::Zero(0), with_eos(tokens));
  CHECK(marginal == doctest::Approx(ll).epsilon(1e-12));
}

TEST_CASE("sentence marginal under uniform prior and uniform decoder") {
  ModelParams params(toy_config(4, 2));
  params.init_random(5);
  force_uniform_decoder(params);
  PriorEstimate prior = uniform_prior(2);
  // Two positions, each uniform over 4 tokens: p(s|y) = 1/16 for both classes.
  std::vector<int> targets_source = {1};  // with_eos appends -> length 2
  double marginal = oracle::exact_sentence_log_marginal(params, prior, targets_source);
  CHECK(marginal == doctest::Approx(std::log(1.0 / 16.0)).epsilon(1e-9));
}

TEST_CASE("the bound is tight at the true posterior") {
  ModelParams params(toy_config(6, 3));
  params.init_random(7);
  PriorEstimate prior = uniform_prior(3);
  std::vector<int> tokens = {2, 4, 5};

  // True posterior: p(y|s) over the enumerated joint.
  Vec joint(3);
  for (int k = 0; k < 3; ++k) {
    Vec y = Vec::Zero(3);
    y[k] = 1.0;
    joint[k] = std::log(prior.y_prior.probs[k]) +
               decode_sentence(params, y, Vec::Zero(0), with_eos(tokens));
  }
  double marginal = oracle::exact_sentence_log_marginal(params, prior, tokens);
  Vec posterior = (joint.array() - marginal).exp();
  double elbo = oracle::exact_sentence_elbo(params, prior, tokens,
                                            CategoricalParams(posterior), 0.0);
  CHECK(elbo == doctest::Approx(marginal).epsilon(1e-9));
}

TEST_CASE("sentence bound never exceeds the marginal at random parameters") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    ModelParams params(toy_config(6, 3));
    params.init_random(gen());
    PriorEstimate prior = uniform_prior(3);
    std::vector<int> tokens = {static_cast<int>(gen() % 6),
                               static_cast<int>(gen() % 6)};
    double marginal = oracle::exact_sentence_log_marginal(params, prior, tokens);
    double elbo = oracle::exact_sentence_elbo(params, prior, tokens,
                                              std::optional<int>(0), 0.0);
    CHECK(elbo <= marginal + 1e-6);
  }
}

TEST_CASE("doc marginal at M=1 factorizes under a forced-uniform predictor") {
  ModelParams params(toy_config(6, 2));
  params.init_random(13);
  force_uniform_predictor(params);
  PriorEstimate prior = uniform_prior(2);
  Document doc = make_doc({{3, 4}}, 1);
  double doc_marginal = oracle::exact_doc_log_marginal(params, prior, doc);
  double sent_marginal =
      oracle::exact_sentence_log_marginal(params, prior, doc.sentences[0].tokens);
  CHECK(doc_marginal ==
        doctest::Approx(std::log(0.5) + sent_marginal).epsilon(1e-9));

  // Two sentences: sum of sentence marginals plus log(1/T).
  Document doc2 = make_doc({{3, 4}, {1}}, 0);
  double m2 = oracle::exact_doc_log_marginal(params, prior, doc2);
  double s1 = oracle::exact_sentence_log_marginal(params, prior, {3, 4});
  double s2 = oracle::exact_sentence_log_marginal(params, prior, {1});
  CHECK(m2 == doctest::Approx(std::log(0.5) + s1 + s2).epsilon(1e-9));
}

TEST_CASE("doc bound never exceeds the doc marginal at random parameters") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 50; ++trial) {
    ModelParams params(toy_config(6, 2));
    params.init_random(gen());
    PriorEstimate prior = uniform_prior(2);
    Document doc = make_doc({{static_cast<int>(gen() % 6)},
                             {static_cast<int>(gen() % 6), 2}},
                            static_cast<int>(gen() % 2));
    double marginal = oracle::exact_doc_log_marginal(params, prior, doc);
    double bound = oracle::exact_doc_bound(params, prior, doc, 0.0);
    CHECK(bound <= marginal + 1e-6);
  }
}

TEST_CASE("quadrature KL agrees with closed forms") {
  GaussianParams std3(Vec::Zero(3), Vec::Ones(3));
  CHECK(std::abs(oracle::numeric_kl(std3, std3)) < 1e-8);

  CategoricalParams point((Vec(2) << 1.0, 0.0).finished());
  CategoricalParams uniform((Vec(2) << 0.5, 0.5).finished());
  CHECK(oracle::numeric_kl(point, uniform) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> mu_dist(-2.0, 2.0);
  std::uniform_real_distribution<double> sig_dist(0.3, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int d = 1 + static_cast<int>(gen() % 4);
    Vec mu_q(d), sig_q(d), mu_p(d), sig_p(d);
    for (int i = 0; i < d; ++i) {
      mu_q[i] = mu_dist(gen);
      sig_q[i] = sig_dist(gen);
      mu_p[i] = mu_dist(gen);
      sig_p[i] = sig_dist(gen);
    }
    GaussianParams q(mu_q, sig_q), p(mu_p, sig_p);
    double closed = 0.0;
    for (int i = 0; i < d; ++i) {
      closed += std::log(sig_p[i] / sig_q[i]) +
                (sig_q[i] * sig_q[i] +
                 (mu_q[i] - mu_p[i]) * (mu_q[i] - mu_p[i])) /
                    (2.0 * sig_p[i] * sig_p[i]) -
                0.5;
    }
    worst = std::max(worst, std::abs(oracle::numeric_kl(q, p) - closed));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("finite differences: correctness and second-order convergence") {
  auto square = [](const Vec& x) { return x[0] * x[0]; };
  Vec theta = Vec::Constant(1, 3.0);
  Vec g = oracle::finite_diff_grad(square, theta, 1e-4);
  CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-6));

  // Central differences have O(h^2) error; halving h quarters it on x^3.
  auto cube = [](const Vec& x) { return x[0] * x[0] * x[0]; };
  Vec at_one = Vec::Constant(1, 1.0);
  double err_h = std::abs(oracle::finite_diff_grad(cube, at_one, 1e-2)[0] - 3.0);
  double err_h2 = std::abs(oracle::finite_diff_grad(cube, at_one, 5e-3)[0] - 3.0);
  CHECK(err_h2 == doctest::Approx(err_h / 4.0).epsilon(1e-3));

  auto bad = [](const Vec&) { return std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS(oracle::finite_diff_grad(bad, at_one, 1e-4));
}

TEST_CASE("toy spec rejects models outside its limits") {
  ModelConfig big = toy_config(6, 3);
  big.z_dim = 2;
  ModelParams params(big);
  params.init_random(1);
  PriorEstimate prior = uniform_prior(3);
  CHECK_THROWS(oracle::exact_sentence_log_marginal(params, prior, {1}));

  ModelParams ok(toy_config(6, 3));
  ok.init_random(1);
  CHECK_THROWS(oracle::exact_sentence_log_marginal(ok, prior, {1, 2, 3, 4}));
}
