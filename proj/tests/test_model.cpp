#include <doctest.h>

#include <random>

#include "wsvae/corpus.hpp"
#include "wsvae/model.hpp"
#include "wsvae/oracle.hpp"

using namespace wsvae;
using ag::Vec;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.vocab_size = 20;
  cfg.num_strategies = 3;
  cfg.num_doc_labels = 2;
  cfg.token_dim = 6;
  cfg.enc_hidden = 8;
  cfg.infer_hidden = 8;
  cfg.z_dim = 4;
  cfg.strategy_dim = 5;
  cfg.doclabel_dim = 3;
  cfg.dec_hidden = 8;
  cfg.pred_hidden = 8;
  cfg.attn_dim = 8;
  cfg.max_len = 16;
  return cfg;
}

Vec onehot(int k, int dim) {
  Vec v = Vec::Zero(dim);
  v[k] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("encode_sentence produces a valid posterior deterministically") {
  ModelParams params(tiny_config());
  params.init_random(3);
  std::vector<int> tokens = {4, 9, 12, 4};

  SentencePosterior a = encode_sentence(params, tokens, 1);
  CHECK(std::abs(a.y_probs.probs.sum() - 1.0) <= 1e-6);
  REQUIRE(a.z_given_y.size() == 3);
  for (const GaussianParams& g : a.z_given_y) {
    CHECK(g.dim() == 4);
    CHECK((g.sigma.array() > 0.0).all());
  }

  SentencePosterior b = encode_sentence(params, tokens, 1);
  CHECK((a.y_probs.probs - b.y_probs.probs).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS(encode_sentence(params, {4, 25}, 1));  // id beyond vocab
  CHECK_THROWS(encode_sentence(params, {}, 1));
}

TEST_CASE("document label embedding is wired into the posterior") {
  ModelParams params(tiny_config());
  params.init_random(11);
  std::vector<int> tokens = {3, 7, 5};
  SentencePosterior with_label = encode_sentence(params, tokens, 0);
  SentencePosterior absent = encode_sentence(params, tokens, std::nullopt);
  double diff =
      (with_label.y_probs.probs - absent.y_probs.probs).cwiseAbs().maxCoeff();
  CHECK(diff > 1e-8);
}

TEST_CASE("encoding ignores tokens beyond max_len") {
  ModelConfig cfg = tiny_config();
  cfg.max_len = 4;
  ModelParams params(cfg);
  params.init_random(5);
  std::vector<int> prefix = {1, 2, 3, 4};
  std::vector<int> longer = {1, 2, 3, 4, 5, 6, 7};
  SentencePosterior a = encode_sentence(params, prefix, 0);
  SentencePosterior b = encode_sentence(params, longer, 0);
  CHECK((a.y_probs.probs - b.y_probs.probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("decode_sentence is a log-likelihood") {
  ModelParams params(tiny_config());
  params.init_random(7);
  Vec y = onehot(1, 3);
  Vec z = Vec::Zero(4);
  std::vector<int> targets = with_eos({5, 6, 7});
  double ll = decode_sentence(params, y, z, targets);
  CHECK(ll <= 0.0);

  // A soft vector with almost all mass on the gold class stays within 1e-5.
  Vec soft = Vec::Constant(3, 0.5e-9);
  soft[1] = 1.0 - 1e-9;
  double ll_soft = decode_sentence(params, soft, z, targets);
  CHECK(ll == doctest::Approx(ll_soft).epsilon(1e-5));

  CHECK_THROWS(decode_sentence(params, y, z, {}));
}

TEST_CASE("decode_sentence under a uniform output head") {
  ModelConfig cfg = tiny_config();
  cfg.vocab_size = 50;
  ModelParams params(cfg);
  params.init_random(9);
  params.dec_wout.value.setZero();  // logits constant -> uniform over vocab
  params.dec_bout.value.setZero();
  std::vector<int> targets = {10, 20, 30, Vocab::kEos};  // length 4
  double ll = decode_sentence(params, onehot(0, 3), Vec::Zero(4), targets);
  CHECK(ll == doctest::Approx(4.0 * std::log(1.0 / 50.0)).epsilon(1e-9));
}

TEST_CASE("predict_document yields simplex outputs and 2M attention slots") {
  ModelParams params(tiny_config());
  params.init_random(13);
  std::vector<std::pair<Vec, Vec>> pairs;
  std::mt19937_64 gen(5);
  for (int j = 0; j < 3; ++j) {
    Vec y = Vec::Random(3).cwiseAbs();
    y /= y.sum();
    pairs.emplace_back(y, Vec::Random(4));
  }
  DocPrediction pred = predict_document(params, pairs);
  CHECK(std::abs(pred.t_probs.probs.sum() - 1.0) <= 1e-6);
  CHECK(pred.attention.size() == 6);
  CHECK(std::abs(pred.attention.sum() - 1.0) <= 1e-6);

  std::vector<std::pair<Vec, Vec>> one = {pairs[0]};
  DocPrediction single = predict_document(params, one);
  CHECK(single.attention.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(single.attention[i] > 0.0);
    CHECK(single.attention[i] < 1.0);
  }

  CHECK_THROWS(predict_document(params, {}));
}

TEST_CASE("predictor is order-sensitive") {
  ModelParams params(tiny_config());
  params.init_random(17);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int j = 0; j < 3; ++j)
    pairs.emplace_back(onehot(j, 3), Vec::Constant(4, 0.1 * (j + 1)));
  DocPrediction fwd = predict_document(params, pairs);
  std::reverse(pairs.begin(), pairs.end());
  DocPrediction rev = predict_document(params, pairs);
  CHECK((fwd.t_probs.probs - rev.t_probs.probs).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("strategy_similarity is a valid cosine matrix") {
  ModelParams params(tiny_config());
  params.init_random(19);
  Mat sim = strategy_similarity(params);
  REQUIRE(sim.rows() == 3);
  for (int i = 0; i < 3; ++i) CHECK(sim(i, i) == doctest::Approx(1.0).epsilon(1e-6));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(sim(i, j) == doctest::Approx(sim(j, i)).epsilon(1e-6));
      CHECK(sim(i, j) >= -1.0 - 1e-9);
      CHECK(sim(i, j) <= 1.0 + 1e-9);
    }
  }

  params.strategy_emb.value.setZero();
  params.strategy_emb.value(0, 0) = 1.0;  // rows 1.. are zero
  CHECK_THROWS(strategy_similarity(params));

  // Hand-set orthogonal rows.
  params.strategy_emb.value.setZero();
  params.strategy_emb.value(0, 0) = 2.0;
  params.strategy_emb.value(1, 1) = 3.0;
  params.strategy_emb.value(2, 2) = 1.0;
  Mat orth = strategy_similarity(params);
  CHECK(orth(0, 1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(orth(0, 2) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("every parameter group receives gradient and matches finite differences") {
  ModelParams params(tiny_config());
  params.init_random(23);
  std::vector<int> tokens = {2, 5, 9};
  std::vector<int> targets = with_eos(tokens);

  // Loss: teacher-forced reconstruction plus document cross-entropy, touching
  // encoder, heads, decoder, and predictor.
  auto eval = [&]() {
    ag::Tape tape;
    ag::Var label_emb = doc_label_embedding_node(tape, params, 1);
    ag::Var enc = encode_tokens_node(tape, params, tokens);
    ag::Var y = tape.softmax(y_logits_node(tape, params, enc, label_emb));
    ag::Var mix = strategy_mix_node(tape, params, y);
    ZHeadNodes zp = z_params_node(tape, params, enc, mix, label_emb);
    ag::Var z = tape.add(zp.mu, tape.exp(zp.log_sigma));
    ag::Var recon = decode_loglik_node(tape, params, mix, z, targets);
    DocPredNodes pred = predict_document_node(tape, params, {{mix, z}, {mix, z}});
    ag::Var loss = tape.sub(tape.scale(tape.pick(pred.log_t_probs, 1), -1.0), recon);
    tape.backward(loss);
    return tape.scalar_value(loss);
  };

  params.zero_grad();
  eval();
  Vec analytic = params.flatten_grad();

  for (const ag::Tensor* t : params.tensors()) {
    if (t->size() == 0) continue;
    CHECK_MESSAGE(t->grad.cwiseAbs().maxCoeff() > 0.0,
                  "no gradient reached " << t->name);
  }

  Vec theta0 = params.flatten();
  Vec fd = oracle::finite_diff_grad(
      [&](const Vec& theta) {
        params.unflatten(theta);
        params.zero_grad();
        return eval();
      },
      theta0, 1e-5);
  params.unflatten(theta0);

  int bad = 0;
  for (Eigen::Index i = 0; i < fd.size(); ++i) {
    double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-6});
    if (std::abs(analytic[i] - fd[i]) / denom > 1e-3) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("z_dim = 0 removes the content pathway cleanly") {
  ModelConfig cfg = tiny_config();
  cfg.z_dim = 0;
  cfg.vocab_size = 8;
  ModelParams params(cfg);
  params.init_random(29);
  SentencePosterior post = encode_sentence(params, {2, 3}, 0);
  CHECK(post.z_given_y[0].dim() == 0);
  double ll = decode_sentence(params, onehot(0, 3), Vec::Zero(0), with_eos({2, 3}));
  CHECK(ll <= 0.0);
  DocPrediction pred =
      predict_document(params, {{onehot(0, 3), Vec::Zero(0)}});
  CHECK(std::abs(pred.t_probs.probs.sum() - 1.0) <= 1e-6);
}

TEST_CASE("checkpoint-addressable parameter names") {
  ModelParams params(tiny_config());
  CHECK(params.find("embed.strategy") == &params.strategy_emb);
  CHECK(params.find("pred.attn_query") == &params.pred_attn_query);
  CHECK(params.find("nope") == nullptr);
  CHECK(params.param_count() == params.flatten().size());
}
