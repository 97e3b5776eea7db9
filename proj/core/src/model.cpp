#include "wsvae/model.hpp"

#include "wsvae/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace wsvae {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

struct LstmState {
  ag::Var h;
  ag::Var c;
};

// Gate layout in the stacked weights: [input, forget, output, candidate].
LstmState lstm_step(ag::Tape& tape, ag::Tensor& wx, ag::Tensor& wh,
                    ag::Tensor& b, ag::Var x, const LstmState& prev) {
  Eigen::Index hidden = wh.cols();
  ag::Var gates = tape.add(tape.add(tape.matvec(wx, x), tape.matvec(wh, prev.h)),
                           tape.param(b));
  ag::Var i = tape.sigmoid(tape.slice(gates, 0, hidden));
  ag::Var f = tape.sigmoid(tape.slice(gates, hidden, hidden));
  ag::Var o = tape.sigmoid(tape.slice(gates, 2 * hidden, hidden));
  ag::Var g = tape.tanh(tape.slice(gates, 3 * hidden, hidden));
  ag::Var c = tape.add(tape.cmul(f, prev.c), tape.cmul(i, g));
  ag::Var h = tape.cmul(o, tape.tanh(c));
  return {h, c};
}

LstmState lstm_initial(ag::Tape& tape, Eigen::Index hidden) {
  return {tape.constant(Vec::Zero(hidden)), tape.constant(Vec::Zero(hidden))};
}

}  // namespace

void ModelConfig::validate() const {
  require(vocab_size > 0, "ModelConfig: vocab_size must be positive");
  require(num_strategies >= 1, "ModelConfig: num_strategies must be positive");
  require(num_doc_labels >= 1, "ModelConfig: num_doc_labels must be positive");
  require(token_dim > 0 && enc_hidden > 0 && infer_hidden > 0 &&
              strategy_dim > 0 && doclabel_dim > 0 && dec_hidden > 0 &&
              pred_hidden > 0 && attn_dim > 0 && max_len > 0,
          "ModelConfig: dimensions must be positive");
  require(z_dim >= 0, "ModelConfig: z_dim must be >= 0");
}

ModelParams::ModelParams(const ModelConfig& cfg_)
    : cfg(cfg_),
      tok_emb("embed.token", cfg_.vocab_size, cfg_.token_dim),
      strategy_emb("embed.strategy", cfg_.num_strategies, cfg_.strategy_dim),
      doclabel_emb("embed.doc_label", cfg_.num_doc_labels + 1, cfg_.doclabel_dim),
      enc_wx("enc.wx", 4 * cfg_.enc_hidden, cfg_.token_dim),
      enc_wh("enc.wh", 4 * cfg_.enc_hidden, cfg_.enc_hidden),
      enc_b("enc.b", 4 * cfg_.enc_hidden, 1),
      infy_w1("infer_y.w1", cfg_.infer_hidden, cfg_.enc_hidden + cfg_.doclabel_dim),
      infy_b1("infer_y.b1", cfg_.infer_hidden, 1),
      infy_w2("infer_y.w2", cfg_.num_strategies, cfg_.infer_hidden),
      infy_b2("infer_y.b2", cfg_.num_strategies, 1),
      infz_w1("infer_z.w1", cfg_.infer_hidden,
              cfg_.enc_hidden + cfg_.strategy_dim + cfg_.doclabel_dim),
      infz_b1("infer_z.b1", cfg_.infer_hidden, 1),
      infz_w2("infer_z.w2", 2 * cfg_.z_dim, cfg_.infer_hidden),
      infz_b2("infer_z.b2", 2 * cfg_.z_dim, 1),
      dec_wx("dec.wx", 4 * cfg_.dec_hidden,
             cfg_.token_dim + cfg_.strategy_dim + cfg_.z_dim),
      dec_wh("dec.wh", 4 * cfg_.dec_hidden, cfg_.dec_hidden),
      dec_b("dec.b", 4 * cfg_.dec_hidden, 1),
      dec_wout("dec.wout", cfg_.vocab_size, cfg_.dec_hidden),
      dec_bout("dec.bout", cfg_.vocab_size, 1),
      pred_wx("pred.wx", 4 * cfg_.pred_hidden, cfg_.strategy_dim + cfg_.z_dim),
      pred_wh("pred.wh", 4 * cfg_.pred_hidden, cfg_.pred_hidden),
      pred_b("pred.b", 4 * cfg_.pred_hidden, 1),
      pred_proj_strategy("pred.proj_strategy", cfg_.attn_dim, cfg_.strategy_dim),
      pred_proj_content("pred.proj_content", cfg_.attn_dim, cfg_.z_dim),
      pred_attn_bias("pred.attn_bias", cfg_.attn_dim, 1),
      pred_attn_query("pred.attn_query", cfg_.attn_dim, 1),
      pred_combine("pred.combine", cfg_.attn_dim, cfg_.pred_hidden),
      pred_wout("pred.wout", cfg_.num_doc_labels, cfg_.attn_dim),
      pred_bout("pred.bout", cfg_.num_doc_labels, 1) {
  cfg.validate();
}

std::vector<ag::Tensor*> ModelParams::tensors() {
  return {&tok_emb,    &strategy_emb, &doclabel_emb,
          &enc_wx,     &enc_wh,       &enc_b,
          &infy_w1,    &infy_b1,      &infy_w2,    &infy_b2,
          &infz_w1,    &infz_b1,      &infz_w2,    &infz_b2,
          &dec_wx,     &dec_wh,       &dec_b,      &dec_wout, &dec_bout,
          &pred_wx,    &pred_wh,      &pred_b,
          &pred_proj_strategy, &pred_proj_content,
          &pred_attn_bias, &pred_attn_query,
          &pred_combine, &pred_wout, &pred_bout};
}

std::vector<const ag::Tensor*> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  return std::vector<const ag::Tensor*>(mut.begin(), mut.end());
}

ag::Tensor* ModelParams::find(const std::string& name) {
  for (ag::Tensor* t : tensors()) {
    if (t->name == name) return t;
  }
  return nullptr;
}

void ModelParams::init_random(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const std::vector<ag::Tensor*> biases = {&enc_b,    &infy_b1, &infy_b2,
                                           &infz_b1,  &infz_b2, &dec_b,
                                           &dec_bout, &pred_b,  &pred_bout,
                                           &pred_attn_bias};
  auto is_bias = [&](ag::Tensor* t) {
    return std::find(biases.begin(), biases.end(), t) != biases.end();
  };
  for (ag::Tensor* t : tensors()) {
    if (t->size() == 0) continue;
    if (is_bias(t)) {
      t->value.setZero();
      continue;
    }
    double r = std::sqrt(6.0 / static_cast<double>(t->rows() + t->cols()));
    std::uniform_real_distribution<double> dist(-r, r);
    for (Eigen::Index j = 0; j < t->cols(); ++j) {
      for (Eigen::Index i = 0; i < t->rows(); ++i) t->value(i, j) = dist(gen);
    }
  }
  // Forget-gate bias starts open so early sequences propagate state.
  for (ag::Tensor* b : {&enc_b, &dec_b, &pred_b}) {
    Eigen::Index hidden = b->rows() / 4;
    b->value.block(hidden, 0, hidden, 1).setConstant(1.0);
  }
}

void ModelParams::zero_grad() {
  for (ag::Tensor* t : tensors()) t->zero_grad();
}

Eigen::Index ModelParams::param_count() const {
  Eigen::Index n = 0;
  for (const ag::Tensor* t : tensors()) n += t->size();
  return n;
}

Vec ModelParams::flatten() const {
  Vec out(param_count());
  Eigen::Index off = 0;
  for (const ag::Tensor* t : tensors()) {
    out.segment(off, t->size()) =
        Eigen::Map<const Vec>(t->value.data(), t->size());
    off += t->size();
  }
  return out;
}

Vec ModelParams::flatten_grad() const {
  Vec out(param_count());
  Eigen::Index off = 0;
  for (const ag::Tensor* t : tensors()) {
    out.segment(off, t->size()) =
        Eigen::Map<const Vec>(t->grad.data(), t->size());
    off += t->size();
  }
  return out;
}

void ModelParams::unflatten(const Vec& theta) {
  require(theta.size() == param_count(), "unflatten: size mismatch");
  Eigen::Index off = 0;
  for (ag::Tensor* t : tensors()) {
    Eigen::Map<Vec>(t->value.data(), t->size()) = theta.segment(off, t->size());
    off += t->size();
  }
}

ag::Var doc_label_embedding_node(ag::Tape& tape, ModelParams& params,
                                 std::optional<int> doc_label) {
  Eigen::Index row = params.cfg.num_doc_labels;  // "absent"
  if (doc_label) {
    require(*doc_label >= 0 && *doc_label < params.cfg.num_doc_labels,
            "doc_label out of range");
    row = *doc_label;
  }
  return tape.row(params.doclabel_emb, row);
}

ag::Var encode_tokens_node(ag::Tape& tape, ModelParams& params,
                           const std::vector<int>& tokens) {
  require(!tokens.empty(), "encode: empty token sequence");
  LstmState state = lstm_initial(tape, params.cfg.enc_hidden);
  Eigen::Index len = std::min<Eigen::Index>(tokens.size(), params.cfg.max_len);
  for (Eigen::Index i = 0; i < len; ++i) {
    int id = tokens[static_cast<std::size_t>(i)];
    require(id >= 0 && id < params.cfg.vocab_size,
            "encode: token id outside vocabulary");
    ag::Var x = tape.row(params.tok_emb, id);
    state = lstm_step(tape, params.enc_wx, params.enc_wh, params.enc_b, x, state);
  }
  return state.h;
}

ag::Var y_logits_node(ag::Tape& tape, ModelParams& params, ag::Var enc,
                      ag::Var label_emb) {
  ag::Var x = tape.concat({enc, label_emb});
  ag::Var h = tape.tanh(tape.affine(params.infy_w1, x, params.infy_b1));
  return tape.affine(params.infy_w2, h, params.infy_b2);
}

ZHeadNodes z_params_node(ag::Tape& tape, ModelParams& params, ag::Var enc,
                         ag::Var strategy_mix, ag::Var label_emb) {
  ag::Var x = tape.concat({enc, strategy_mix, label_emb});
  ag::Var h = tape.tanh(tape.affine(params.infz_w1, x, params.infz_b1));
  ag::Var out = tape.affine(params.infz_w2, h, params.infz_b2);
  Eigen::Index dz = params.cfg.z_dim;
  return {tape.slice(out, 0, dz), tape.slice(out, dz, dz)};
}

ag::Var strategy_mix_node(ag::Tape& tape, ModelParams& params, ag::Var y) {
  require(tape.value(y).size() == params.cfg.num_strategies,
          "strategy_mix: y dimension mismatch");
  return tape.matvec_t(params.strategy_emb, y);
}

std::vector<int> with_eos(const std::vector<int>& tokens) {
  std::vector<int> t = tokens;
  t.push_back(Vocab::kEos);
  return t;
}

ag::Var decode_loglik_node(ag::Tape& tape, ModelParams& params,
                           ag::Var strategy_mix, ag::Var z,
                           const std::vector<int>& targets) {
  require(!targets.empty(), "decode: empty target sequence");
  LstmState state = lstm_initial(tape, params.cfg.dec_hidden);
  std::vector<ag::Var> position_loglik;
  position_loglik.reserve(targets.size());
  int prev = Vocab::kBos;
  for (int target : targets) {
    require(target >= 0 && target < params.cfg.vocab_size,
            "decode: token id outside vocabulary");
    ag::Var x =
        tape.concat({tape.row(params.tok_emb, prev), strategy_mix, z});
    state = lstm_step(tape, params.dec_wx, params.dec_wh, params.dec_b, x, state);
    ag::Var logits = tape.affine(params.dec_wout, state.h, params.dec_bout);
    position_loglik.push_back(tape.pick(tape.log_softmax(logits), target));
    prev = target;
  }
  ag::Var total = tape.add_all(position_loglik);
  return total;
}

DocPredNodes predict_document_node(
    ag::Tape& tape, ModelParams& params,
    const std::vector<std::pair<ag::Var, ag::Var>>& strategy_content_pairs) {
  require(!strategy_content_pairs.empty(), "predict_document: empty document");

  LstmState state = lstm_initial(tape, params.cfg.pred_hidden);
  std::vector<ag::Var> slots;  // projected, ordered strategy then content per sentence
  slots.reserve(2 * strategy_content_pairs.size());
  for (const auto& [strat, content] : strategy_content_pairs) {
    ag::Var x = tape.concat({strat, content});
    state = lstm_step(tape, params.pred_wx, params.pred_wh, params.pred_b, x, state);
    slots.push_back(tape.matvec(params.pred_proj_strategy, strat));
    slots.push_back(tape.matvec(params.pred_proj_content, content));
  }

  std::vector<ag::Var> scores;
  scores.reserve(slots.size());
  for (ag::Var u : slots) {
    ag::Var keyed = tape.tanh(tape.add(u, tape.param(params.pred_attn_bias)));
    scores.push_back(tape.dot(tape.param(params.pred_attn_query), keyed));
  }
  ag::Var attention = tape.softmax(tape.concat(scores));

  std::vector<ag::Var> weighted;
  weighted.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    ag::Var a = tape.pick(attention, static_cast<Eigen::Index>(i));
    weighted.push_back(tape.scale_by(slots[i], a));
  }
  ag::Var pooled = tape.add_all(weighted);
  ag::Var rep = tape.tanh(tape.add(pooled, tape.matvec(params.pred_combine, state.h)));
  ag::Var logits = tape.affine(params.pred_wout, rep, params.pred_bout);
  return {tape.log_softmax(logits), attention};
}

SentencePosterior encode_sentence(ModelParams& params,
                                  const std::vector<int>& tokens,
                                  std::optional<int> doc_label) {
  ag::Tape tape;
  ag::Var enc = encode_tokens_node(tape, params, tokens);
  ag::Var label_emb = doc_label_embedding_node(tape, params, doc_label);
  ag::Var probs = tape.softmax(y_logits_node(tape, params, enc, label_emb));

  SentencePosterior post;
  post.y_probs = CategoricalParams(tape.value(probs));
  post.z_given_y.reserve(params.cfg.num_strategies);
  for (int k = 0; k < params.cfg.num_strategies; ++k) {
    ag::Var strat = tape.row(params.strategy_emb, k);
    ZHeadNodes zp = z_params_node(tape, params, enc, strat, label_emb);
    Vec sigma = tape.value(zp.log_sigma).array().exp();
    post.z_given_y.emplace_back(tape.value(zp.mu), std::move(sigma));
  }
  return post;
}

double decode_sentence(ModelParams& params, const Vec& y, const Vec& z,
                       const std::vector<int>& targets) {
  require(y.size() == params.cfg.num_strategies, "decode: y dimension mismatch");
  require(z.size() == params.cfg.z_dim, "decode: z dimension mismatch");
  ag::Tape tape;
  ag::Var mix = strategy_mix_node(tape, params, tape.constant(y));
  ag::Var ll = decode_loglik_node(tape, params, mix, tape.constant(z), targets);
  return tape.scalar_value(ll);
}

DocPrediction predict_document(
    ModelParams& params, const std::vector<std::pair<Vec, Vec>>& latent_pairs) {
  require(!latent_pairs.empty(), "predict_document: empty document");
  ag::Tape tape;
  std::vector<std::pair<ag::Var, ag::Var>> pairs;
  pairs.reserve(latent_pairs.size());
  for (const auto& [y, z] : latent_pairs) {
    require(y.size() == params.cfg.num_strategies,
            "predict_document: y dimension mismatch");
    require(z.size() == params.cfg.z_dim,
            "predict_document: z dimension mismatch");
    pairs.emplace_back(strategy_mix_node(tape, params, tape.constant(y)),
                       tape.constant(z));
  }
  DocPredNodes nodes = predict_document_node(tape, params, pairs);
  DocPrediction pred;
  pred.t_probs = CategoricalParams(tape.value(nodes.log_t_probs).array().exp());
  pred.attention = tape.value(nodes.attention);
  return pred;
}

Mat strategy_similarity(const ModelParams& params) {
  const Mat& e = params.strategy_emb.value;
  Eigen::Index k = e.rows();
  Vec norms(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    norms[i] = e.row(i).norm();
    if (norms[i] == 0.0)
      throw std::domain_error("strategy_similarity: zero-norm embedding row");
  }
  Mat sim(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      sim(i, j) = e.row(i).dot(e.row(j)) / (norms[i] * norms[j]);
    }
  }
  return sim;
}

}  // namespace wsvae
