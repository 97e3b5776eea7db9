#include "wsvae/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace wsvae {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Vec onehot(int k, Eigen::Index dim) {
  Vec v = Vec::Zero(dim);
  v[k] = 1.0;
  return v;
}

}  // namespace

ModeFlags ModeFlags::for_mode(ModelMode mode) {
  switch (mode) {
    case ModelMode::WsVae:
      return {true, true, true};
    case ModelMode::SVae:
      return {false, false, true};
    case ModelMode::SupervisedOnly:
      return {false, false, false};
  }
  return {};
}

SentenceNoise draw_sentence_noise(std::mt19937_64& gen, int num_strategies,
                                  int z_dim) {
  return {draw_gumbel(gen, num_strategies), draw_standard_normal(gen, z_dim)};
}

DocNoise draw_doc_noise(std::mt19937_64& gen, int num_strategies, int z_dim,
                        std::size_t num_sentences) {
  DocNoise noise;
  noise.sentences.reserve(num_sentences);
  for (std::size_t j = 0; j < num_sentences; ++j)
    noise.sentences.push_back(draw_sentence_noise(gen, num_strategies, z_dim));
  return noise;
}

SentenceTermNodes build_sentence_terms(ag::Tape& tape, ModelParams& params,
                                       const PriorEstimate& priors,
                                       const std::vector<int>& tokens,
                                       std::optional<int> y_gold,
                                       std::optional<int> doc_label,
                                       const SentenceNoise& noise,
                                       const ObjectiveWeights& weights,
                                       bool want_disc) {
  require(noise.gumbel.size() == params.cfg.num_strategies &&
              noise.eps.size() == params.cfg.z_dim,
          "sentence terms: noise dimensions do not match the model");
  if (y_gold)
    require(*y_gold >= 0 && *y_gold < params.cfg.num_strategies,
            "sentence terms: gold strategy out of range");

  SentenceTermNodes out;
  ag::Var enc = encode_tokens_node(tape, params, tokens);
  ag::Var label_emb = doc_label_embedding_node(tape, params, doc_label);
  ag::Var log_q = tape.log_softmax(y_logits_node(tape, params, enc, label_emb));

  if (y_gold) {
    out.strategy_vec = tape.row(params.strategy_emb, *y_gold);
    out.kl_y = tape.scalar(0.0);
    if (want_disc) out.disc = tape.scale(tape.pick(log_q, *y_gold), -1.0);
  } else {
    ag::Var y = gumbel_softmax_node(tape, log_q, weights.tau, noise.gumbel);
    out.strategy_vec = strategy_mix_node(tape, params, y);
    ag::Var kl_raw =
        kl_categorical_node(tape, log_q, priors.y_prior.log_probs());
    out.free_bits_active =
        tape.scalar_value(kl_raw) < weights.kl_threshold;
    out.kl_y = free_bits_node(tape, kl_raw, weights.kl_threshold);
  }

  ZHeadNodes zp =
      z_params_node(tape, params, enc, out.strategy_vec, label_emb);
  out.content_vec = reparam_gaussian_node(tape, zp.mu, zp.log_sigma, noise.eps);
  out.kl_z = kl_gaussian_std_node(tape, zp.mu, zp.log_sigma);
  out.recon_nll = tape.scale(
      decode_loglik_node(tape, params, out.strategy_vec, out.content_vec,
                         with_eos(tokens)),
      -1.0);
  return out;
}

DocTermNodes build_doc_terms(ag::Tape& tape, ModelParams& params,
                             const PriorEstimate& priors, const Document& doc,
                             const DocNoise& noise,
                             const ObjectiveWeights& weights,
                             const ModeFlags& flags) {
  require(!doc.sentences.empty(), "doc terms: document has no sentences");
  require(noise.sentences.size() == doc.sentences.size(),
          "doc terms: noise does not cover every sentence");

  DocTermNodes out;
  std::optional<int> label_input =
      flags.doc_label_input ? std::optional<int>(doc.doc_label) : std::nullopt;

  std::vector<ag::Var> recon, klz, kly, disc;
  std::vector<std::pair<ag::Var, ag::Var>> latent_pairs;
  for (std::size_t j = 0; j < doc.sentences.size(); ++j) {
    const Sentence& s = doc.sentences[j];
    if (!flags.generative) {
      if (s.labeled()) {
        ag::Var enc = encode_tokens_node(tape, params, s.tokens);
        ag::Var label_emb = doc_label_embedding_node(tape, params, label_input);
        ag::Var log_q =
            tape.log_softmax(y_logits_node(tape, params, enc, label_emb));
        disc.push_back(tape.scale(tape.pick(log_q, *s.strategy), -1.0));
      }
      continue;
    }
    SentenceTermNodes terms =
        build_sentence_terms(tape, params, priors, s.tokens, s.strategy,
                             label_input, noise.sentences[j], weights,
                             /*want_disc=*/true);
    recon.push_back(terms.recon_nll);
    klz.push_back(terms.kl_z);
    if (!s.labeled()) {
      kly.push_back(terms.kl_y);
      ++out.free_bits_total;
      if (terms.free_bits_active) ++out.free_bits_active;
    }
    if (terms.disc) disc.push_back(*terms.disc);
    latent_pairs.emplace_back(terms.strategy_vec, terms.content_vec);
  }

  out.recon_nll = recon.empty() ? tape.scalar(0.0) : tape.add_all(recon);
  out.kl_z = klz.empty() ? tape.scalar(0.0) : tape.add_all(klz);
  out.kl_y = kly.empty() ? tape.scalar(0.0) : tape.add_all(kly);
  if (!disc.empty()) out.disc_nll = tape.add_all(disc);
  if (flags.doc_term && flags.generative) {
    DocPredNodes pred = predict_document_node(tape, params, latent_pairs);
    out.doc_pred_nll =
        tape.scale(tape.pick(pred.log_t_probs, doc.doc_label), -1.0);
  }
  return out;
}

std::pair<double, LossBreakdown> sentence_elbo_unlabeled(
    ModelParams& params, const PriorEstimate& priors, const Sentence& s,
    std::optional<int> doc_label, const SentenceNoise& noise,
    const ObjectiveWeights& weights) {
  require(!s.labeled(), "sentence_elbo_unlabeled: sentence carries a label");
  ag::Tape tape;
  SentenceTermNodes terms =
      build_sentence_terms(tape, params, priors, s.tokens, std::nullopt,
                           doc_label, noise, weights, /*want_disc=*/false);
  LossBreakdown br;
  br.reconstruction = tape.scalar_value(terms.recon_nll);
  br.kl_z = tape.scalar_value(terms.kl_z);
  br.kl_y = tape.scalar_value(terms.kl_y);
  br.total = br.reconstruction + br.kl_z + br.kl_y;
  return {-br.total, br};
}

std::pair<double, LossBreakdown> sentence_elbo_labeled(
    ModelParams& params, const PriorEstimate& priors, const Sentence& s,
    int y_gold, std::optional<int> doc_label, const SentenceNoise& noise,
    const ObjectiveWeights& weights) {
  require(y_gold >= 0 && y_gold < params.cfg.num_strategies,
          "sentence_elbo_labeled: gold strategy out of range");
  ag::Tape tape;
  SentenceTermNodes terms =
      build_sentence_terms(tape, params, priors, s.tokens, y_gold, doc_label,
                           noise, weights, /*want_disc=*/false);
  LossBreakdown br;
  br.reconstruction = tape.scalar_value(terms.recon_nll);
  br.kl_z = tape.scalar_value(terms.kl_z);
  br.total = br.reconstruction + br.kl_z;
  return {-br.total, br};
}

double discriminative_loss(ModelParams& params, const Sentence& s, int y_gold,
                           std::optional<int> doc_label) {
  require(y_gold >= 0 && y_gold < params.cfg.num_strategies,
          "discriminative_loss: gold strategy out of range");
  ag::Tape tape;
  ag::Var enc = encode_tokens_node(tape, params, s.tokens);
  ag::Var label_emb = doc_label_embedding_node(tape, params, doc_label);
  ag::Var log_q = tape.log_softmax(y_logits_node(tape, params, enc, label_emb));
  return -tape.scalar_value(tape.pick(log_q, y_gold));
}

std::pair<double, LossBreakdown> doc_bound_unlabeled(
    ModelParams& params, const PriorEstimate& priors, const Document& doc,
    const DocNoise& noise, const ObjectiveWeights& weights) {
  for (const Sentence& s : doc.sentences)
    require(!s.labeled(), "doc_bound_unlabeled: document has labeled sentences");
  ag::Tape tape;
  DocTermNodes terms = build_doc_terms(tape, params, priors, doc, noise,
                                       weights, ModeFlags{true, true, true});
  LossBreakdown br;
  br.reconstruction = tape.scalar_value(terms.recon_nll);
  br.kl_z = tape.scalar_value(terms.kl_z);
  br.kl_y = tape.scalar_value(terms.kl_y);
  br.doc_prediction = tape.scalar_value(*terms.doc_pred_nll);
  br.total = br.reconstruction + br.doc_prediction + br.kl_z + br.kl_y;
  return {-br.total, br};
}

std::pair<double, LossBreakdown> doc_bound_labeled(
    ModelParams& params, const PriorEstimate& priors, const Document& doc,
    const std::vector<int>& y_gold_seq, const DocNoise& noise,
    const ObjectiveWeights& weights) {
  require(y_gold_seq.size() == doc.sentences.size(),
          "doc_bound_labeled: label count does not match sentence count");
  Document labeled = doc;
  for (std::size_t j = 0; j < y_gold_seq.size(); ++j) {
    require(y_gold_seq[j] >= 0 && y_gold_seq[j] < params.cfg.num_strategies,
            "doc_bound_labeled: gold strategy out of range");
    labeled.sentences[j].strategy = y_gold_seq[j];
  }
  ag::Tape tape;
  DocTermNodes terms = build_doc_terms(tape, params, priors, labeled, noise,
                                       weights, ModeFlags{true, true, true});
  LossBreakdown br;
  br.reconstruction = tape.scalar_value(terms.recon_nll);
  br.kl_z = tape.scalar_value(terms.kl_z);
  br.doc_prediction = tape.scalar_value(*terms.doc_pred_nll);
  br.total = br.reconstruction + br.doc_prediction + br.kl_z;
  return {-br.total, br};
}

ag::Var total_loss_node(ag::Tape& tape, ModelParams& params,
                        const PriorEstimate& priors,
                        const std::vector<const Document*>& batch,
                        const BatchNoise& noise,
                        const ObjectiveWeights& weights,
                        const ModeFlags& flags, LossBreakdown* breakdown,
                        TotalLossStats* stats) {
  require(!batch.empty(), "total_loss: empty batch");
  require(noise.docs.size() == batch.size(),
          "total_loss: noise does not cover the batch");

  std::vector<ag::Var> unlabeled_gen, labeled_gen;  // generative doc totals
  std::vector<ag::Var> unlabeled_recon, labeled_recon;
  std::vector<ag::Var> unlabeled_klz, labeled_klz, unlabeled_kly;
  std::vector<ag::Var> unlabeled_pred, labeled_pred;
  std::vector<ag::Var> disc_terms;
  TotalLossStats local_stats;

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Document& doc = *batch[i];
    DocTermNodes terms = build_doc_terms(tape, params, priors, doc,
                                         noise.docs[i], weights, flags);
    local_stats.free_bits_active += terms.free_bits_active;
    local_stats.free_bits_total += terms.free_bits_total;
    if (terms.disc_nll) disc_terms.push_back(*terms.disc_nll);
    if (!flags.generative) continue;
    bool fully_labeled = doc.fully_labeled();
    auto& recon = fully_labeled ? labeled_recon : unlabeled_recon;
    auto& klz = fully_labeled ? labeled_klz : unlabeled_klz;
    auto& pred = fully_labeled ? labeled_pred : unlabeled_pred;
    recon.push_back(terms.recon_nll);
    klz.push_back(terms.kl_z);
    if (!fully_labeled) unlabeled_kly.push_back(terms.kl_y);
    if (terms.doc_pred_nll) pred.push_back(*terms.doc_pred_nll);
  }

  // Per-population means keep the labeled/unlabeled balance independent of
  // batch composition.
  std::vector<ag::Var> total_parts;
  LossBreakdown br;
  auto add_part = [&](std::vector<ag::Var>& terms, double weight,
                      double* slot) {
    if (terms.empty()) return;
    ag::Var mean = tape.mean_all(terms);
    *slot += tape.scalar_value(mean);
    if (weight != 0.0) total_parts.push_back(tape.scale(mean, weight));
  };
  add_part(unlabeled_recon, 1.0, &br.reconstruction);
  add_part(labeled_recon, 1.0, &br.reconstruction);
  add_part(unlabeled_klz, weights.kl_weight, &br.kl_z);
  add_part(labeled_klz, weights.kl_weight, &br.kl_z);
  add_part(unlabeled_kly, weights.kl_weight, &br.kl_y);
  add_part(unlabeled_pred, weights.predictor_weight, &br.doc_prediction);
  add_part(labeled_pred, weights.predictor_weight, &br.doc_prediction);
  add_part(disc_terms, weights.alpha, &br.discriminative);

  ag::Var total =
      total_parts.empty() ? tape.scalar(0.0) : tape.add_all(total_parts);
  br.total = tape.scalar_value(total);
  if (breakdown) *breakdown = br;
  if (stats) *stats = local_stats;
  return total;
}

std::pair<double, LossBreakdown> total_loss(
    ModelParams& params, const PriorEstimate& priors,
    const std::vector<const Document*>& batch, const BatchNoise& noise,
    const ObjectiveWeights& weights, const ModeFlags& flags) {
  ag::Tape tape;
  LossBreakdown br;
  total_loss_node(tape, params, priors, batch, noise, weights, flags, &br);
  return {br.total, br};
}

}  // namespace wsvae
