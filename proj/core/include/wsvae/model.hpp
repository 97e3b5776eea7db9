#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wsvae/autodiff.hpp"
#include "wsvae/latentmath.hpp"

namespace wsvae {

using ag::Mat;

struct ModelConfig {
  int vocab_size = 0;
  int num_strategies = 0;
  int num_doc_labels = 0;

  int token_dim = 64;
  int enc_hidden = 128;
  int infer_hidden = 64;
  int z_dim = 32;
  int strategy_dim = 16;
  int doclabel_dim = 8;
  int dec_hidden = 128;
  int pred_hidden = 64;
  int attn_dim = 64;
  int max_len = 64;

  void validate() const;
};

/// All trainable parameters, addressable by hierarchical name. The extra
/// doc-label embedding row (index T) encodes "label absent".
class ModelParams {
 public:
  ModelConfig cfg;

  ag::Tensor tok_emb, strategy_emb, doclabel_emb;
  ag::Tensor enc_wx, enc_wh, enc_b;
  ag::Tensor infy_w1, infy_b1, infy_w2, infy_b2;
  ag::Tensor infz_w1, infz_b1, infz_w2, infz_b2;
  ag::Tensor dec_wx, dec_wh, dec_b, dec_wout, dec_bout;
  ag::Tensor pred_wx, pred_wh, pred_b;
  ag::Tensor pred_proj_strategy, pred_proj_content;
  ag::Tensor pred_attn_bias, pred_attn_query;
  ag::Tensor pred_combine, pred_wout, pred_bout;

  explicit ModelParams(const ModelConfig& cfg);

  std::vector<ag::Tensor*> tensors();
  std::vector<const ag::Tensor*> tensors() const;
  ag::Tensor* find(const std::string& name);

  void init_random(std::uint64_t seed);
  void zero_grad();
  Eigen::Index param_count() const;

  // Flat views in fixed tensor order (column-major within each tensor).
  Vec flatten() const;
  Vec flatten_grad() const;
  void unflatten(const Vec& theta);
};

/// Posterior factors for one sentence: q(y|s,t) and q(z|s,y=k,t) for each k.
struct SentencePosterior {
  CategoricalParams y_probs;
  std::vector<GaussianParams> z_given_y;
};

/// Document-label distribution plus the attention weights over the 2M slots,
/// ordered [strategy_1, content_1, strategy_2, content_2, ...].
struct DocPrediction {
  CategoricalParams t_probs;
  Vec attention;
};

// -------------------------------------------------------------------------
// Graph builders (shared by the numeric surface and the training objectives).
// -------------------------------------------------------------------------

/// Embedding of the document label; index T ("absent") when t is empty.
ag::Var doc_label_embedding_node(ag::Tape& tape, ModelParams& params,
                                 std::optional<int> doc_label);

/// Final hidden state of the recurrent encoder over the token sequence,
/// truncated to cfg.max_len.
ag::Var encode_tokens_node(ag::Tape& tape, ModelParams& params,
                           const std::vector<int>& tokens);

/// Logits of q(y|s,t) from the sentence encoding and doc-label embedding.
ag::Var y_logits_node(ag::Tape& tape, ModelParams& params, ag::Var enc,
                      ag::Var label_emb);

struct ZHeadNodes {
  ag::Var mu;
  ag::Var log_sigma;
};

/// Parameters of q(z|s,y,t); y enters through its (mixed) strategy embedding.
ZHeadNodes z_params_node(ag::Tape& tape, ModelParams& params, ag::Var enc,
                         ag::Var strategy_mix, ag::Var label_emb);

/// E_strategy^T y: the strategy vector for a soft or one-hot y.
ag::Var strategy_mix_node(ag::Tape& tape, ModelParams& params, ag::Var y);

/// Teacher-forced sum of target log-probabilities. `targets` must end with
/// the end-of-sentence marker; the input sequence is <s> followed by all
/// targets but the last.
ag::Var decode_loglik_node(ag::Tape& tape, ModelParams& params,
                           ag::Var strategy_mix, ag::Var z,
                           const std::vector<int>& targets);

struct DocPredNodes {
  ag::Var log_t_probs;
  ag::Var attention;
};

DocPredNodes predict_document_node(
    ag::Tape& tape, ModelParams& params,
    const std::vector<std::pair<ag::Var, ag::Var>>& strategy_content_pairs);

/// Appends the end-of-sentence id.
std::vector<int> with_eos(const std::vector<int>& tokens);

// -------------------------------------------------------------------------
// Deterministic (sampling-free) surface.
// -------------------------------------------------------------------------

SentencePosterior encode_sentence(ModelParams& params,
                                  const std::vector<int>& tokens,
                                  std::optional<int> doc_label);

/// Log-likelihood of `targets` (must include the end marker) given latents.
double decode_sentence(ModelParams& params, const Vec& y, const Vec& z,
                       const std::vector<int>& targets);

DocPrediction predict_document(
    ModelParams& params, const std::vector<std::pair<Vec, Vec>>& latent_pairs);

/// K x K cosine similarities between strategy embeddings.
Mat strategy_similarity(const ModelParams& params);

}  // namespace wsvae
