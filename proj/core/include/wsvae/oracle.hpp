#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "wsvae/corpus.hpp"
#include "wsvae/latentmath.hpp"
#include "wsvae/model.hpp"

namespace wsvae::oracle {

/// Limits under which exhaustive enumeration of the discrete latents is
/// exact and cheap. The content latent must be removed (z_dim = 0).
struct ToyModelSpec {
  int max_vocab = 8;
  int max_strategies = 3;
  int max_sentence_len = 3;
  int max_sentences = 2;
  int max_doc_labels = 2;

  void check_model(const ModelConfig& cfg) const;
  void check_sentence(const std::vector<int>& tokens) const;
  void check_document(const Document& doc) const;
};

/// log p(s) = log sum_k p(y=k) p(s|y=k) by exhaustive summation.
double exact_sentence_log_marginal(ModelParams& params,
                                   const PriorEstimate& priors,
                                   const std::vector<int>& tokens,
                                   const ToyModelSpec& spec = {});

/// log p(d, t) = log sum over all K^M strategy assignments of
/// p(t|y) prod_j p(y_j) p(s_j|y_j).
double exact_doc_log_marginal(ModelParams& params, const PriorEstimate& priors,
                              const Document& doc,
                              const ToyModelSpec& spec = {});

/// Exact-expectation unlabeled-sentence bound: the y expectation is
/// enumerated instead of sampled, with an explicit posterior q.
double exact_sentence_elbo(ModelParams& params, const PriorEstimate& priors,
                           const std::vector<int>& tokens,
                           const CategoricalParams& q, double kl_threshold,
                           const ToyModelSpec& spec = {});

/// Convenience overload using the model's own posterior q(y|s,t).
double exact_sentence_elbo(ModelParams& params, const PriorEstimate& priors,
                           const std::vector<int>& tokens,
                           std::optional<int> doc_label, double kl_threshold,
                           const ToyModelSpec& spec = {});

/// Exact-expectation unlabeled-document bound under the mean-field posterior
/// q(y_j|s_j,t).
double exact_doc_bound(ModelParams& params, const PriorEstimate& priors,
                       const Document& doc, double kl_threshold,
                       const ToyModelSpec& spec = {});

/// Same bound with explicit per-sentence posteriors.
double exact_doc_bound(ModelParams& params, const PriorEstimate& priors,
                       const Document& doc,
                       const std::vector<CategoricalParams>& q,
                       double kl_threshold, const ToyModelSpec& spec = {});

/// Exact-expectation labeled-document bound (gold strategies given).
double exact_doc_bound_labeled(ModelParams& params,
                               const PriorEstimate& priors,
                               const Document& doc,
                               const std::vector<int>& y_gold_seq,
                               const ToyModelSpec& spec = {});

/// KL divergence by per-dimension adaptive Simpson quadrature (diagonal
/// Gaussians factorize). Throws if the quadrature fails to converge.
double numeric_kl(const GaussianParams& q, const GaussianParams& p);

/// KL divergence by direct summation.
double numeric_kl(const CategoricalParams& q, const CategoricalParams& p);

/// Central finite differences (f(x+h) - f(x-h)) / 2h per coordinate.
Vec finite_diff_grad(const std::function<double(const Vec&)>& loss_fn,
                     const Vec& theta0, double h = 1e-4);

}  // namespace wsvae::oracle
