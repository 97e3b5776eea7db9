#pragma once

#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "wsvae/corpus.hpp"
#include "wsvae/latentmath.hpp"
#include "wsvae/model.hpp"

namespace wsvae {

/// Scalar weights entering the assembled objective. kl_weight is the
/// annealing multiplier applied to both KL terms; kl_threshold is the
/// free-bits floor on the strategy KL.
struct ObjectiveWeights {
  double alpha = 5.0;
  double kl_threshold = 1.2;
  double kl_weight = 1.0;
  double predictor_weight = 0.5;
  double tau = 1.0;
};

enum class ModelMode { WsVae, SVae, SupervisedOnly };

struct ModeFlags {
  bool doc_term = true;         // include the document prediction term
  bool doc_label_input = true;  // condition the posteriors on t
  bool generative = true;       // include reconstruction and KL terms

  static ModeFlags for_mode(ModelMode mode);
};

/// Components of the minimized objective. All entries follow the
/// minimization convention;
///   total = reconstruction + predictor_weight * doc_prediction
///         + kl_weight * (kl_z + kl_y) + alpha * discriminative.
struct LossBreakdown {
  double reconstruction = 0.0;
  double kl_z = 0.0;
  double kl_y = 0.0;  // after the free-bits floor
  double doc_prediction = 0.0;
  double discriminative = 0.0;
  double total = 0.0;
};

/// Pre-drawn noise for one sentence: a Gumbel vector (dim K) and a standard
/// normal vector (dim z).
struct SentenceNoise {
  Vec gumbel;
  Vec eps;
};

struct DocNoise {
  std::vector<SentenceNoise> sentences;
};

struct BatchNoise {
  std::vector<DocNoise> docs;
};

SentenceNoise draw_sentence_noise(std::mt19937_64& gen, int num_strategies,
                                  int z_dim);
DocNoise draw_doc_noise(std::mt19937_64& gen, int num_strategies, int z_dim,
                        std::size_t num_sentences);

// -------------------------------------------------------------------------
// Graph-level builders.
// -------------------------------------------------------------------------

/// Per-sentence pieces shared by the sentence and document objectives.
struct SentenceTermNodes {
  ag::Var recon_nll;              // - log p(s | y, z)
  ag::Var kl_z;                   //   KL[q(z|.) || N(0, I)]
  ag::Var kl_y;                   //   free_bits(KL[q(y|.) || p(y)], w); 0 when labeled
  std::optional<ag::Var> disc;    // - log q(y_gold | s, t), labeled only
  ag::Var strategy_vec;           //   E^T y (sampled soft or gold one-hot)
  ag::Var content_vec;            //   reparametrized z sample
  bool free_bits_active = false;  //   raw KL_y fell below the floor
};

SentenceTermNodes build_sentence_terms(ag::Tape& tape, ModelParams& params,
                                       const PriorEstimate& priors,
                                       const std::vector<int>& tokens,
                                       std::optional<int> y_gold,
                                       std::optional<int> doc_label,
                                       const SentenceNoise& noise,
                                       const ObjectiveWeights& weights,
                                       bool want_disc);

/// Whole-document pieces. Sentences with labels follow the labeled path,
/// the rest the sampled path; the document prediction term consumes every
/// sentence's latent pair.
struct DocTermNodes {
  ag::Var recon_nll;
  ag::Var kl_z;
  ag::Var kl_y;
  std::optional<ag::Var> doc_pred_nll;  // - log p(t | y, z)
  std::optional<ag::Var> disc_nll;      // summed over labeled sentences
  int free_bits_active = 0;
  int free_bits_total = 0;
};

DocTermNodes build_doc_terms(ag::Tape& tape, ModelParams& params,
                             const PriorEstimate& priors, const Document& doc,
                             const DocNoise& noise,
                             const ObjectiveWeights& weights,
                             const ModeFlags& flags);

// -------------------------------------------------------------------------
// Bounds and losses.
// -------------------------------------------------------------------------

/// Single-sample realization of the unlabeled-sentence evidence lower bound.
/// Returns the bound (maximization convention) and its components.
std::pair<double, LossBreakdown> sentence_elbo_unlabeled(
    ModelParams& params, const PriorEstimate& priors, const Sentence& s,
    std::optional<int> doc_label, const SentenceNoise& noise,
    const ObjectiveWeights& weights);

/// Labeled-sentence bound (additive constant dropped).
std::pair<double, LossBreakdown> sentence_elbo_labeled(
    ModelParams& params, const PriorEstimate& priors, const Sentence& s,
    int y_gold, std::optional<int> doc_label, const SentenceNoise& noise,
    const ObjectiveWeights& weights);

/// -log q(y_gold | s, t).
double discriminative_loss(ModelParams& params, const Sentence& s, int y_gold,
                           std::optional<int> doc_label);

/// Document bound for a fully unlabeled document.
std::pair<double, LossBreakdown> doc_bound_unlabeled(
    ModelParams& params, const PriorEstimate& priors, const Document& doc,
    const DocNoise& noise, const ObjectiveWeights& weights);

/// Document bound for a fully labeled document; y_gold_seq must match the
/// sentence count.
std::pair<double, LossBreakdown> doc_bound_labeled(
    ModelParams& params, const PriorEstimate& priors, const Document& doc,
    const std::vector<int>& y_gold_seq, const DocNoise& noise,
    const ObjectiveWeights& weights);

struct TotalLossStats {
  int free_bits_active = 0;
  int free_bits_total = 0;
};

/// Builds the full training objective for a batch on the given tape and
/// returns the scalar node; breakdown receives the numeric components.
ag::Var total_loss_node(ag::Tape& tape, ModelParams& params,
                        const PriorEstimate& priors,
                        const std::vector<const Document*>& batch,
                        const BatchNoise& noise,
                        const ObjectiveWeights& weights,
                        const ModeFlags& flags, LossBreakdown* breakdown,
                        TotalLossStats* stats = nullptr);

/// Numeric wrapper over total_loss_node.
std::pair<double, LossBreakdown> total_loss(
    ModelParams& params, const PriorEstimate& priors,
    const std::vector<const Document*>& batch, const BatchNoise& noise,
    const ObjectiveWeights& weights, const ModeFlags& flags = ModeFlags{});

}  // namespace wsvae
