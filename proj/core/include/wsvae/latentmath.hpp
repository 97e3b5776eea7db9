#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "wsvae/autodiff.hpp"

namespace wsvae {

using ag::Vec;

/// Diagonal Gaussian given by per-dimension mean and standard deviation.
struct GaussianParams {
  Vec mu;
  Vec sigma;

  GaussianParams() = default;
  GaussianParams(Vec mu_, Vec sigma_);
  Eigen::Index dim() const { return mu.size(); }
};

/// A point on the probability simplex.
struct CategoricalParams {
  Vec probs;

  CategoricalParams() = default;
  explicit CategoricalParams(Vec probs_);
  Eigen::Index dim() const { return probs.size(); }
  /// log(probs) with log(0) mapped to -inf.
  Vec log_probs() const;
};

/// Scalar schedule evaluated by step. Exponential interpolates
/// start*(end/start)^(s/decay); Linear interpolates start + (end-start)*s/decay.
/// Past decay_steps the value stays at `end`.
struct Schedule {
  enum class Kind { Exponential, Linear };
  Kind kind = Kind::Exponential;
  double start = 1.0;
  double end = 1.0;
  std::int64_t decay_steps = 1;

  static Schedule exponential(double start, double end, std::int64_t steps);
  static Schedule linear(double start, double end, std::int64_t steps);
};

/// Prior over the two latent variables: a categorical over strategies and a
/// standard Gaussian of dimension z_dim.
struct PriorEstimate {
  CategoricalParams y_prior;
  Eigen::Index z_dim = 0;
};

// -------------------------------------------------------------------------
// Sampling primitives. Noise is always injected by the caller so results are
// pure functions of their arguments.
// -------------------------------------------------------------------------

/// z = mu + sigma .* eps
Vec reparam_gaussian(const GaussianParams& params, const Vec& eps);

/// softmax((log_probs + gumbel_noise) / tau). log_probs may contain -inf.
Vec gumbel_softmax(const Vec& log_probs, double tau, const Vec& gumbel_noise);

/// KL[N(mu, sigma^2) || N(0, I)] in closed form.
double kl_gaussian_std(const GaussianParams& params);

/// KL[q || p] with the 0*log(0) = 0 convention. Throws if p has a zero where
/// q has mass.
double kl_categorical(const CategoricalParams& q, const CategoricalParams& p);

/// max(w, kl): the free-bits floor on a KL term.
double free_bits(double kl_value, double w);

/// Smoothed empirical frequency prior over K classes plus a standard Gaussian
/// marker of dimension z_dim.
PriorEstimate estimate_prior(const std::vector<int>& labeled_strategies, int k,
                             double smoothing, Eigen::Index z_dim);

/// Alternative prior: Gaussian-kernel-weighted average of per-document
/// strategy frequency vectors (bandwidth on the distance to the mean vector),
/// then smoothed to full support.
PriorEstimate estimate_prior_kernel(const std::vector<Vec>& doc_frequencies,
                                    double bandwidth, double smoothing,
                                    Eigen::Index z_dim);

double schedule_value(const Schedule& schedule, std::int64_t step);

// Noise draws from a caller-owned generator.
Vec draw_standard_normal(std::mt19937_64& gen, Eigen::Index n);
Vec draw_gumbel(std::mt19937_64& gen, Eigen::Index n);

// -------------------------------------------------------------------------
// Tape versions used inside the training objectives. sigma enters as
// log(sigma) so positivity holds by construction.
// -------------------------------------------------------------------------

ag::Var reparam_gaussian_node(ag::Tape& tape, ag::Var mu, ag::Var log_sigma,
                              const Vec& eps);
ag::Var gumbel_softmax_node(ag::Tape& tape, ag::Var log_probs, double tau,
                            const Vec& gumbel_noise);
ag::Var kl_gaussian_std_node(ag::Tape& tape, ag::Var mu, ag::Var log_sigma);
/// KL[q || p] from log q (typically a log_softmax node) and fixed log p.
ag::Var kl_categorical_node(ag::Tape& tape, ag::Var log_q, const Vec& log_p);
ag::Var free_bits_node(ag::Tape& tape, ag::Var kl, double w);

}  // namespace wsvae
