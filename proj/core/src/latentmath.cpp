#include "wsvae/latentmath.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wsvae {

namespace {

constexpr double kSimplexTol = 1e-6;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

GaussianParams::GaussianParams(Vec mu_, Vec sigma_)
    : mu(std::move(mu_)), sigma(std::move(sigma_)) {
  require(mu.size() == sigma.size(), "GaussianParams: mu/sigma length mismatch");
  require((sigma.array() > 0.0).all(), "GaussianParams: sigma must be positive");
}

CategoricalParams::CategoricalParams(Vec probs_) : probs(std::move(probs_)) {
  require(probs.size() >= 1, "CategoricalParams: empty");
  require((probs.array() >= 0.0).all(), "CategoricalParams: negative entry");
  require(std::abs(probs.sum() - 1.0) <= kSimplexTol,
          "CategoricalParams: probabilities must sum to 1");
}

Vec CategoricalParams::log_probs() const {
  Vec lp(probs.size());
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    lp[i] = probs[i] > 0.0 ? std::log(probs[i])
                           : -std::numeric_limits<double>::infinity();
  }
  return lp;
}

Schedule Schedule::exponential(double start, double end, std::int64_t steps) {
  require(start > 0.0 && end > 0.0 && end <= start && steps > 0,
          "Schedule::exponential: need 0 < end <= start and steps > 0");
  return Schedule{Kind::Exponential, start, end, steps};
}

Schedule Schedule::linear(double start, double end, std::int64_t steps) {
  require(steps > 0, "Schedule::linear: steps > 0");
  return Schedule{Kind::Linear, start, end, steps};
}

Vec reparam_gaussian(const GaussianParams& params, const Vec& eps) {
  require(eps.size() == params.dim(), "reparam_gaussian: eps dimension mismatch");
  return params.mu + params.sigma.cwiseProduct(eps);
}

Vec gumbel_softmax(const Vec& log_probs, double tau, const Vec& gumbel_noise) {
  require(tau > 0.0, "gumbel_softmax: tau must be positive");
  require(log_probs.size() == gumbel_noise.size(),
          "gumbel_softmax: noise dimension mismatch");
  Vec s = (log_probs + gumbel_noise) / tau;
  double m = s.maxCoeff();
  require(std::isfinite(m), "gumbel_softmax: all categories have zero mass");
  Vec e(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) e[i] = std::exp(s[i] - m);
  return e / e.sum();
}

double kl_gaussian_std(const GaussianParams& params) {
  const auto mu = params.mu.array();
  const auto sg = params.sigma.array();
  return 0.5 * (mu.square() + sg.square() - 1.0 - 2.0 * sg.log()).sum();
}

double kl_categorical(const CategoricalParams& q, const CategoricalParams& p) {
  require(q.dim() == p.dim(), "kl_categorical: dimension mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q.dim(); ++i) {
    if (q.probs[i] == 0.0) continue;
    if (p.probs[i] == 0.0)
      throw std::domain_error("kl_categorical: infinite divergence (p_k = 0, q_k > 0)");
    kl += q.probs[i] * std::log(q.probs[i] / p.probs[i]);
  }
  return kl;
}

double free_bits(double kl_value, double w) { return std::max(w, kl_value); }

PriorEstimate estimate_prior(const std::vector<int>& labeled_strategies, int k,
                             double smoothing, Eigen::Index z_dim) {
  require(k >= 2, "estimate_prior: K must be >= 2");
  require(smoothing > 0.0, "estimate_prior: smoothing must be positive");
  Vec counts = Vec::Zero(k);
  for (int y : labeled_strategies) {
    require(y >= 0 && y < k, "estimate_prior: label out of range");
    counts[y] += 1.0;
  }
  double n = static_cast<double>(labeled_strategies.size());
  Vec probs = (counts.array() + smoothing) / (n + k * smoothing);
  return PriorEstimate{CategoricalParams(probs), z_dim};
}

PriorEstimate estimate_prior_kernel(const std::vector<Vec>& doc_frequencies,
                                    double bandwidth, double smoothing,
                                    Eigen::Index z_dim) {
  require(!doc_frequencies.empty(), "estimate_prior_kernel: no documents");
  require(bandwidth > 0.0 && smoothing > 0.0,
          "estimate_prior_kernel: bandwidth and smoothing must be positive");
  Eigen::Index k = doc_frequencies.front().size();
  Vec mean = Vec::Zero(k);
  for (const Vec& f : doc_frequencies) {
    require(f.size() == k, "estimate_prior_kernel: inconsistent dimensions");
    mean += f;
  }
  mean /= static_cast<double>(doc_frequencies.size());

  Vec acc = Vec::Zero(k);
  double wsum = 0.0;
  for (const Vec& f : doc_frequencies) {
    double d2 = (f - mean).squaredNorm();
    double w = std::exp(-d2 / (2.0 * bandwidth * bandwidth));
    acc += w * f;
    wsum += w;
  }
  Vec probs = (acc / wsum).array() + smoothing;
  probs /= probs.sum();
  return PriorEstimate{CategoricalParams(probs), z_dim};
}

double schedule_value(const Schedule& schedule, std::int64_t step) {
  require(step >= 0, "schedule_value: step must be >= 0");
  double frac = static_cast<double>(std::min(step, schedule.decay_steps)) /
                static_cast<double>(schedule.decay_steps);
  switch (schedule.kind) {
    case Schedule::Kind::Exponential:
      return schedule.start * std::pow(schedule.end / schedule.start, frac);
    case Schedule::Kind::Linear:
      return schedule.start + (schedule.end - schedule.start) * frac;
  }
  return schedule.end;
}

Vec draw_standard_normal(std::mt19937_64& gen, Eigen::Index n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

Vec draw_gumbel(std::mt19937_64& gen, Eigen::Index n) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double u = dist(gen);
    u = std::max(u, 1e-300);          // keep log(u) finite
    u = std::min(u, 1.0 - 1e-16);
    v[i] = -std::log(-std::log(u));
  }
  return v;
}

ag::Var reparam_gaussian_node(ag::Tape& tape, ag::Var mu, ag::Var log_sigma,
                              const Vec& eps) {
  require(tape.value(mu).size() == eps.size() &&
              tape.value(log_sigma).size() == eps.size(),
          "reparam_gaussian_node: dimension mismatch");
  return tape.add(mu, tape.cmul_const(tape.exp(log_sigma), eps));
}

ag::Var gumbel_softmax_node(ag::Tape& tape, ag::Var log_probs, double tau,
                            const Vec& gumbel_noise) {
  require(tau > 0.0, "gumbel_softmax_node: tau must be positive");
  return tape.softmax(
      tape.scale(tape.add_const(log_probs, gumbel_noise), 1.0 / tau));
}

ag::Var kl_gaussian_std_node(ag::Tape& tape, ag::Var mu, ag::Var log_sigma) {
  Eigen::Index d = tape.value(mu).size();
  if (d == 0) return tape.scalar(0.0);
  ag::Var mu2 = tape.cmul(mu, mu);
  ag::Var sig2 = tape.exp(tape.scale(log_sigma, 2.0));
  ag::Var inner = tape.add_const(
      tape.add(tape.add(mu2, sig2), tape.scale(log_sigma, -2.0)),
      Vec::Constant(d, -1.0));
  return tape.scale(tape.sum(inner), 0.5);
}

ag::Var kl_categorical_node(ag::Tape& tape, ag::Var log_q, const Vec& log_p) {
  require(tape.value(log_q).size() == log_p.size(),
          "kl_categorical_node: dimension mismatch");
  require(log_p.allFinite(), "kl_categorical_node: prior must have full support");
  return tape.dot(tape.exp(log_q), tape.add_const(log_q, -log_p));
}

ag::Var free_bits_node(ag::Tape& tape, ag::Var kl, double w) {
  return tape.clamp_min(kl, w);
}

}  // namespace wsvae
