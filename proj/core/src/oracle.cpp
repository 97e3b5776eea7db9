#include "wsvae/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wsvae::oracle {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double logsumexp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

Vec onehot(int k, Eigen::Index dim) {
  Vec v = Vec::Zero(dim);
  v[k] = 1.0;
  return v;
}

/// All K^M assignments, odometer order.
std::vector<std::vector<int>> enumerate_assignments(int k, std::size_t m) {
  std::vector<std::vector<int>> all;
  std::vector<int> cur(m, 0);
  while (true) {
    all.push_back(cur);
    std::size_t pos = 0;
    while (pos < m) {
      if (++cur[pos] < k) break;
      cur[pos] = 0;
      ++pos;
    }
    if (pos == m) break;
  }
  return all;
}

double normal_log_pdf(double x, double mu, double sigma) {
  static const double kLogSqrt2Pi = 0.5 * std::log(2.0 * M_PI);
  double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - kLogSqrt2Pi;
}

struct Simpson {
  std::function<double(double)> f;
  int evals = 0;
  static constexpr int kMaxEvals = 2'000'000;

  double segment(double a, double b, double fa, double fb, double fm,
                 double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = eval(lm);
    double frm = eval(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0)
      throw std::runtime_error("numeric_kl: quadrature did not converge");
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return segment(a, m, fa, fm, flm, left, tol * 0.5, depth - 1) +
           segment(m, b, fm, fb, frm, right, tol * 0.5, depth - 1);
  }

  double eval(double x) {
    if (++evals > kMaxEvals)
      throw std::runtime_error("numeric_kl: quadrature did not converge");
    return f(x);
  }

  double integrate(double a, double b, double tol) {
    double fa = eval(a);
    double fb = eval(b);
    double m = 0.5 * (a + b);
    double fm = eval(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return segment(a, b, fa, fb, fm, whole, tol, 48);
  }
};

}  // namespace

void ToyModelSpec::check_model(const ModelConfig& cfg) const {
  require(cfg.z_dim == 0, "toy model: z_dim must be 0 for exact enumeration");
  require(cfg.vocab_size <= max_vocab, "toy model: vocabulary too large");
  require(cfg.num_strategies <= max_strategies, "toy model: too many strategies");
  require(cfg.num_doc_labels <= max_doc_labels, "toy model: too many doc labels");
}

void ToyModelSpec::check_sentence(const std::vector<int>& tokens) const {
  require(!tokens.empty() &&
              tokens.size() <= static_cast<std::size_t>(max_sentence_len),
          "toy model: sentence length out of range");
}

void ToyModelSpec::check_document(const Document& doc) const {
  require(!doc.sentences.empty() &&
              doc.sentences.size() <= static_cast<std::size_t>(max_sentences),
          "toy model: document size out of range");
  for (const Sentence& s : doc.sentences) check_sentence(s.tokens);
}

double exact_sentence_log_marginal(ModelParams& params,
                                   const PriorEstimate& priors,
                                   const std::vector<int>& tokens,
                                   const ToyModelSpec& spec) {
  spec.check_model(params.cfg);
  spec.check_sentence(tokens);
  const Vec log_prior = priors.y_prior.log_probs();
  const Vec z0 = Vec::Zero(0);
  std::vector<double> terms;
  for (int k = 0; k < params.cfg.num_strategies; ++k) {
    double ll = decode_sentence(params, onehot(k, params.cfg.num_strategies),
                                z0, with_eos(tokens));
    terms.push_back(log_prior[k] + ll);
  }
  return logsumexp(terms);
}

double exact_doc_log_marginal(ModelParams& params, const PriorEstimate& priors,
                              const Document& doc, const ToyModelSpec& spec) {
  spec.check_model(params.cfg);
  spec.check_document(doc);
  const int k = params.cfg.num_strategies;
  const std::size_t m = doc.sentences.size();
  const Vec log_prior = priors.y_prior.log_probs();
  const Vec z0 = Vec::Zero(0);

  // Per-sentence decoder likelihoods, computed once per class.
  std::vector<std::vector<double>> loglik(m, std::vector<double>(k));
  for (std::size_t j = 0; j < m; ++j) {
    for (int c = 0; c < k; ++c) {
      loglik[j][c] = decode_sentence(params, onehot(c, k), z0,
                                     with_eos(doc.sentences[j].tokens));
    }
  }

  std::vector<double> terms;
  for (const auto& assign : enumerate_assignments(k, m)) {
    double lp = 0.0;
    std::vector<std::pair<Vec, Vec>> latents;
    for (std::size_t j = 0; j < m; ++j) {
      lp += log_prior[assign[j]] + loglik[j][assign[j]];
      latents.emplace_back(onehot(assign[j], k), z0);
    }
    DocPrediction pred = predict_document(params, latents);
    lp += std::log(pred.t_probs.probs[doc.doc_label]);
    terms.push_back(lp);
  }
  return logsumexp(terms);
}

double exact_sentence_elbo(ModelParams& params, const PriorEstimate& priors,
                           const std::vector<int>& tokens,
                           const CategoricalParams& q, double kl_threshold,
                           const ToyModelSpec& spec) {
  spec.check_model(params.cfg);
  spec.check_sentence(tokens);
  require(q.dim() == params.cfg.num_strategies,
          "exact_sentence_elbo: posterior dimension mismatch");
  const Vec z0 = Vec::Zero(0);
  double expected_loglik = 0.0;
  for (int k = 0; k < params.cfg.num_strategies; ++k) {
    if (q.probs[k] == 0.0) continue;
    expected_loglik +=
        q.probs[k] * decode_sentence(params, onehot(k, params.cfg.num_strategies),
                                     z0, with_eos(tokens));
  }
  double kl = kl_categorical(q, priors.y_prior);
  return expected_loglik - free_bits(kl, kl_threshold);
}

double exact_sentence_elbo(ModelParams& params, const PriorEstimate& priors,
                           const std::vector<int>& tokens,
                           std::optional<int> doc_label, double kl_threshold,
                           const ToyModelSpec& spec) {
  SentencePosterior post = encode_sentence(params, tokens, doc_label);
  return exact_sentence_elbo(params, priors, tokens, post.y_probs,
                             kl_threshold, spec);
}

double exact_doc_bound(ModelParams& params, const PriorEstimate& priors,
                       const Document& doc, double kl_threshold,
                       const ToyModelSpec& spec) {
  std::vector<CategoricalParams> q;
  for (const Sentence& s : doc.sentences)
    q.push_back(encode_sentence(params, s.tokens, doc.doc_label).y_probs);
  return exact_doc_bound(params, priors, doc, q, kl_threshold, spec);
}

double exact_doc_bound(ModelParams& params, const PriorEstimate& priors,
                       const Document& doc,
                       const std::vector<CategoricalParams>& q,
                       double kl_threshold, const ToyModelSpec& spec) {
  spec.check_model(params.cfg);
  spec.check_document(doc);
  require(q.size() == doc.sentences.size(),
          "exact_doc_bound: posterior count mismatch");
  const int k = params.cfg.num_strategies;
  const std::size_t m = doc.sentences.size();
  const Vec z0 = Vec::Zero(0);

  std::vector<std::vector<double>> loglik(m, std::vector<double>(k));
  for (std::size_t j = 0; j < m; ++j) {
    for (int c = 0; c < k; ++c) {
      loglik[j][c] = decode_sentence(params, onehot(c, k), z0,
                                     with_eos(doc.sentences[j].tokens));
    }
  }

  double expected = 0.0;
  for (const auto& assign : enumerate_assignments(k, m)) {
    double weight = 1.0;
    double inner = 0.0;
    std::vector<std::pair<Vec, Vec>> latents;
    for (std::size_t j = 0; j < m; ++j) {
      weight *= q[j].probs[assign[j]];
      inner += loglik[j][assign[j]];
      latents.emplace_back(onehot(assign[j], k), z0);
    }
    if (weight == 0.0) continue;
    DocPrediction pred = predict_document(params, latents);
    inner += std::log(pred.t_probs.probs[doc.doc_label]);
    expected += weight * inner;
  }

  double kl_total = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    kl_total += free_bits(kl_categorical(q[j], priors.y_prior), kl_threshold);
  return expected - kl_total;
}

double exact_doc_bound_labeled(ModelParams& params, const PriorEstimate& priors,
                               const Document& doc,
                               const std::vector<int>& y_gold_seq,
                               const ToyModelSpec& spec) {
  spec.check_model(params.cfg);
  spec.check_document(doc);
  require(y_gold_seq.size() == doc.sentences.size(),
          "exact_doc_bound_labeled: label count mismatch");
  const int k = params.cfg.num_strategies;
  const Vec z0 = Vec::Zero(0);
  double total = 0.0;
  std::vector<std::pair<Vec, Vec>> latents;
  for (std::size_t j = 0; j < doc.sentences.size(); ++j) {
    total += decode_sentence(params, onehot(y_gold_seq[j], k), z0,
                             with_eos(doc.sentences[j].tokens));
    latents.emplace_back(onehot(y_gold_seq[j], k), z0);
  }
  DocPrediction pred = predict_document(params, latents);
  total += std::log(pred.t_probs.probs[doc.doc_label]);
  return total;
}

double numeric_kl(const GaussianParams& q, const GaussianParams& p) {
  require(q.dim() == p.dim(), "numeric_kl: dimension mismatch");
  require(q.dim() <= 4, "numeric_kl: gaussian quadrature limited to 4 dims");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q.dim(); ++i) {
    double mu_q = q.mu[i], s_q = q.sigma[i];
    double mu_p = p.mu[i], s_p = p.sigma[i];
    Simpson quad;
    quad.f = [=](double x) {
      double lq = normal_log_pdf(x, mu_q, s_q);
      double lp = normal_log_pdf(x, mu_p, s_p);
      return std::exp(lq) * (lq - lp);
    };
    kl += quad.integrate(mu_q - 12.0 * s_q, mu_q + 12.0 * s_q, 1e-10);
  }
  return kl;
}

double numeric_kl(const CategoricalParams& q, const CategoricalParams& p) {
  require(q.dim() == p.dim(), "numeric_kl: dimension mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q.dim(); ++i) {
    if (q.probs[i] == 0.0) continue;
    require(p.probs[i] > 0.0, "numeric_kl: infinite divergence");
    kl += q.probs[i] * (std::log(q.probs[i]) - std::log(p.probs[i]));
  }
  return kl;
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& loss_fn,
                     const Vec& theta0, double h) {
  require(h > 0.0, "finite_diff_grad: h must be positive");
  Vec grad(theta0.size());
  Vec theta = theta0;
  for (Eigen::Index i = 0; i < theta0.size(); ++i) {
    theta[i] = theta0[i] + h;
    double fp = loss_fn(theta);
    theta[i] = theta0[i] - h;
    double fm = loss_fn(theta);
    theta[i] = theta0[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("finite_diff_grad: non-finite loss value");
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace wsvae::oracle
