#include <doctest.h>

#include <cmath>
#include <random>

#include "wsvae/latentmath.hpp"
#include "wsvae/oracle.hpp"

using namespace wsvae;
using ag::Vec;

namespace {

Vec random_simplex(std::mt19937_64& gen, int k) {
  std::uniform_real_distribution<double> dist(0.05, 1.0);
  Vec v(k);
  for (int i = 0; i < k; ++i) v[i] = dist(gen);
  return v / v.sum();
}

}  // namespace

TEST_CASE("reparam_gaussian identities") {
  GaussianParams p((Vec(2) << 0.5, -1.0).finished(),
                   (Vec(2) << 1.5, 0.2).finished());
  Vec zero = Vec::Zero(2);
  Vec z = reparam_gaussian(p, zero);
  CHECK(z[0] == doctest::Approx(0.5));
  CHECK(z[1] == doctest::Approx(-1.0));

  GaussianParams std_p(Vec::Zero(3), Vec::Ones(3));
  Vec eps = (Vec(3) << 0.3, -2.0, 1.1).finished();
  Vec z2 = reparam_gaussian(std_p, eps);
  for (int i = 0; i < 3; ++i) CHECK(z2[i] == doctest::Approx(eps[i]));

  CHECK_THROWS(reparam_gaussian(p, Vec::Zero(3)));
}

TEST_CASE("reparam_gaussian matches its target moments (Monte Carlo)") {
  GaussianParams p(Vec::Constant(1, 1.0), Vec::Constant(1, 2.0));
  std::mt19937_64 gen(123);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = reparam_gaussian(p, draw_standard_normal(gen, 1))[0];
    sum += z;
    sum_sq += z * z;
  }
  double mean = sum / n;
  double stddev = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(mean - 1.0) < 0.02);
  CHECK(std::abs(stddev - 2.0) < 0.03);
}

TEST_CASE("gumbel_softmax outputs lie on the simplex") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    Vec lp = (random_simplex(gen, 4)).array().log();
    Vec noise = draw_gumbel(gen, 4);
    Vec y = gumbel_softmax(lp, 0.7, noise);
    CHECK(std::abs(y.sum() - 1.0) <= 1e-6);
    for (int i = 0; i < 4; ++i) {
      CHECK(y[i] > 0.0);
      CHECK(y[i] < 1.0);
    }
  }
  CHECK_THROWS(gumbel_softmax(Vec::Zero(3), 0.0, Vec::Zero(3)));
  CHECK_THROWS(gumbel_softmax(Vec::Zero(3), -1.0, Vec::Zero(3)));
}

TEST_CASE("gumbel_softmax degenerate categorical stays degenerate") {
  CategoricalParams pi((Vec(3) << 1.0, 0.0, 0.0).finished());
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 50; ++trial) {
    Vec y = gumbel_softmax(pi.log_probs(), 0.5, draw_gumbel(gen, 3));
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 0.0);
  }
}

TEST_CASE("gumbel_softmax argmax frequencies follow the Gumbel-max property") {
  Vec pi = (Vec(3) << 0.2, 0.3, 0.5).finished();
  Vec lp = pi.array().log();
  std::mt19937_64 gen(42);
  const int n = 100000;
  Eigen::Vector3d hits = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    Vec y = gumbel_softmax(lp, 0.1, draw_gumbel(gen, 3));
    int arg;
    y.maxCoeff(&arg);
    hits[arg] += 1.0;
  }
  hits /= n;
  for (int i = 0; i < 3; ++i) CHECK(std::abs(hits[i] - pi[i]) < 0.02);
}

TEST_CASE("tighter temperature sharpens the relaxation") {
  Vec pi = (Vec(4) << 0.1, 0.2, 0.3, 0.4).finished();
  Vec lp = pi.array().log();
  double prev = 0.0;
  bool first = true;
  for (double tau : {1.0, 0.5, 0.1}) {
    std::mt19937_64 gen(77);  // same noise stream per temperature
    double mean_max = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
      mean_max += gumbel_softmax(lp, tau, draw_gumbel(gen, 4)).maxCoeff();
    mean_max /= n;
    if (!first) CHECK(mean_max >= prev);
    prev = mean_max;
    first = false;
  }
}

TEST_CASE("kl_gaussian_std closed form") {
  CHECK(kl_gaussian_std(GaussianParams(Vec::Zero(4), Vec::Ones(4))) ==
        doctest::Approx(0.0));
  CHECK(kl_gaussian_std(GaussianParams(Vec::Constant(1, 2.0), Vec::Ones(1))) ==
        doctest::Approx(2.0));

  // Nonnegative on a grid, zero only at the standard normal.
  for (double mu : {-1.0, -0.25, 0.0, 0.5, 2.0}) {
    for (double sigma : {0.25, 0.5, 1.0, 1.7, 3.0}) {
      double kl = kl_gaussian_std(
          GaussianParams(Vec::Constant(1, mu), Vec::Constant(1, sigma)));
      CHECK(kl >= -1e-12);
      if (mu == 0.0 && sigma == 1.0) {
        CHECK(std::abs(kl) < 1e-9);
      } else {
        CHECK(kl > 1e-9);
      }
    }
  }
}

TEST_CASE("kl_gaussian_std matches quadrature") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> mu_dist(-2.0, 2.0);
  std::uniform_real_distribution<double> sig_dist(0.3, 2.5);
  for (int trial = 0; trial < 20; ++trial) {
    int d = 1 + static_cast<int>(gen() % 3);
    Vec mu(d), sigma(d);
    for (int i = 0; i < d; ++i) {
      mu[i] = mu_dist(gen);
      sigma[i] = sig_dist(gen);
    }
    GaussianParams q(mu, sigma);
    GaussianParams std_p(Vec::Zero(d), Vec::Ones(d));
    CHECK(kl_gaussian_std(q) ==
          doctest::Approx(oracle::numeric_kl(q, std_p)).epsilon(1e-6));
  }
}

TEST_CASE("kl_categorical closed form and edge cases") {
  CategoricalParams q((Vec(3) << 0.2, 0.5, 0.3).finished());
  CHECK(kl_categorical(q, q) == doctest::Approx(0.0));

  CategoricalParams point((Vec(2) << 1.0, 0.0).finished());
  CategoricalParams uniform((Vec(2) << 0.5, 0.5).finished());
  CHECK(kl_categorical(point, uniform) == doctest::Approx(std::log(2.0)));

  CHECK_THROWS(kl_categorical(uniform, point));  // p has a zero where q > 0
  CHECK_NOTHROW(kl_categorical(point, point));   // 0 log 0 convention

  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    CategoricalParams a(random_simplex(gen, 5));
    CategoricalParams b(random_simplex(gen, 5));
    double direct = 0.0;
    for (int i = 0; i < 5; ++i)
      direct += a.probs[i] * std::log(a.probs[i] / b.probs[i]);
    CHECK(kl_categorical(a, b) == doctest::Approx(direct).epsilon(1e-9));
    CHECK(kl_categorical(a, b) >= -1e-12);
  }
}

TEST_CASE("free_bits floor") {
  CHECK(free_bits(0.5, 1.2) == doctest::Approx(1.2));
  CHECK(free_bits(2.0, 1.2) == doctest::Approx(2.0));
  for (double kl : {0.0, 0.3, 1.0, 5.0}) CHECK(free_bits(kl, 0.0) == kl);
}

TEST_CASE("estimate_prior smoothed frequencies") {
  std::vector<int> labels;
  labels.insert(labels.end(), 10, 0);
  labels.insert(labels.end(), 30, 1);
  labels.insert(labels.end(), 60, 2);
  PriorEstimate prior = estimate_prior(labels, 3, 1.0, 8);
  CHECK(prior.y_prior.probs[0] == doctest::Approx(11.0 / 103.0).epsilon(1e-12));
  CHECK(prior.y_prior.probs[1] == doctest::Approx(31.0 / 103.0).epsilon(1e-12));
  CHECK(prior.y_prior.probs[2] == doctest::Approx(61.0 / 103.0).epsilon(1e-12));
  CHECK(prior.z_dim == 8);

  PriorEstimate uniform = estimate_prior({}, 4, 1.0, 2);
  for (int i = 0; i < 4; ++i)
    CHECK(uniform.y_prior.probs[i] == doctest::Approx(0.25));

  PriorEstimate skewed = estimate_prior(std::vector<int>(10, 0), 2, 0.5, 2);
  CHECK(skewed.y_prior.probs[0] == doctest::Approx(10.5 / 11.0).epsilon(1e-12));
  CHECK(skewed.y_prior.probs[1] == doctest::Approx(0.5 / 11.0).epsilon(1e-12));

  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> ls;
    int n = static_cast<int>(gen() % 50);
    for (int i = 0; i < n; ++i) ls.push_back(static_cast<int>(gen() % 4));
    PriorEstimate p = estimate_prior(ls, 4, 0.7, 3);
    CHECK((p.y_prior.probs.array() > 0.0).all());
    CHECK(std::abs(p.y_prior.probs.sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("estimate_prior_kernel stays on the simplex with full support") {
  std::vector<Vec> freqs = {(Vec(3) << 1.0, 0.0, 0.0).finished(),
                            (Vec(3) << 0.5, 0.5, 0.0).finished(),
                            (Vec(3) << 0.2, 0.3, 0.5).finished()};
  PriorEstimate p = estimate_prior_kernel(freqs, 0.5, 0.05, 4);
  CHECK(std::abs(p.y_prior.probs.sum() - 1.0) < 1e-9);
  CHECK((p.y_prior.probs.array() > 0.0).all());
}

TEST_CASE("schedule_value endpoints and midpoint") {
  Schedule tau = Schedule::exponential(1.0, 0.3, 1000);
  CHECK(schedule_value(tau, 0) == doctest::Approx(1.0));
  CHECK(schedule_value(tau, 1000) == doctest::Approx(0.3));
  CHECK(schedule_value(tau, 5000) == doctest::Approx(0.3));
  CHECK(schedule_value(tau, 500) == doctest::Approx(std::pow(0.3, 0.5)).epsilon(1e-12));
  for (std::int64_t s = 1; s <= 1000; s += 37)
    CHECK(schedule_value(tau, s) <= schedule_value(tau, s - 1) + 1e-15);

  Schedule klw = Schedule::linear(0.01, 1.0, 200);
  CHECK(schedule_value(klw, 0) == doctest::Approx(0.01));
  CHECK(schedule_value(klw, 100) == doctest::Approx(0.505));
  CHECK(schedule_value(klw, 200) == doctest::Approx(1.0));
  CHECK(schedule_value(klw, 10000) == doctest::Approx(1.0));
}

TEST_CASE("tape versions agree with the numeric primitives and differentiate") {
  std::mt19937_64 gen(55);
  ag::Tensor raw("raw", 6, 1);
  for (int i = 0; i < 6; ++i) raw.value(i, 0) = 0.3 * (i - 2);

  // reparam + kl_gaussian through log_sigma parametrization
  Vec eps = draw_standard_normal(gen, 3);
  auto eval_gauss = [&]() {
    ag::Tape tape;
    ag::Var v = tape.param(raw);
    ag::Var mu = tape.slice(v, 0, 3);
    ag::Var log_sigma = tape.slice(v, 3, 3);
    ag::Var z = reparam_gaussian_node(tape, mu, log_sigma, eps);
    ag::Var kl = kl_gaussian_std_node(tape, mu, log_sigma);
    ag::Var loss = tape.add(tape.dot(z, z), kl);
    tape.backward(loss);
    return tape.scalar_value(loss);
  };
  raw.zero_grad();
  double value = eval_gauss();
  Vec analytic = raw.grad.col(0);
  Vec theta0 = raw.value.col(0);
  Vec fd = oracle::finite_diff_grad(
      [&](const Vec& theta) {
        raw.value.col(0) = theta;
        raw.zero_grad();
        return eval_gauss();
      },
      theta0, 1e-5);
  raw.value.col(0) = theta0;
  for (int i = 0; i < 6; ++i) {
    double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-8});
    CHECK(std::abs(analytic[i] - fd[i]) / denom < 1e-4);
  }

  // numeric value agreement
  {
    GaussianParams gp(theta0.segment(0, 3),
                      theta0.segment(3, 3).array().exp().matrix());
    ag::Tape tape;
    ag::Var v = tape.param(raw);
    ag::Var kl = kl_gaussian_std_node(tape, tape.slice(v, 0, 3), tape.slice(v, 3, 3));
    CHECK(tape.scalar_value(kl) == doctest::Approx(kl_gaussian_std(gp)).epsilon(1e-12));
    (void)value;
  }

  // gumbel softmax + categorical KL gradient
  ag::Tensor logits("logits", 4, 1);
  for (int i = 0; i < 4; ++i) logits.value(i, 0) = 0.2 * i - 0.3;
  Vec gnoise = draw_gumbel(gen, 4);
  Vec log_p = CategoricalParams((Vec(4) << 0.4, 0.3, 0.2, 0.1).finished()).log_probs();
  auto eval_cat = [&]() {
    ag::Tape tape;
    ag::Var lq = tape.log_softmax(tape.param(logits));
    ag::Var y = gumbel_softmax_node(tape, lq, 0.7, gnoise);
    ag::Var kl = kl_categorical_node(tape, lq, log_p);
    ag::Var loss = tape.add(tape.dot(y, y), free_bits_node(tape, kl, 0.05));
    tape.backward(loss);
    return tape.scalar_value(loss);
  };
  logits.zero_grad();
  eval_cat();
  Vec analytic_cat = logits.grad.col(0);
  Vec theta_cat = logits.value.col(0);
  Vec fd_cat = oracle::finite_diff_grad(
      [&](const Vec& theta) {
        logits.value.col(0) = theta;
        logits.zero_grad();
        return eval_cat();
      },
      theta_cat, 1e-5);
  logits.value.col(0) = theta_cat;
  for (int i = 0; i < 4; ++i) {
    double denom = std::max({std::abs(analytic_cat[i]), std::abs(fd_cat[i]), 1e-8});
    CHECK(std::abs(analytic_cat[i] - fd_cat[i]) / denom < 1e-4);
  }
}
