#include "wsvae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace wsvae {

using nlohmann::json;

namespace {

constexpr char kCheckpointMagic[8] = {'W', 'S', 'V', 'A', 'E', 'C', 'K', '1'};

void check_finite(double v, const char* component, std::int64_t step) {
  if (!std::isfinite(v)) {
    throw TrainError("non-finite " + std::string(component) + " at step " +
                     std::to_string(step) + "; aborting");
  }
}

void check_breakdown(const LossBreakdown& br, std::int64_t step) {
  check_finite(br.reconstruction, "reconstruction", step);
  check_finite(br.kl_z, "kl_z", step);
  check_finite(br.kl_y, "kl_y", step);
  check_finite(br.doc_prediction, "doc_prediction", step);
  check_finite(br.discriminative, "discriminative", step);
  check_finite(br.total, "total", step);
}

struct AdamW {
  double lr, beta1, beta2, eps, weight_decay, clip;
  std::vector<Mat>* m;
  std::vector<Mat>* v;
  std::int64_t* t;

  void step(std::vector<ag::Tensor*> tensors) {
    double norm_sq = 0.0;
    for (ag::Tensor* p : tensors) norm_sq += p->grad.squaredNorm();
    double scale = 1.0;
    double norm = std::sqrt(norm_sq);
    if (clip > 0.0 && norm > clip) scale = clip / norm;

    ++(*t);
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(*t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(*t));
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      ag::Tensor* p = tensors[i];
      Mat g = p->grad * scale;
      (*m)[i] = beta1 * (*m)[i] + (1.0 - beta1) * g;
      (*v)[i] = beta2 * (*v)[i] + (1.0 - beta2) * g.cwiseProduct(g);
      Mat mhat = (*m)[i] / bc1;
      Mat vhat = (*v)[i] / bc2;
      p->value -=
          lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix() +
          (lr * weight_decay) * p->value;
    }
  }
};

std::vector<int> gold_labels(const Corpus& corpus) {
  std::vector<int> golds;
  for (const Document& d : corpus.documents) {
    for (const Sentence& s : d.sentences) {
      std::optional<int> y = s.gold_strategy ? s.gold_strategy : s.strategy;
      if (!y) throw TrainError("dev corpus has a sentence without gold label");
      golds.push_back(*y);
    }
  }
  return golds;
}

double dev_macro_f1(ModelParams& params, const Corpus& dev,
                    const std::vector<int>& golds, bool use_doc_label) {
  std::vector<int> preds = predict_strategies(params, dev, use_doc_label);
  return macro_f1(preds, golds, dev.num_strategies).first;
}

// ---- binary checkpoint IO -------------------------------------------------

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void put_mat(std::ostream& out, const Mat& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw TrainError("checkpoint truncated");
  return v;
}
std::int64_t get_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw TrainError("checkpoint truncated");
  return v;
}
double get_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw TrainError("checkpoint truncated");
  return v;
}
std::string get_string(std::istream& in) {
  std::uint64_t n = get_u64(in);
  if (n > (1ull << 32)) throw TrainError("checkpoint corrupt: bad string size");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw TrainError("checkpoint truncated");
  return s;
}
Mat get_mat(std::istream& in) {
  std::uint64_t rows = get_u64(in);
  std::uint64_t cols = get_u64(in);
  if (rows > (1ull << 24) || cols > (1ull << 24))
    throw TrainError("checkpoint corrupt: bad tensor shape");
  Mat m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw TrainError("checkpoint truncated");
  return m;
}

void put_params(std::ostream& out, const ModelParams& params) {
  auto tensors = params.tensors();
  put_u64(out, tensors.size());
  for (const ag::Tensor* t : tensors) {
    put_string(out, t->name);
    put_mat(out, t->value);
  }
}

void get_params(std::istream& in, ModelParams& params) {
  std::uint64_t n = get_u64(in);
  auto tensors = params.tensors();
  if (n != tensors.size())
    throw TrainError("checkpoint corrupt: tensor count mismatch");
  for (ag::Tensor* t : tensors) {
    std::string name = get_string(in);
    if (name != t->name)
      throw TrainError("checkpoint corrupt: expected tensor " + t->name +
                       ", found " + name);
    Mat m = get_mat(in);
    if (m.rows() != t->rows() || m.cols() != t->cols())
      throw TrainError("checkpoint corrupt: shape mismatch for " + t->name);
    t->value = std::move(m);
  }
}

}  // namespace

ModelMode parse_mode(const std::string& name) {
  if (name == "ws" || name == "wsvae" || name == "ws-vae") return ModelMode::WsVae;
  if (name == "svae" || name == "s-vae") return ModelMode::SVae;
  if (name == "supervised") return ModelMode::SupervisedOnly;
  throw ConfigError("unknown mode: " + name + " (expected ws|svae|supervised)");
}

std::string mode_name(ModelMode mode) {
  switch (mode) {
    case ModelMode::WsVae: return "ws";
    case ModelMode::SVae: return "svae";
    case ModelMode::SupervisedOnly: return "supervised";
  }
  return "ws";
}

KeyValueConfig TrainingConfig::to_config() const {
  KeyValueConfig cfg;
  auto setd = [&](const std::string& k, double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    cfg.set(k, os.str());
  };
  setd("train.alpha", alpha);
  setd("train.kl_threshold", kl_threshold);
  setd("train.predictor_weight", predictor_weight);
  setd("train.learning_rate", learning_rate);
  setd("train.weight_decay", weight_decay);
  setd("train.grad_clip", grad_clip);
  setd("train.adam_beta1", adam_beta1);
  setd("train.adam_beta2", adam_beta2);
  setd("train.adam_eps", adam_eps);
  cfg.set("train.epochs", std::to_string(epochs));
  cfg.set("train.batch_size", std::to_string(batch_size));
  cfg.set("train.eval_every", std::to_string(eval_every));
  cfg.set("train.labeled_docs", labeled_doc_count);
  setd("train.prior_smoothing", prior_smoothing);
  cfg.set("train.seed", std::to_string(seed));
  cfg.set("train.mode", mode_name(mode));
  cfg.set("train.eval_with_doc_label", eval_with_doc_label ? "true" : "false");
  setd("train.tau_start", tau_start);
  setd("train.tau_end", tau_end);
  setd("train.tau_frac", tau_frac);
  cfg.set("train.tau_steps", std::to_string(tau_steps));
  setd("train.klw_start", klw_start);
  setd("train.klw_end", klw_end);
  setd("train.klw_frac", klw_frac);
  cfg.set("train.klw_steps", std::to_string(klw_steps));

  cfg.set("model.vocab_size", std::to_string(model.vocab_size));
  cfg.set("model.num_strategies", std::to_string(model.num_strategies));
  cfg.set("model.num_doc_labels", std::to_string(model.num_doc_labels));
  cfg.set("model.token_dim", std::to_string(model.token_dim));
  cfg.set("model.enc_hidden", std::to_string(model.enc_hidden));
  cfg.set("model.infer_hidden", std::to_string(model.infer_hidden));
  cfg.set("model.z_dim", std::to_string(model.z_dim));
  cfg.set("model.strategy_dim", std::to_string(model.strategy_dim));
  cfg.set("model.doclabel_dim", std::to_string(model.doclabel_dim));
  cfg.set("model.dec_hidden", std::to_string(model.dec_hidden));
  cfg.set("model.pred_hidden", std::to_string(model.pred_hidden));
  cfg.set("model.attn_dim", std::to_string(model.attn_dim));
  cfg.set("model.max_len", std::to_string(model.max_len));
  return cfg;
}

TrainingConfig TrainingConfig::from_config(const KeyValueConfig& cfg) {
  TrainingConfig c;
  c.alpha = cfg.get_double("train.alpha", c.alpha);
  c.kl_threshold = cfg.get_double("train.kl_threshold", c.kl_threshold);
  c.predictor_weight = cfg.get_double("train.predictor_weight", c.predictor_weight);
  c.learning_rate = cfg.get_double("train.learning_rate", c.learning_rate);
  c.weight_decay = cfg.get_double("train.weight_decay", c.weight_decay);
  c.grad_clip = cfg.get_double("train.grad_clip", c.grad_clip);
  c.adam_beta1 = cfg.get_double("train.adam_beta1", c.adam_beta1);
  c.adam_beta2 = cfg.get_double("train.adam_beta2", c.adam_beta2);
  c.adam_eps = cfg.get_double("train.adam_eps", c.adam_eps);
  c.epochs = cfg.get_int("train.epochs", c.epochs);
  c.batch_size = cfg.get_int("train.batch_size", c.batch_size);
  c.eval_every = cfg.get_int("train.eval_every", c.eval_every);
  c.labeled_doc_count = cfg.get_string("train.labeled_docs", c.labeled_doc_count);
  c.prior_smoothing = cfg.get_double("train.prior_smoothing", c.prior_smoothing);
  c.seed = cfg.get_u64("train.seed", c.seed);
  c.mode = parse_mode(cfg.get_string("train.mode", mode_name(c.mode)));
  c.eval_with_doc_label =
      cfg.get_bool("train.eval_with_doc_label", c.eval_with_doc_label);
  c.tau_start = cfg.get_double("train.tau_start", c.tau_start);
  c.tau_end = cfg.get_double("train.tau_end", c.tau_end);
  c.tau_frac = cfg.get_double("train.tau_frac", c.tau_frac);
  c.tau_steps = cfg.get_i64("train.tau_steps", c.tau_steps);
  c.klw_start = cfg.get_double("train.klw_start", c.klw_start);
  c.klw_end = cfg.get_double("train.klw_end", c.klw_end);
  c.klw_frac = cfg.get_double("train.klw_frac", c.klw_frac);
  c.klw_steps = cfg.get_i64("train.klw_steps", c.klw_steps);

  c.model.vocab_size = cfg.get_int("model.vocab_size", c.model.vocab_size);
  c.model.num_strategies =
      cfg.get_int("model.num_strategies", c.model.num_strategies);
  c.model.num_doc_labels =
      cfg.get_int("model.num_doc_labels", c.model.num_doc_labels);
  c.model.token_dim = cfg.get_int("model.token_dim", c.model.token_dim);
  c.model.enc_hidden = cfg.get_int("model.enc_hidden", c.model.enc_hidden);
  c.model.infer_hidden = cfg.get_int("model.infer_hidden", c.model.infer_hidden);
  c.model.z_dim = cfg.get_int("model.z_dim", c.model.z_dim);
  c.model.strategy_dim = cfg.get_int("model.strategy_dim", c.model.strategy_dim);
  c.model.doclabel_dim = cfg.get_int("model.doclabel_dim", c.model.doclabel_dim);
  c.model.dec_hidden = cfg.get_int("model.dec_hidden", c.model.dec_hidden);
  c.model.pred_hidden = cfg.get_int("model.pred_hidden", c.model.pred_hidden);
  c.model.attn_dim = cfg.get_int("model.attn_dim", c.model.attn_dim);
  c.model.max_len = cfg.get_int("model.max_len", c.model.max_len);
  return c;
}

std::uint64_t TrainingConfig::hash() const { return to_config().hash(); }

ObjectiveWeights TrainingConfig::weights_at(std::int64_t step) const {
  ObjectiveWeights w;
  w.alpha = alpha;
  w.kl_threshold = kl_threshold;
  w.predictor_weight = predictor_weight;
  w.tau = schedule_value(
      Schedule::exponential(tau_start, tau_end, std::max<std::int64_t>(1, tau_steps)),
      step);
  w.kl_weight = schedule_value(
      Schedule::linear(klw_start, klw_end, std::max<std::int64_t>(1, klw_steps)),
      step);
  return w;
}

CheckpointState::CheckpointState(const TrainingConfig& cfg)
    : config(cfg), params(cfg.model) {
  for (ag::Tensor* t : params.tensors()) {
    opt_m.push_back(Mat::Zero(t->rows(), t->cols()));
    opt_v.push_back(Mat::Zero(t->rows(), t->cols()));
  }
}

ModelParams& CheckpointState::eval_params() {
  return best_params ? *best_params : params;
}

void CheckpointState::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TrainError("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_string(out, config.to_config().serialize());
  put_u64(out, vocab_hash);
  put_i64(out, step);
  put_i64(out, epochs_completed);
  put_string(out, rng_state);

  put_u64(out, static_cast<std::uint64_t>(priors.y_prior.dim()));
  for (Eigen::Index i = 0; i < priors.y_prior.dim(); ++i)
    put_f64(out, priors.y_prior.probs[i]);
  put_u64(out, static_cast<std::uint64_t>(priors.z_dim));

  put_params(out, params);
  put_u64(out, opt_m.size());
  for (const Mat& m : opt_m) put_mat(out, m);
  for (const Mat& v : opt_v) put_mat(out, v);

  put_u64(out, best_params ? 1 : 0);
  if (best_params) {
    put_f64(out, best_dev_f1.value_or(0.0));
    put_params(out, *best_params);
  }

  put_u64(out, history.size());
  for (const MetricsEntry& e : history) {
    put_i64(out, e.step);
    put_f64(out, e.loss.reconstruction);
    put_f64(out, e.loss.kl_z);
    put_f64(out, e.loss.kl_y);
    put_f64(out, e.loss.doc_prediction);
    put_f64(out, e.loss.discriminative);
    put_f64(out, e.loss.total);
    put_u64(out, e.dev_macro_f1 ? 1 : 0);
    if (e.dev_macro_f1) put_f64(out, *e.dev_macro_f1);
  }
  put_u64(out, epoch_free_bits_fraction.size());
  for (double f : epoch_free_bits_fraction) put_f64(out, f);
  if (!out) throw TrainError("checkpoint write failed: " + path);
}

CheckpointState CheckpointState::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TrainError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw TrainError("not a checkpoint file: " + path);

  TrainingConfig cfg =
      TrainingConfig::from_config(KeyValueConfig::parse_string(get_string(in)));
  CheckpointState state(cfg);
  state.vocab_hash = get_u64(in);
  state.step = get_i64(in);
  state.epochs_completed = static_cast<int>(get_i64(in));
  state.rng_state = get_string(in);

  std::uint64_t k = get_u64(in);
  Vec probs(static_cast<Eigen::Index>(k));
  for (std::uint64_t i = 0; i < k; ++i) probs[static_cast<Eigen::Index>(i)] = get_f64(in);
  std::uint64_t z_dim = get_u64(in);
  state.priors = PriorEstimate{CategoricalParams(probs),
                               static_cast<Eigen::Index>(z_dim)};

  get_params(in, state.params);
  std::uint64_t n_opt = get_u64(in);
  if (n_opt != state.opt_m.size())
    throw TrainError("checkpoint corrupt: optimizer state count mismatch");
  for (Mat& m : state.opt_m) m = get_mat(in);
  for (Mat& v : state.opt_v) v = get_mat(in);

  if (get_u64(in) == 1) {
    state.best_dev_f1 = get_f64(in);
    state.best_params.emplace(cfg.model);
    get_params(in, *state.best_params);
  }

  std::uint64_t n_hist = get_u64(in);
  for (std::uint64_t i = 0; i < n_hist; ++i) {
    MetricsEntry e;
    e.step = get_i64(in);
    e.loss.reconstruction = get_f64(in);
    e.loss.kl_z = get_f64(in);
    e.loss.kl_y = get_f64(in);
    e.loss.doc_prediction = get_f64(in);
    e.loss.discriminative = get_f64(in);
    e.loss.total = get_f64(in);
    if (get_u64(in) == 1) e.dev_macro_f1 = get_f64(in);
    state.history.push_back(e);
  }
  std::uint64_t n_fb = get_u64(in);
  for (std::uint64_t i = 0; i < n_fb; ++i)
    state.epoch_free_bits_fraction.push_back(get_f64(in));
  return state;
}

namespace {

std::vector<std::size_t> training_pool(const Corpus& corpus, ModelMode mode) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    if (mode == ModelMode::SupervisedOnly) {
      bool any_labeled = false;
      for (const Sentence& s : corpus.documents[i].sentences)
        any_labeled |= s.labeled();
      if (!any_labeled) continue;
    }
    pool.push_back(i);
  }
  return pool;
}

/// Runs `epochs` additional epochs on an existing state.
void run_epochs(CheckpointState& state, const Corpus& train_corpus,
                const Corpus& dev_corpus, int epochs, std::mt19937_64& gen,
                const MetricsSink& sink) {
  const TrainingConfig& cfg = state.config;
  const ModeFlags flags = ModeFlags::for_mode(cfg.mode);
  std::vector<std::size_t> pool = training_pool(train_corpus, cfg.mode);
  if (pool.empty()) throw TrainError("training pool is empty for this mode");

  const std::vector<int> dev_golds = gold_labels(dev_corpus);
  // Modes that never condition on t must not see it at evaluation either.
  const bool eval_label = cfg.eval_with_doc_label && flags.doc_label_input;
  const std::int64_t steps_per_epoch =
      (static_cast<std::int64_t>(pool.size()) + cfg.batch_size - 1) /
      cfg.batch_size;
  const std::int64_t eval_every =
      cfg.eval_every > 0 ? cfg.eval_every : steps_per_epoch;

  AdamW opt{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
            cfg.adam_eps,     cfg.weight_decay, cfg.grad_clip,
            &state.opt_m,     &state.opt_v,     &state.step};
  // AdamW's bias correction uses the update count, tracked by state.step.

  auto maybe_eval = [&](MetricsEntry& entry) {
    if (state.step % eval_every != 0) return;
    double f1 = dev_macro_f1(state.params, dev_corpus, dev_golds, eval_label);
    entry.dev_macro_f1 = f1;
    if (!state.best_dev_f1 || f1 > *state.best_dev_f1) {
      state.best_dev_f1 = f1;
      state.best_params = state.params;
    }
  };

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(pool.begin(), pool.end(), gen);
    std::int64_t fb_active = 0, fb_total = 0;
    for (std::size_t start = 0; start < pool.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end =
          std::min(pool.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const Document*> batch;
      BatchNoise noise;
      for (std::size_t i = start; i < end; ++i) {
        const Document& doc = train_corpus.documents[pool[i]];
        batch.push_back(&doc);
        noise.docs.push_back(draw_doc_noise(gen, cfg.model.num_strategies,
                                            cfg.model.z_dim,
                                            doc.sentences.size()));
      }

      ObjectiveWeights weights = cfg.weights_at(state.step);
      ag::Tape tape(4096);
      LossBreakdown br;
      TotalLossStats stats;
      ag::Var total;
      try {
        total = total_loss_node(tape, state.params, state.priors, batch, noise,
                                weights, flags, &br, &stats);
      } catch (const std::invalid_argument& e) {
        throw TrainError("forward pass failed at step " +
                         std::to_string(state.step) + ": " + e.what());
      }
      check_breakdown(br, state.step);
      state.params.zero_grad();
      tape.backward(total);
      opt.step(state.params.tensors());

      fb_active += stats.free_bits_active;
      fb_total += stats.free_bits_total;

      MetricsEntry entry;
      entry.step = state.step;
      entry.loss = br;
      maybe_eval(entry);
      state.history.push_back(entry);
      if (sink) sink(entry);
    }
    state.epoch_free_bits_fraction.push_back(
        fb_total > 0 ? static_cast<double>(fb_active) / fb_total : 0.0);
    ++state.epochs_completed;
  }

  // Final evaluation so the best checkpoint reflects the last parameters too.
  double f1 = dev_macro_f1(state.params, dev_corpus, dev_golds, eval_label);
  if (!state.best_dev_f1 || f1 > *state.best_dev_f1) {
    state.best_dev_f1 = f1;
    state.best_params = state.params;
  }
  if (!state.history.empty() && !state.history.back().dev_macro_f1)
    state.history.back().dev_macro_f1 = f1;

  std::ostringstream rng_os;
  rng_os << gen;
  state.rng_state = rng_os.str();
}

}  // namespace

CheckpointState train(const TrainingConfig& config, const Corpus& train_corpus,
                      const Corpus& dev_corpus, const MetricsSink& sink) {
  TrainingConfig cfg = config;
  cfg.model.vocab_size = train_corpus.vocab.size();
  cfg.model.num_strategies = train_corpus.num_strategies;
  cfg.model.num_doc_labels = train_corpus.num_doc_labels;
  cfg.model.validate();

  if (cfg.alpha > 0.0 && train_corpus.labeled_sentence_count() == 0)
    throw TrainError(
        "alpha > 0 requires at least one labeled sentence in the training corpus");
  for (const Document& d : dev_corpus.documents) {
    for (const Sentence& s : d.sentences) {
      if (!s.gold_strategy && !s.strategy)
        throw TrainError("dev corpus must be fully labeled");
    }
  }

  std::vector<std::size_t> pool = training_pool(train_corpus, cfg.mode);
  if (pool.empty()) throw TrainError("training pool is empty for this mode");
  std::int64_t steps_per_epoch =
      (static_cast<std::int64_t>(pool.size()) + cfg.batch_size - 1) /
      cfg.batch_size;
  std::int64_t total_steps = steps_per_epoch * cfg.epochs;
  if (cfg.tau_steps <= 0)
    cfg.tau_steps = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(total_steps * cfg.tau_frac)));
  if (cfg.klw_steps <= 0)
    cfg.klw_steps = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(total_steps * cfg.klw_frac)));

  CheckpointState state(cfg);
  state.vocab_hash = train_corpus.vocab.hash();

  std::vector<int> labels;
  for (const Document& d : train_corpus.documents) {
    for (const Sentence& s : d.sentences) {
      if (s.labeled()) labels.push_back(*s.strategy);
    }
  }
  state.priors = estimate_prior(labels, cfg.model.num_strategies,
                                cfg.prior_smoothing, cfg.model.z_dim);

  std::mt19937_64 gen(cfg.seed);
  state.params.init_random(gen());

  run_epochs(state, train_corpus, dev_corpus, cfg.epochs, gen, sink);
  return state;
}

CheckpointState resume(const std::string& checkpoint_path, int additional_epochs,
                       const Corpus& train_corpus, const Corpus& dev_corpus,
                       const MetricsSink& sink) {
  CheckpointState state = CheckpointState::load(checkpoint_path);
  if (state.vocab_hash != train_corpus.vocab.hash())
    throw TrainError(
        "refusing to resume: corpus vocabulary hash does not match checkpoint");
  if (train_corpus.num_strategies != state.config.model.num_strategies ||
      train_corpus.num_doc_labels != state.config.model.num_doc_labels)
    throw TrainError("refusing to resume: corpus schema does not match checkpoint");

  std::mt19937_64 gen;
  std::istringstream rng_in(state.rng_state);
  rng_in >> gen;
  if (!rng_in) throw TrainError("checkpoint corrupt: bad RNG state");

  run_epochs(state, train_corpus, dev_corpus, additional_epochs, gen, sink);
  return state;
}

Corpus select_labeled_subset(const Corpus& corpus, int count,
                             std::uint64_t seed) {
  std::vector<std::size_t> labeled = corpus.labeled_doc_indices();
  if (count < 0) return corpus;
  if (static_cast<std::size_t>(count) > labeled.size())
    throw ConfigError("select_labeled_subset: requested " +
                      std::to_string(count) + " labeled documents, corpus has " +
                      std::to_string(labeled.size()));
  std::mt19937_64 gen(seed);
  std::shuffle(labeled.begin(), labeled.end(), gen);
  std::vector<bool> keep(corpus.documents.size(), false);
  for (int i = 0; i < count; ++i) keep[labeled[static_cast<std::size_t>(i)]] = true;

  Corpus out = corpus;
  for (std::size_t i = 0; i < out.documents.size(); ++i) {
    if (keep[i] || !out.documents[i].fully_labeled()) continue;
    for (Sentence& s : out.documents[i].sentences) s.strategy.reset();
  }
  return out;
}

Corpus select_unlabeled_subset(const Corpus& corpus, int count,
                               std::uint64_t seed) {
  if (count < 0) return corpus;
  std::vector<std::size_t> unlabeled;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    if (corpus.documents[i].fully_unlabeled()) unlabeled.push_back(i);
  }
  if (static_cast<std::size_t>(count) > unlabeled.size())
    throw ConfigError("select_unlabeled_subset: requested " +
                      std::to_string(count) +
                      " unlabeled documents, corpus has " +
                      std::to_string(unlabeled.size()));
  std::mt19937_64 gen(seed);
  std::shuffle(unlabeled.begin(), unlabeled.end(), gen);
  std::vector<bool> drop(corpus.documents.size(), false);
  for (std::size_t i = static_cast<std::size_t>(count); i < unlabeled.size(); ++i)
    drop[unlabeled[i]] = true;

  Corpus out = corpus;
  out.documents.clear();
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    if (!drop[i]) out.documents.push_back(corpus.documents[i]);
  }
  return out;
}

void write_metrics_jsonl(const std::vector<MetricsEntry>& history,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw TrainError("cannot open metrics log for writing: " + path);
  for (const MetricsEntry& e : history) {
    json j = {{"step", e.step},
              {"total", e.loss.total},
              {"recon", e.loss.reconstruction},
              {"kl_z", e.loss.kl_z},
              {"kl_y", e.loss.kl_y},
              {"doc_pred", e.loss.doc_prediction},
              {"disc", e.loss.discriminative},
              {"dev_macro_f1",
               e.dev_macro_f1 ? json(*e.dev_macro_f1) : json(nullptr)}};
    out << j.dump() << "\n";
  }
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the combined words
  std::uint64_t x = base ^ (a * 0x9E3779B97F4A7C15ull) ^ (b + 0xBF58476D1CE4E5B9ull);
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace wsvae
