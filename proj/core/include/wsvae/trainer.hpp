#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wsvae/configfile.hpp"
#include "wsvae/corpus.hpp"
#include "wsvae/eval.hpp"
#include "wsvae/model.hpp"
#include "wsvae/objectives.hpp"

namespace wsvae {

/// Raised when optimization diverges or a checkpoint is unusable.
struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingConfig {
  // Objective weights.
  double alpha = 5.0;
  double kl_threshold = 1.2;
  double predictor_weight = 0.5;

  // Optimizer (decoupled weight decay).
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double grad_clip = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Loop.
  int epochs = 10;
  int batch_size = 8;
  int eval_every = 0;  // steps between dev evaluations; 0 = once per epoch
  std::string labeled_doc_count = "max";
  double prior_smoothing = 1.0;
  std::uint64_t seed = 1;
  ModelMode mode = ModelMode::WsVae;
  bool eval_with_doc_label = true;

  // Temperature: exponential decay over the first tau_frac of training.
  double tau_start = 1.0;
  double tau_end = 0.3;
  double tau_frac = 2.0 / 3.0;
  std::int64_t tau_steps = 0;  // 0 = derive from tau_frac at train start

  // KL weight: linear warmup over the first klw_frac of training.
  double klw_start = 0.01;
  double klw_end = 1.0;
  double klw_frac = 0.5;
  std::int64_t klw_steps = 0;

  ModelConfig model;  // vocab/K/T filled from the corpus at train start

  KeyValueConfig to_config() const;
  static TrainingConfig from_config(const KeyValueConfig& cfg);
  std::uint64_t hash() const;

  ObjectiveWeights weights_at(std::int64_t step) const;  // needs resolved steps
};

ModelMode parse_mode(const std::string& name);
std::string mode_name(ModelMode mode);

struct MetricsEntry {
  std::int64_t step = 0;
  LossBreakdown loss;
  std::optional<double> dev_macro_f1;
};

using MetricsSink = std::function<void(const MetricsEntry&)>;

struct CheckpointState {
  TrainingConfig config;  // resolved (schedule horizons frozen)
  ModelParams params;     // current parameters
  std::vector<Mat> opt_m, opt_v;
  std::int64_t step = 0;
  int epochs_completed = 0;
  std::string rng_state;
  std::uint64_t vocab_hash = 0;
  PriorEstimate priors;
  std::vector<MetricsEntry> history;
  std::vector<double> epoch_free_bits_fraction;
  std::optional<double> best_dev_f1;
  std::optional<ModelParams> best_params;

  explicit CheckpointState(const TrainingConfig& cfg);

  /// Parameters to evaluate with: the best dev checkpoint when one exists.
  ModelParams& eval_params();

  void save(const std::string& path) const;
  static CheckpointState load(const std::string& path);
};

/// Runs the optimization loop. Deterministic given (config, corpora).
CheckpointState train(const TrainingConfig& config, const Corpus& train_corpus,
                      const Corpus& dev_corpus,
                      const MetricsSink& sink = nullptr);

/// Continues a saved run for additional epochs on the same corpora. The
/// checkpoint's vocabulary hash must match the supplied corpus.
CheckpointState resume(const std::string& checkpoint_path, int additional_epochs,
                       const Corpus& train_corpus, const Corpus& dev_corpus,
                       const MetricsSink& sink = nullptr);

/// Keeps `count` labeled documents visible (count < 0 keeps all) and masks
/// the rest to unlabeled; gold labels stay out-of-band.
Corpus select_labeled_subset(const Corpus& corpus, int count,
                             std::uint64_t seed);

/// Keeps all labeled documents plus a seeded subset of unlabeled ones
/// (count < 0 keeps all).
Corpus select_unlabeled_subset(const Corpus& corpus, int count,
                               std::uint64_t seed);

void write_metrics_jsonl(const std::vector<MetricsEntry>& history,
                         const std::string& path);

/// Deterministic seed derivation for experiment runs.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

}  // namespace wsvae
