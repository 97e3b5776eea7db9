#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wsvae/eval.hpp"
#include "wsvae/trainer.hpp"

namespace wsvae {

/// Shared setup for the multi-run experiment protocols: how to split the
/// corpus and how to dress the training corpus per run.
struct ExperimentConfig {
  TrainingConfig train;
  SplitCounts split{120, 100, 200};
  std::uint64_t split_seed = 7;
  int labeled_count = 20;    // visible labeled documents per run
  int unlabeled_count = -1;  // -1 keeps every unlabeled document
  int supervised_epochs = 0; // 0 = train.epochs (supervised passes are cheap)
  int workers = 0;           // 0 = hardware concurrency
};

struct ExperimentRow {
  std::string label;
  int runs = 0;
  std::vector<double> run_macro_f1;
  std::vector<double> run_doc_accuracy;
  double mean_macro_f1 = 0.0;
  std::optional<double> ci95_macro_f1;  // present when runs >= 2
  double mean_doc_accuracy = 0.0;
};

struct ExperimentTable {
  std::string name;
  std::vector<ExperimentRow> rows;
};

/// One training run: masks the train split to the requested subset sizes,
/// trains, and evaluates the best checkpoint on the test split.
MetricsReport run_experiment_once(const ExperimentConfig& cfg,
                                  const SplitResult& split, int labeled_count,
                                  int unlabeled_count, double kl_threshold,
                                  ModelMode mode, std::uint64_t run_seed);

/// Macro-F1 as a function of the number of labeled documents. Counts are
/// decimal strings or "max".
ExperimentTable experiment_vary_labeled(const ExperimentConfig& cfg,
                                        const Corpus& corpus,
                                        const std::vector<std::string>& counts,
                                        int runs);

/// Macro-F1 under different free-bits thresholds at a fixed labeled count.
ExperimentTable ablate_kl_threshold(const ExperimentConfig& cfg,
                                    const Corpus& corpus,
                                    const std::vector<double>& thresholds,
                                    int runs);

/// Macro-F1 as a function of the unlabeled-document budget.
ExperimentTable experiment_vary_unlabeled(
    const ExperimentConfig& cfg, const Corpus& corpus,
    const std::vector<int>& unlabeled_counts, int runs);

/// Model-mode comparison (ws / svae / supervised) under one protocol.
ExperimentTable compare_modes(const ExperimentConfig& cfg, const Corpus& corpus,
                              const std::vector<ModelMode>& modes, int runs);

std::string experiment_table_to_json(const ExperimentTable& table);

}  // namespace wsvae
