#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wsvae/corpus.hpp"
#include "wsvae/model.hpp"

namespace wsvae {

/// Per-class F1 uses 0 when precision + recall is 0; the macro average runs
/// over all K classes regardless of support.
std::pair<double, Vec> macro_f1(const std::vector<int>& preds,
                                const std::vector<int>& golds, int k);

double doc_accuracy(const std::vector<int>& preds,
                    const std::vector<int>& golds);

/// confusion(i, j) counts gold i predicted as j.
Eigen::MatrixXi confusion_matrix(const std::vector<int>& preds,
                                 const std::vector<int>& golds, int k);

struct MetricsReport {
  double macro_f1 = 0.0;
  Vec per_class_f1;
  double doc_accuracy = 0.0;
  Eigen::MatrixXi confusion;
  int n_runs = 1;
  std::optional<double> mean_macro_f1;  // present when n_runs >= 1 aggregates
  std::optional<double> ci95_macro_f1;  // present when n_runs >= 2
};

/// argmax of q(y|s,t) per sentence, ties toward the lowest class index. The
/// document label conditions the posterior only when use_doc_label is set.
std::vector<int> predict_strategies(ModelParams& params, const Corpus& corpus,
                                    bool use_doc_label);

/// Deterministic per-sentence latents for analysis and document prediction:
/// y = q(y|s,t) (soft), z = posterior mean at the mixed strategy embedding.
std::vector<std::pair<Vec, Vec>> document_latents(ModelParams& params,
                                                  const Document& doc,
                                                  std::optional<int> doc_label);

/// Document-label predictions; the posterior inputs never see the true label.
std::vector<int> predict_doc_labels(ModelParams& params, const Corpus& corpus);

/// Sentence metrics against gold_strategy (falling back to the visible
/// label), plus document accuracy.
MetricsReport evaluate_corpus(ModelParams& params, const Corpus& corpus,
                              bool use_doc_label);

struct AttentionReport {
  // Mean attention mass of strategy slots per strategy class; entries for
  // classes never predicted (or never gold, per grouping) are unset.
  std::vector<std::optional<double>> per_strategy_mean;
  double content_mass = 0.0;
  double strategy_mass = 0.0;  // content_mass + strategy_mass == 1
  int documents = 0;
};

/// Runs the document predictor over the corpus and aggregates attention
/// weights. group_by_gold selects gold instead of predicted strategies for
/// the per-strategy grouping.
AttentionReport attention_report(ModelParams& params, const Corpus& corpus,
                                 bool use_doc_label, bool group_by_gold);

std::string metrics_report_to_json(const MetricsReport& report,
                                   const std::vector<std::string>& class_names);
std::string attention_report_to_json(const AttentionReport& report,
                                     const std::vector<std::string>& class_names);
std::string similarity_to_json(const Mat& similarity,
                               const std::vector<std::string>& class_names);

}  // namespace wsvae
