#include "wsvae/experiments.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace wsvae {

using nlohmann::json;

namespace {

struct RunTask {
  std::size_t row = 0;
  int labeled_count = 0;
  int unlabeled_count = -1;
  double kl_threshold = 1.2;
  ModelMode mode = ModelMode::WsVae;
  std::uint64_t run_seed = 0;
};

ExperimentTable run_table(const ExperimentConfig& cfg, const Corpus& corpus,
                          const std::string& name,
                          const std::vector<std::string>& row_labels,
                          const std::vector<RunTask>& tasks) {
  SplitResult split = split_corpus(corpus, cfg.split, cfg.split_seed);

  std::vector<MetricsReport> results(tasks.size());
  std::atomic<std::size_t> next{0};
  unsigned workers = cfg.workers > 0
                         ? static_cast<unsigned>(cfg.workers)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, tasks.size());

  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const RunTask& t = tasks[i];
      results[i] =
          run_experiment_once(cfg, split, t.labeled_count, t.unlabeled_count,
                              t.kl_threshold, t.mode, t.run_seed);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

  ExperimentTable table;
  table.name = name;
  table.rows.resize(row_labels.size());
  for (std::size_t r = 0; r < row_labels.size(); ++r)
    table.rows[r].label = row_labels[r];
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    ExperimentRow& row = table.rows[tasks[i].row];
    row.run_macro_f1.push_back(results[i].macro_f1);
    row.run_doc_accuracy.push_back(results[i].doc_accuracy);
  }
  for (ExperimentRow& row : table.rows) {
    row.runs = static_cast<int>(row.run_macro_f1.size());
    double sum = 0.0, acc = 0.0;
    for (double f : row.run_macro_f1) sum += f;
    for (double a : row.run_doc_accuracy) acc += a;
    row.mean_macro_f1 = sum / row.runs;
    row.mean_doc_accuracy = acc / row.runs;
    if (row.runs >= 2) {
      double ss = 0.0;
      for (double f : row.run_macro_f1) {
        double d = f - row.mean_macro_f1;
        ss += d * d;
      }
      double stddev = std::sqrt(ss / (row.runs - 1));
      row.ci95_macro_f1 = 1.96 * stddev / std::sqrt(static_cast<double>(row.runs));
    }
  }
  return table;
}

}  // namespace

MetricsReport run_experiment_once(const ExperimentConfig& cfg,
                                  const SplitResult& split, int labeled_count,
                                  int unlabeled_count, double kl_threshold,
                                  ModelMode mode, std::uint64_t run_seed) {
  Corpus train_corpus =
      select_labeled_subset(split.train, labeled_count, run_seed);
  if (unlabeled_count >= 0)
    train_corpus = select_unlabeled_subset(train_corpus, unlabeled_count,
                                           mix_seed(run_seed, 0x5eed, 1));

  TrainingConfig tc = cfg.train;
  tc.kl_threshold = kl_threshold;
  tc.mode = mode;
  tc.seed = run_seed;
  tc.labeled_doc_count = std::to_string(labeled_count);
  if (mode == ModelMode::SupervisedOnly && cfg.supervised_epochs > 0)
    tc.epochs = cfg.supervised_epochs;

  CheckpointState state = train(tc, train_corpus, split.dev);
  bool eval_label = tc.eval_with_doc_label &&
                    ModeFlags::for_mode(mode).doc_label_input;
  return evaluate_corpus(state.eval_params(), split.test, eval_label);
}

ExperimentTable experiment_vary_labeled(const ExperimentConfig& cfg,
                                        const Corpus& corpus,
                                        const std::vector<std::string>& counts,
                                        int runs) {
  if (counts.empty() || runs < 1)
    throw ConfigError("experiment_vary_labeled: need counts and runs >= 1");
  SplitResult split = split_corpus(corpus, cfg.split, cfg.split_seed);
  int last = -1;
  std::vector<int> resolved;
  for (const std::string& c : counts) {
    int n = c == "max" ? static_cast<int>(split.train.labeled_doc_indices().size())
                       : std::stoi(c);
    if (n < last)
      throw ConfigError("experiment_vary_labeled: counts must be ascending");
    last = n;
    resolved.push_back(n);
  }

  std::vector<RunTask> tasks;
  for (std::size_t r = 0; r < resolved.size(); ++r) {
    for (int run = 0; run < runs; ++run) {
      tasks.push_back({r, resolved[r], cfg.unlabeled_count,
                       cfg.train.kl_threshold, cfg.train.mode,
                       mix_seed(cfg.train.seed, r, static_cast<std::uint64_t>(run))});
    }
  }
  return run_table(cfg, corpus, "vary_labeled", counts, tasks);
}

ExperimentTable ablate_kl_threshold(const ExperimentConfig& cfg,
                                    const Corpus& corpus,
                                    const std::vector<double>& thresholds,
                                    int runs) {
  if (thresholds.empty() || runs < 1)
    throw ConfigError("ablate_kl_threshold: need thresholds and runs >= 1");
  std::vector<std::string> labels;
  std::vector<RunTask> tasks;
  for (std::size_t r = 0; r < thresholds.size(); ++r) {
    std::ostringstream os;
    os << thresholds[r];
    labels.push_back(os.str());
    for (int run = 0; run < runs; ++run) {
      tasks.push_back({r, cfg.labeled_count, cfg.unlabeled_count, thresholds[r],
                       cfg.train.mode,
                       mix_seed(cfg.train.seed, 100 + r,
                                static_cast<std::uint64_t>(run))});
    }
  }
  return run_table(cfg, corpus, "kl_threshold_ablation", labels, tasks);
}

ExperimentTable experiment_vary_unlabeled(
    const ExperimentConfig& cfg, const Corpus& corpus,
    const std::vector<int>& unlabeled_counts, int runs) {
  if (unlabeled_counts.empty() || runs < 1)
    throw ConfigError("experiment_vary_unlabeled: need counts and runs >= 1");
  std::vector<std::string> labels;
  std::vector<RunTask> tasks;
  for (std::size_t r = 0; r < unlabeled_counts.size(); ++r) {
    labels.push_back(std::to_string(unlabeled_counts[r]));
    for (int run = 0; run < runs; ++run) {
      tasks.push_back({r, cfg.labeled_count, unlabeled_counts[r],
                       cfg.train.kl_threshold, cfg.train.mode,
                       mix_seed(cfg.train.seed, 200 + r,
                                static_cast<std::uint64_t>(run))});
    }
  }
  return run_table(cfg, corpus, "vary_unlabeled", labels, tasks);
}

ExperimentTable compare_modes(const ExperimentConfig& cfg, const Corpus& corpus,
                              const std::vector<ModelMode>& modes, int runs) {
  if (modes.empty() || runs < 1)
    throw ConfigError("compare_modes: need modes and runs >= 1");
  std::vector<std::string> labels;
  std::vector<RunTask> tasks;
  for (std::size_t r = 0; r < modes.size(); ++r) {
    labels.push_back(mode_name(modes[r]));
    for (int run = 0; run < runs; ++run) {
      // Same per-run seed across modes so the comparison is paired.
      tasks.push_back({r, cfg.labeled_count, cfg.unlabeled_count,
                       cfg.train.kl_threshold, modes[r],
                       mix_seed(cfg.train.seed, 300,
                                static_cast<std::uint64_t>(run))});
    }
  }
  return run_table(cfg, corpus, "compare_modes", labels, tasks);
}

std::string experiment_table_to_json(const ExperimentTable& table) {
  json rows = json::array();
  for (const ExperimentRow& row : table.rows) {
    json r = {{"label", row.label},
              {"runs", row.runs},
              {"run_macro_f1", row.run_macro_f1},
              {"run_doc_accuracy", row.run_doc_accuracy},
              {"mean_macro_f1", row.mean_macro_f1},
              {"mean_doc_accuracy", row.mean_doc_accuracy},
              {"ci95_macro_f1", row.ci95_macro_f1 ? json(*row.ci95_macro_f1)
                                                  : json(nullptr)}};
    rows.push_back(r);
  }
  json j = {{"experiment", table.name}, {"rows", rows}};
  return j.dump(2);
}

}  // namespace wsvae
