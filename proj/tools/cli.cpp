#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "wsvae/configfile.hpp"
#include "wsvae/corpus.hpp"
#include "wsvae/experiments.hpp"
#include "wsvae/trainer.hpp"

namespace wsvae::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKnownKeys = {
    // synthesis
    "synth.k", "synth.doc_labels", "synth.keywords_per_strategy",
    "synth.shared_tokens", "synth.documents", "synth.min_sentences",
    "synth.max_sentences", "synth.min_tokens", "synth.max_tokens",
    "synth.keyword_fraction", "synth.labeled_fraction", "synth.designated",
    "synth.designated_threshold", "synth.seed", "synth.strategy_weights",
    // corpus schema & loading
    "corpus.path", "corpus.k", "corpus.t", "corpus.min_freq", "corpus.max_len",
    // split
    "split.train", "split.dev", "split.test", "split.seed",
    // training
    "train.alpha", "train.kl_threshold", "train.predictor_weight",
    "train.learning_rate", "train.weight_decay", "train.grad_clip",
    "train.adam_beta1", "train.adam_beta2", "train.adam_eps", "train.epochs",
    "train.batch_size", "train.eval_every", "train.labeled_docs",
    "train.unlabeled_docs", "train.prior_smoothing", "train.seed", "train.mode",
    "train.eval_with_doc_label", "train.tau_start", "train.tau_end",
    "train.tau_frac", "train.tau_steps", "train.klw_start", "train.klw_end",
    "train.klw_frac", "train.klw_steps",
    // model dims
    "model.vocab_size", "model.num_strategies", "model.num_doc_labels",
    "model.token_dim", "model.enc_hidden", "model.infer_hidden", "model.z_dim",
    "model.strategy_dim", "model.doclabel_dim", "model.dec_hidden",
    "model.pred_hidden", "model.attn_dim", "model.max_len",
    // experiments
    "experiment.runs", "experiment.counts", "experiment.thresholds",
    "experiment.unlabeled_counts", "experiment.labeled_count",
    "experiment.unlabeled_count", "experiment.supervised_epochs",
    "experiment.workers",
    // evaluation / analysis
    "eval.split", "eval.use_doc_label", "eval.group_by_gold",
};

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
};

void add_common(CLI::App* sub, CommonArgs& common) {
  sub->add_option("--config", common.config_path,
                  "config file (path, or name resolved under configs/)");
  sub->add_option("--set", common.sets, "override: section.key=value")
      ->take_all();
  sub->add_option("--out", common.out,
                  "output directory (default: $WSVAE_OUT_ROOT/<command>)");
}

std::string resolve_config_path(const std::string& name) {
  if (fs::exists(name)) return name;
  for (const std::string& candidate :
       {name + ".cfg", "configs/" + name, "configs/" + name + ".cfg"}) {
    if (fs::exists(candidate)) return candidate;
  }
  throw ConfigError("config not found: " + name);
}

KeyValueConfig layered_config(const CommonArgs& common) {
  KeyValueConfig cfg;
  if (!common.config_path.empty())
    cfg = KeyValueConfig::parse_file(resolve_config_path(common.config_path));
  for (const std::string& kv : common.sets) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects section.key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.require_known(kKnownKeys);
  return cfg;
}

fs::path resolve_out_dir(const CommonArgs& common, const std::string& command) {
  std::string out = common.out;
  if (out.empty()) {
    const char* root = std::getenv("WSVAE_OUT_ROOT");
    if (root == nullptr || *root == '\0')
      throw ConfigError("--out is required (or set WSVAE_OUT_ROOT)");
    out = (fs::path(root) / command).string();
  }
  fs::create_directories(out);
  return out;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(csv);
  while (std::getline(in, cur, ',')) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

SynthConfig synth_from_config(const KeyValueConfig& cfg) {
  SynthConfig s;
  s.num_strategies = cfg.get_int("synth.k", s.num_strategies);
  s.num_doc_labels = cfg.get_int("synth.doc_labels", s.num_doc_labels);
  s.keywords_per_strategy =
      cfg.get_int("synth.keywords_per_strategy", s.keywords_per_strategy);
  s.shared_tokens = cfg.get_int("synth.shared_tokens", s.shared_tokens);
  s.num_documents = cfg.get_int("synth.documents", s.num_documents);
  s.min_sentences = cfg.get_int("synth.min_sentences", s.min_sentences);
  s.max_sentences = cfg.get_int("synth.max_sentences", s.max_sentences);
  s.min_tokens = cfg.get_int("synth.min_tokens", s.min_tokens);
  s.max_tokens = cfg.get_int("synth.max_tokens", s.max_tokens);
  s.keyword_fraction = cfg.get_double("synth.keyword_fraction", s.keyword_fraction);
  s.labeled_fraction = cfg.get_double("synth.labeled_fraction", s.labeled_fraction);
  s.designated_threshold =
      cfg.get_int("synth.designated_threshold", s.designated_threshold);
  s.seed = cfg.get_u64("synth.seed", s.seed);
  if (cfg.has("synth.designated")) {
    s.designated_strategies.clear();
    for (const std::string& item : split_list(cfg.get_string("synth.designated", "")))
      s.designated_strategies.push_back(std::stoi(item));
  }
  if (cfg.has("synth.strategy_weights")) {
    auto items = split_list(cfg.get_string("synth.strategy_weights", ""));
    s.strategy_weights = Eigen::VectorXd(items.size());
    for (std::size_t i = 0; i < items.size(); ++i)
      s.strategy_weights[static_cast<Eigen::Index>(i)] = std::stod(items[i]);
  }
  return s;
}

KeyValueConfig synth_to_config(const SynthConfig& s) {
  KeyValueConfig cfg;
  cfg.set("synth.k", std::to_string(s.num_strategies));
  cfg.set("synth.doc_labels", std::to_string(s.num_doc_labels));
  cfg.set("synth.keywords_per_strategy", std::to_string(s.keywords_per_strategy));
  cfg.set("synth.shared_tokens", std::to_string(s.shared_tokens));
  cfg.set("synth.documents", std::to_string(s.num_documents));
  cfg.set("synth.min_sentences", std::to_string(s.min_sentences));
  cfg.set("synth.max_sentences", std::to_string(s.max_sentences));
  cfg.set("synth.min_tokens", std::to_string(s.min_tokens));
  cfg.set("synth.max_tokens", std::to_string(s.max_tokens));
  std::ostringstream kf;
  kf.precision(17);
  kf << s.keyword_fraction;
  cfg.set("synth.keyword_fraction", kf.str());
  std::ostringstream lf;
  lf.precision(17);
  lf << s.labeled_fraction;
  cfg.set("synth.labeled_fraction", lf.str());
  std::string designated;
  for (int d : s.designated_strategies)
    designated += (designated.empty() ? "" : ",") + std::to_string(d);
  cfg.set("synth.designated", designated);
  cfg.set("synth.designated_threshold", std::to_string(s.designated_threshold));
  cfg.set("synth.seed", std::to_string(s.seed));
  if (s.strategy_weights.size() > 0) {
    std::string weights;
    for (Eigen::Index i = 0; i < s.strategy_weights.size(); ++i) {
      std::ostringstream w;
      w.precision(17);
      w << s.strategy_weights[i];
      weights += (weights.empty() ? "" : ",") + w.str();
    }
    cfg.set("synth.strategy_weights", weights);
  }
  return cfg;
}

struct CorpusSetup {
  std::string path;
  CorpusSchema schema;
  int min_freq = 2;
  int max_len = 64;
};

CorpusSetup corpus_setup(const KeyValueConfig& cfg, const std::string& flag_path) {
  CorpusSetup setup;
  setup.path = !flag_path.empty() ? flag_path : cfg.get_string("corpus.path", "");
  if (setup.path.empty())
    throw ConfigError("no corpus given (use --corpus or corpus.path)");
  setup.schema.num_strategies = cfg.get_int("corpus.k", 4);
  setup.schema.num_doc_labels = cfg.get_int("corpus.t", 2);
  setup.min_freq = cfg.get_int("corpus.min_freq", 2);
  setup.max_len = cfg.get_int("corpus.max_len", 64);
  return setup;
}

SplitCounts split_from_config(const KeyValueConfig& cfg) {
  return SplitCounts{cfg.get_int("split.train", 120), cfg.get_int("split.dev", 100),
                     cfg.get_int("split.test", 200)};
}

void fill_corpus_keys(KeyValueConfig& cfg, const CorpusSetup& setup,
                      const SplitCounts& split, std::uint64_t split_seed) {
  cfg.set("corpus.path", setup.path);
  cfg.set("corpus.k", std::to_string(setup.schema.num_strategies));
  cfg.set("corpus.t", std::to_string(setup.schema.num_doc_labels));
  cfg.set("corpus.min_freq", std::to_string(setup.min_freq));
  cfg.set("corpus.max_len", std::to_string(setup.max_len));
  cfg.set("split.train", std::to_string(split.train));
  cfg.set("split.dev", std::to_string(split.dev));
  cfg.set("split.test", std::to_string(split.test));
  cfg.set("split.seed", std::to_string(split_seed));
}

ExperimentConfig experiment_from_config(const KeyValueConfig& cfg) {
  ExperimentConfig ex;
  ex.train = TrainingConfig::from_config(cfg);
  ex.split = split_from_config(cfg);
  ex.split_seed = cfg.get_u64("split.seed", ex.split_seed);
  ex.labeled_count = cfg.get_int("experiment.labeled_count", ex.labeled_count);
  ex.unlabeled_count = cfg.get_int("experiment.unlabeled_count", ex.unlabeled_count);
  ex.supervised_epochs =
      cfg.get_int("experiment.supervised_epochs", ex.supervised_epochs);
  ex.workers = cfg.get_int("experiment.workers", ex.workers);
  return ex;
}

int run_synth(const CommonArgs& common) {
  KeyValueConfig cfg = layered_config(common);
  SynthConfig synth = synth_from_config(cfg);
  fs::path out = resolve_out_dir(common, "synth");

  Corpus corpus = synth_generate(synth);
  write_corpus(corpus, (out / "corpus.jsonl").string());
  write_corpus(corpus, (out / "corpus.gold.jsonl").string(), /*gold=*/true);
  write_text(out / "resolved_config.cfg", synth_to_config(synth).serialize());

  std::cerr << "[synth] wrote " << corpus.documents.size() << " documents ("
            << corpus.labeled_doc_indices().size() << " labeled) to "
            << (out / "corpus.jsonl").string() << "\n";
  return 0;
}

struct LoadedSplits {
  Corpus full;
  SplitResult split;
};

LoadedSplits load_and_split(const KeyValueConfig& cfg, const std::string& flag_path) {
  CorpusSetup setup = corpus_setup(cfg, flag_path);
  Corpus corpus = load_corpus(setup.path, setup.schema, nullptr, setup.min_freq,
                              setup.max_len);
  SplitCounts counts = split_from_config(cfg);
  std::uint64_t split_seed = cfg.get_u64("split.seed", 7);
  SplitResult split = split_corpus(corpus, counts, split_seed);
  return {std::move(corpus), std::move(split)};
}

int run_train(const CommonArgs& common, const std::string& corpus_flag) {
  KeyValueConfig cfg = layered_config(common);
  fs::path out = resolve_out_dir(common, "train");

  CorpusSetup setup = corpus_setup(cfg, corpus_flag);
  LoadedSplits loaded = load_and_split(cfg, corpus_flag);
  TrainingConfig tc = TrainingConfig::from_config(cfg);

  Corpus train_corpus = loaded.split.train;
  if (tc.labeled_doc_count != "max") {
    int count = std::stoi(tc.labeled_doc_count);
    train_corpus = select_labeled_subset(train_corpus, count,
                                         mix_seed(tc.seed, 0xabe1, 0));
  }
  int unlabeled_docs = cfg.get_int("train.unlabeled_docs", -1);
  if (unlabeled_docs >= 0)
    train_corpus = select_unlabeled_subset(train_corpus, unlabeled_docs,
                                           mix_seed(tc.seed, 0xabe1, 1));

  std::ofstream metrics_file(out / "metrics.jsonl");
  if (!metrics_file)
    throw std::runtime_error("cannot write metrics.jsonl under " + out.string());
  MetricsSink sink = [&](const MetricsEntry& e) {
    metrics_file << "{\"step\":" << e.step;
    metrics_file.precision(17);
    metrics_file << ",\"total\":" << e.loss.total
                 << ",\"recon\":" << e.loss.reconstruction
                 << ",\"kl_z\":" << e.loss.kl_z << ",\"kl_y\":" << e.loss.kl_y
                 << ",\"doc_pred\":" << e.loss.doc_prediction
                 << ",\"disc\":" << e.loss.discriminative << ",\"dev_macro_f1\":";
    if (e.dev_macro_f1)
      metrics_file << *e.dev_macro_f1;
    else
      metrics_file << "null";
    metrics_file << "}\n";
    if (e.dev_macro_f1) {
      std::cerr << "[train] step " << e.step << " total=" << e.loss.total
                << " dev_macro_f1=" << *e.dev_macro_f1 << "\n";
    }
  };

  CheckpointState state = train(tc, train_corpus, loaded.split.dev, sink);

  // Persist the resolved configuration (schedule horizons and model dims are
  // frozen by the trainer).
  KeyValueConfig resolved = state.config.to_config();
  fill_corpus_keys(resolved, setup, split_from_config(cfg), cfg.get_u64("split.seed", 7));
  if (unlabeled_docs >= 0)
    resolved.set("train.unlabeled_docs", std::to_string(unlabeled_docs));
  write_text(out / "resolved_config.cfg", resolved.serialize());

  state.save((out / "checkpoint.bin").string());

  bool eval_label = state.config.eval_with_doc_label &&
                    ModeFlags::for_mode(state.config.mode).doc_label_input;
  MetricsReport report =
      evaluate_corpus(state.eval_params(), loaded.split.test, eval_label);
  write_text(out / "report.json",
             metrics_report_to_json(report, loaded.full.strategy_names));

  std::cerr << "[train] done: best_dev_f1="
            << (state.best_dev_f1 ? *state.best_dev_f1 : 0.0)
            << " test_macro_f1=" << report.macro_f1 << "\n";
  return 0;
}

int run_eval(const CommonArgs& common, const std::string& corpus_flag,
             const std::string& checkpoint_path) {
  KeyValueConfig cfg = layered_config(common);
  fs::path out = resolve_out_dir(common, "eval");
  if (checkpoint_path.empty()) throw ConfigError("--checkpoint is required");

  LoadedSplits loaded = load_and_split(cfg, corpus_flag);
  CheckpointState state = CheckpointState::load(checkpoint_path);

  std::string which = cfg.get_string("eval.split", "test");
  const Corpus* target = &loaded.split.test;
  if (which == "dev") target = &loaded.split.dev;
  else if (which == "train") target = &loaded.split.train;
  else if (which != "test") throw ConfigError("eval.split must be train|dev|test");

  bool eval_label = cfg.get_bool(
      "eval.use_doc_label",
      state.config.eval_with_doc_label &&
          ModeFlags::for_mode(state.config.mode).doc_label_input);
  MetricsReport report = evaluate_corpus(state.eval_params(), *target, eval_label);

  KeyValueConfig resolved = cfg;
  resolved.set("eval.split", which);
  write_text(out / "resolved_config.cfg", resolved.serialize());
  std::string js = metrics_report_to_json(report, loaded.full.strategy_names);
  write_text(out / "report.json", js);
  std::cout << js << "\n";
  return 0;
}

int run_analyze(const CommonArgs& common, const std::string& corpus_flag,
                const std::string& checkpoint_path) {
  KeyValueConfig cfg = layered_config(common);
  fs::path out = resolve_out_dir(common, "analyze");
  if (checkpoint_path.empty()) throw ConfigError("--checkpoint is required");

  LoadedSplits loaded = load_and_split(cfg, corpus_flag);
  CheckpointState state = CheckpointState::load(checkpoint_path);

  bool use_label = cfg.get_bool("eval.use_doc_label", true);
  bool by_gold = cfg.get_bool("eval.group_by_gold", false);
  AttentionReport att =
      attention_report(state.eval_params(), loaded.split.test, use_label, by_gold);
  Mat sim = strategy_similarity(state.eval_params());

  write_text(out / "resolved_config.cfg", cfg.serialize());
  write_text(out / "attention.json",
             attention_report_to_json(att, loaded.full.strategy_names));
  write_text(out / "similarity.json",
             similarity_to_json(sim, loaded.full.strategy_names));
  std::cerr << "[analyze] content_mass=" << att.content_mass
            << " strategy_mass=" << att.strategy_mass << "\n";
  return 0;
}

int run_experiment(const CommonArgs& common, const std::string& corpus_flag,
                   const std::string& kind) {
  KeyValueConfig cfg = layered_config(common);
  fs::path out = resolve_out_dir(common, kind);

  CorpusSetup setup = corpus_setup(cfg, corpus_flag);
  Corpus corpus = load_corpus(setup.path, setup.schema, nullptr, setup.min_freq,
                              setup.max_len);
  ExperimentConfig ex = experiment_from_config(cfg);
  int runs = cfg.get_int("experiment.runs", 5);

  ExperimentTable table;
  if (kind == "vary-labeled") {
    std::vector<std::string> counts =
        split_list(cfg.get_string("experiment.counts", "20,50,100,max"));
    table = experiment_vary_labeled(ex, corpus, counts, runs);
  } else if (kind == "ablate") {
    std::vector<double> thresholds;
    for (const std::string& t :
         split_list(cfg.get_string("experiment.thresholds", "0,1.2,2.0")))
      thresholds.push_back(std::stod(t));
    table = ablate_kl_threshold(ex, corpus, thresholds, runs);
  } else {  // vary-unlabeled
    std::vector<int> counts;
    for (const std::string& c :
         split_list(cfg.get_string("experiment.unlabeled_counts", "0,500,2000")))
      counts.push_back(std::stoi(c));
    table = experiment_vary_unlabeled(ex, corpus, counts, runs);
  }

  KeyValueConfig resolved = cfg;
  fill_corpus_keys(resolved, setup, ex.split, ex.split_seed);
  resolved.set("experiment.runs", std::to_string(runs));
  write_text(out / "resolved_config.cfg", resolved.serialize());
  std::string js = experiment_table_to_json(table);
  write_text(out / "table.json", js);
  std::cout << js << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"weakly supervised sentence-strategy VAE"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string corpus_flag, checkpoint_flag;
  std::optional<int> labeled_docs;
  std::optional<double> alpha, kl_threshold;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<std::string> mode;
  std::string resume_from;
  std::optional<int> resume_epochs;

  auto add_train_flags = [&](CLI::App* sub) {
    sub->add_option("--corpus", corpus_flag, "corpus JSON-lines file");
    sub->add_option("--labeled-docs", labeled_docs,
                    "visible labeled documents in the train split");
    sub->add_option("--alpha", alpha, "discriminative weight");
    sub->add_option("--kl-threshold", kl_threshold, "free-bits floor on KL(y)");
    sub->add_option("--seed", seed, "training seed");
    sub->add_option("--epochs", epochs, "training epochs");
    sub->add_option("--mode", mode, "ws|svae|supervised");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(synth, common);
  synth->add_option("--seed", seed, "generator seed");

  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  add_common(train_cmd, common);
  add_train_flags(train_cmd);
  train_cmd->add_option("--resume", resume_from, "checkpoint to continue from");
  train_cmd->add_option("--resume-epochs", resume_epochs,
                        "additional epochs when resuming");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--corpus", corpus_flag, "corpus JSON-lines file");
  eval_cmd->add_option("--checkpoint", checkpoint_flag, "checkpoint file");

  CLI::App* analyze = app.add_subcommand("analyze", "attention and similarity reports");
  add_common(analyze, common);
  analyze->add_option("--corpus", corpus_flag, "corpus JSON-lines file");
  analyze->add_option("--checkpoint", checkpoint_flag, "checkpoint file");

  CLI::App* ablate = app.add_subcommand("ablate", "KL-threshold ablation");
  add_common(ablate, common);
  ablate->add_option("--corpus", corpus_flag, "corpus JSON-lines file");

  CLI::App* vary_labeled =
      app.add_subcommand("vary-labeled", "macro-F1 vs labeled document count");
  add_common(vary_labeled, common);
  vary_labeled->add_option("--corpus", corpus_flag, "corpus JSON-lines file");

  CLI::App* vary_unlabeled =
      app.add_subcommand("vary-unlabeled", "macro-F1 vs unlabeled document count");
  add_common(vary_unlabeled, common);
  vary_unlabeled->add_option("--corpus", corpus_flag, "corpus JSON-lines file");

  std::vector<const char*> argv;
  argv.push_back("wsvae");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  // Sugar flags get folded into the key-value overrides so the resolved
  // config reflects them.
  if (labeled_docs) common.sets.push_back("train.labeled_docs=" + std::to_string(*labeled_docs));
  if (alpha) {
    std::ostringstream os;
    os.precision(17);
    os << *alpha;
    common.sets.push_back("train.alpha=" + os.str());
  }
  if (kl_threshold) {
    std::ostringstream os;
    os.precision(17);
    os << *kl_threshold;
    common.sets.push_back("train.kl_threshold=" + os.str());
  }
  if (seed) {
    common.sets.push_back("train.seed=" + std::to_string(*seed));
    common.sets.push_back("synth.seed=" + std::to_string(*seed));
  }
  if (epochs) common.sets.push_back("train.epochs=" + std::to_string(*epochs));
  if (mode) common.sets.push_back("train.mode=" + *mode);

  try {
    if (synth->parsed()) return run_synth(common);
    if (train_cmd->parsed()) {
      if (!resume_from.empty()) {
        KeyValueConfig cfg = layered_config(common);
        fs::path out = resolve_out_dir(common, "train");
        LoadedSplits loaded = load_and_split(cfg, corpus_flag);
        Corpus train_corpus = loaded.split.train;
        CheckpointState resumed =
            resume(resume_from, resume_epochs.value_or(1), train_corpus,
                   loaded.split.dev);
        resumed.save((out / "checkpoint.bin").string());
        write_metrics_jsonl(resumed.history, (out / "metrics.jsonl").string());
        write_text(out / "resolved_config.cfg",
                   resumed.config.to_config().serialize());
        return 0;
      }
      return run_train(common, corpus_flag);
    }
    if (eval_cmd->parsed()) return run_eval(common, corpus_flag, checkpoint_flag);
    if (analyze->parsed()) return run_analyze(common, corpus_flag, checkpoint_flag);
    if (ablate->parsed()) return run_experiment(common, corpus_flag, "ablate");
    if (vary_labeled->parsed())
      return run_experiment(common, corpus_flag, "vary-labeled");
    if (vary_unlabeled->parsed())
      return run_experiment(common, corpus_flag, "vary-unlabeled");
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::cerr << "error [config]: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error [corpus]: " << e.what() << "\n";
    return 1;
  } catch (const SchemaError& e) {
    std::cerr << "error [corpus]: " << e.what() << "\n";
    return 1;
  } catch (const TrainError& e) {
    std::cerr << "error [trainer]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace wsvae::cli
