#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace wsvae {

/// Raised for malformed corpus files; message carries the line number.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised for records that parse but violate the corpus schema.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Token table with fixed reserved ids. Non-reserved entries are bijective.
struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumReserved = 4;

  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, int> token_to_id;

  Vocab();
  int size() const { return static_cast<int>(id_to_token.size()); }
  int lookup(const std::string& token) const;  // kUnk when missing
  int add(const std::string& token);
  std::uint64_t hash() const;
};

/// Lowercases and splits on whitespace; punctuation becomes its own token.
std::vector<std::string> tokenize(const std::string& text);

struct Sentence {
  std::vector<int> tokens;  // content token ids, no boundary markers
  std::string raw_text;
  std::optional<int> strategy;       // visible gold label, absent if unlabeled
  std::optional<int> gold_strategy;  // held-back label for evaluation only

  bool labeled() const { return strategy.has_value(); }
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
  int doc_label = 0;

  bool fully_labeled() const;
  bool fully_unlabeled() const;
};

struct CorpusSchema {
  int num_strategies = 0;
  int num_doc_labels = 0;
  std::vector<std::string> strategy_names;  // optional; defaults to class_<k>
};

struct Corpus {
  std::vector<Document> documents;
  int num_strategies = 0;
  int num_doc_labels = 0;
  std::vector<std::string> strategy_names;
  Vocab vocab;

  std::size_t size() const { return documents.size(); }
  std::vector<std::size_t> labeled_doc_indices() const;    // fully labeled
  std::vector<std::size_t> unlabeled_doc_indices() const;  // at least one unlabeled sentence
  std::size_t labeled_sentence_count() const;
};

/// Reads a JSON-lines corpus (one document object per line). When
/// shared_vocab is null a vocabulary is built from the file's text with the
/// given frequency cutoff; otherwise the provided table is reused.
Corpus load_corpus(const std::string& path, const CorpusSchema& schema,
                   const Vocab* shared_vocab = nullptr, int min_token_freq = 2,
                   int max_sentence_tokens = 64);

/// Writes the visible labels. With gold=true, writes gold labels instead
/// (the ".gold.jsonl" side file convention).
void write_corpus(const Corpus& corpus, const std::string& path,
                  bool gold = false);

struct SplitCounts {
  int train = 0;
  int dev = 0;
  int test = 0;
};

struct SplitResult {
  Corpus train;
  Corpus dev;
  Corpus test;
};

/// Partitions documents. Only fully labeled documents are eligible for
/// dev/test; labeled documents beyond the requested counts are masked to
/// unlabeled (gold kept out-of-band) and assigned to train together with all
/// unlabeled documents.
SplitResult split_corpus(const Corpus& corpus, const SplitCounts& counts,
                         std::uint64_t seed);

/// Cohen's kappa between two equal-length annotations.
double cohens_kappa(const std::vector<int>& labels_a,
                    const std::vector<int>& labels_b);

struct SynthConfig {
  int num_strategies = 4;
  int num_doc_labels = 2;
  int keywords_per_strategy = 8;
  int shared_tokens = 18;
  int num_documents = 2000;
  int min_sentences = 2;
  int max_sentences = 6;
  int min_tokens = 4;
  int max_tokens = 10;
  double keyword_fraction = 0.6;  // per-sentence share of strategy tokens
  Eigen::VectorXd strategy_weights;  // unnormalized; default non-uniform
  std::vector<int> designated_strategies = {0, 1};
  int designated_threshold = 2;  // doc label 1 iff designated count >= this
  double labeled_fraction = 0.2;
  std::uint64_t seed = 1;

  int vocab_content_tokens() const {
    return num_strategies * keywords_per_strategy + shared_tokens;
  }
};

/// Generates a corpus where every sentence keeps its sampled strategy in
/// gold_strategy; only a labeled_fraction of documents expose sentence labels.
Corpus synth_generate(const SynthConfig& cfg);

struct LabelStats {
  Eigen::VectorXi counts;
  Eigen::VectorXd proportions;
};

/// Counts visible sentence labels; unlabeled sentences are excluded.
LabelStats label_stats(const Corpus& corpus);

}  // namespace wsvae
