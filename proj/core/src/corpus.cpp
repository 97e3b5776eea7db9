#include "wsvae/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace wsvae {

using nlohmann::json;

Vocab::Vocab() {
  id_to_token = {"<pad>", "<unk>", "<s>", "</s>"};
  for (int i = 0; i < kNumReserved; ++i) token_to_id[id_to_token[i]] = i;
}

int Vocab::lookup(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnk : it->second;
}

int Vocab::add(const std::string& token) {
  auto it = token_to_id.find(token);
  if (it != token_to_id.end()) return it->second;
  int id = size();
  id_to_token.push_back(token);
  token_to_id[token] = id;
  return id;
}

std::uint64_t Vocab::hash() const {
  // FNV-1a over tokens in id order.
  std::uint64_t h = 1469598103934665603ull;
  for (const std::string& t : id_to_token) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0x1f;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c) && c != '_') {  // underscore stays word-internal
      flush();
      out.push_back(std::string(1, static_cast<char>(c)));
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

bool Document::fully_labeled() const {
  return std::all_of(sentences.begin(), sentences.end(),
                     [](const Sentence& s) { return s.labeled(); });
}

bool Document::fully_unlabeled() const {
  return std::none_of(sentences.begin(), sentences.end(),
                      [](const Sentence& s) { return s.labeled(); });
}

std::vector<std::size_t> Corpus::labeled_doc_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (documents[i].fully_labeled()) idx.push_back(i);
  }
  return idx;
}

std::vector<std::size_t> Corpus::unlabeled_doc_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (!documents[i].fully_labeled()) idx.push_back(i);
  }
  return idx;
}

std::size_t Corpus::labeled_sentence_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) {
    for (const auto& s : d.sentences) {
      if (s.labeled()) ++n;
    }
  }
  return n;
}

namespace {

std::vector<std::string> default_names(const CorpusSchema& schema) {
  if (!schema.strategy_names.empty()) {
    if (static_cast<int>(schema.strategy_names.size()) != schema.num_strategies)
      throw SchemaError("strategy_names length does not match num_strategies");
    return schema.strategy_names;
  }
  std::vector<std::string> names;
  for (int k = 0; k < schema.num_strategies; ++k)
    names.push_back("class_" + std::to_string(k));
  return names;
}

struct RawDoc {
  std::string doc_id;
  int doc_label;
  std::vector<std::pair<std::string, std::optional<int>>> sentences;
};

RawDoc parse_record(const json& rec, const CorpusSchema& schema, size_t line_no) {
  auto fail = [line_no](const std::string& what) -> SchemaError {
    return SchemaError("line " + std::to_string(line_no) + ": " + what);
  };
  if (!rec.is_object()) throw fail("document record is not an object");
  if (!rec.contains("doc_id") || !rec["doc_id"].is_string())
    throw fail("missing string field 'doc_id'");
  if (!rec.contains("doc_label") || !rec["doc_label"].is_number_integer())
    throw fail("missing integer field 'doc_label'");
  if (!rec.contains("sentences") || !rec["sentences"].is_array())
    throw fail("missing array field 'sentences'");

  RawDoc doc;
  doc.doc_id = rec["doc_id"].get<std::string>();
  doc.doc_label = rec["doc_label"].get<int>();
  if (doc.doc_label < 0 || doc.doc_label >= schema.num_doc_labels)
    throw fail("doc_label " + std::to_string(doc.doc_label) +
               " outside [0, " + std::to_string(schema.num_doc_labels) + ")");
  if (rec["sentences"].empty()) throw fail("document has no sentences");

  for (const auto& s : rec["sentences"]) {
    if (!s.is_object() || !s.contains("text") || !s["text"].is_string())
      throw fail("sentence missing string field 'text'");
    std::optional<int> strategy;
    if (s.contains("strategy") && !s["strategy"].is_null()) {
      if (!s["strategy"].is_number_integer())
        throw fail("sentence 'strategy' must be an integer or null");
      int y = s["strategy"].get<int>();
      if (y < 0 || y >= schema.num_strategies)
        throw fail("strategy " + std::to_string(y) + " outside [0, " +
                   std::to_string(schema.num_strategies) + ")");
      strategy = y;
    }
    doc.sentences.emplace_back(s["text"].get<std::string>(), strategy);
  }
  return doc;
}

}  // namespace

Corpus load_corpus(const std::string& path, const CorpusSchema& schema,
                   const Vocab* shared_vocab, int min_token_freq,
                   int max_sentence_tokens) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file: " + path);

  std::vector<RawDoc> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    raw.push_back(parse_record(rec, schema, line_no));
  }

  Corpus corpus;
  corpus.num_strategies = schema.num_strategies;
  corpus.num_doc_labels = schema.num_doc_labels;
  corpus.strategy_names = default_names(schema);

  if (shared_vocab != nullptr) {
    corpus.vocab = *shared_vocab;
  } else {
    std::map<std::string, int> freq;
    for (const auto& d : raw) {
      for (const auto& [text, strategy] : d.sentences) {
        for (const auto& tok : tokenize(text)) ++freq[tok];
      }
    }
    for (const auto& [tok, n] : freq) {
      if (n >= min_token_freq) corpus.vocab.add(tok);
    }
  }

  std::size_t rec_no = 0;
  for (const auto& d : raw) {
    ++rec_no;
    Document doc;
    doc.doc_id = d.doc_id;
    doc.doc_label = d.doc_label;
    for (const auto& [text, strategy] : d.sentences) {
      Sentence s;
      s.raw_text = text;
      s.strategy = strategy;
      s.gold_strategy = strategy;
      for (const auto& tok : tokenize(text)) {
        if (static_cast<int>(s.tokens.size()) >= max_sentence_tokens) break;
        s.tokens.push_back(corpus.vocab.lookup(tok));
      }
      if (s.tokens.empty())
        throw SchemaError("record " + std::to_string(rec_no) +
                          ": sentence has no tokens after tokenization");
      doc.sentences.push_back(std::move(s));
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& path, bool gold) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& d : corpus.documents) {
    json sentences = json::array();
    for (const auto& s : d.sentences) {
      const std::optional<int>& y = gold ? s.gold_strategy : s.strategy;
      sentences.push_back(
          {{"text", s.raw_text}, {"strategy", y ? json(*y) : json(nullptr)}});
    }
    json rec = {{"doc_id", d.doc_id},
                {"doc_label", d.doc_label},
                {"sentences", sentences}};
    out << rec.dump() << "\n";
  }
}

SplitResult split_corpus(const Corpus& corpus, const SplitCounts& counts,
                         std::uint64_t seed) {
  if (counts.train < 0 || counts.dev < 0 || counts.test < 0)
    throw ConfigError("split_corpus: negative count");
  std::vector<std::size_t> labeled = corpus.labeled_doc_indices();
  std::size_t want = static_cast<std::size_t>(counts.train) + counts.dev + counts.test;
  if (want > labeled.size())
    throw ConfigError("split_corpus: requested " + std::to_string(want) +
                      " labeled documents but corpus has " +
                      std::to_string(labeled.size()));

  std::mt19937_64 gen(seed);
  std::shuffle(labeled.begin(), labeled.end(), gen);

  auto shell = [&corpus]() {
    Corpus c;
    c.num_strategies = corpus.num_strategies;
    c.num_doc_labels = corpus.num_doc_labels;
    c.strategy_names = corpus.strategy_names;
    c.vocab = corpus.vocab;
    return c;
  };
  SplitResult split{shell(), shell(), shell()};

  std::size_t pos = 0;
  for (int i = 0; i < counts.train; ++i)
    split.train.documents.push_back(corpus.documents[labeled[pos++]]);
  for (int i = 0; i < counts.dev; ++i)
    split.dev.documents.push_back(corpus.documents[labeled[pos++]]);
  for (int i = 0; i < counts.test; ++i)
    split.test.documents.push_back(corpus.documents[labeled[pos++]]);

  // Leftover labeled documents stay in train with labels masked.
  for (; pos < labeled.size(); ++pos) {
    Document doc = corpus.documents[labeled[pos]];
    for (auto& s : doc.sentences) s.strategy.reset();
    split.train.documents.push_back(std::move(doc));
  }
  for (std::size_t i : corpus.unlabeled_doc_indices())
    split.train.documents.push_back(corpus.documents[i]);
  return split;
}

double cohens_kappa(const std::vector<int>& labels_a,
                    const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw std::invalid_argument("cohens_kappa: length mismatch");
  if (labels_a.empty()) throw std::invalid_argument("cohens_kappa: empty input");

  double n = static_cast<double>(labels_a.size());
  std::map<int, double> count_a, count_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    count_a[labels_a[i]] += 1.0;
    count_b[labels_b[i]] += 1.0;
    if (labels_a[i] == labels_b[i]) agree += 1.0;
  }
  double po = agree / n;
  double pe = 0.0;
  for (const auto& [label, ca] : count_a) {
    auto it = count_b.find(label);
    if (it != count_b.end()) pe += (ca / n) * (it->second / n);
  }
  if (pe == 1.0) return 1.0;  // both raters degenerate on one label
  return (po - pe) / (1.0 - pe);
}

Corpus synth_generate(const SynthConfig& cfg) {
  if (cfg.num_strategies < 2 || cfg.num_doc_labels < 2)
    throw ConfigError("synth_generate: need K >= 2 and T >= 2");
  if (cfg.min_sentences < 1 || cfg.max_sentences < cfg.min_sentences)
    throw ConfigError("synth_generate: bad sentences-per-doc range");
  if (cfg.min_tokens < 1 || cfg.max_tokens < cfg.min_tokens)
    throw ConfigError("synth_generate: bad tokens-per-sentence range");
  if (cfg.labeled_fraction < 0.0 || cfg.labeled_fraction > 1.0)
    throw ConfigError("synth_generate: labeled_fraction outside [0,1]");
  if (cfg.keyword_fraction < 0.0 || cfg.keyword_fraction > 1.0)
    throw ConfigError("synth_generate: keyword_fraction outside [0,1]");
  if (cfg.keywords_per_strategy < 1 || cfg.shared_tokens < 1)
    throw ConfigError("synth_generate: keyword pools must be non-empty");
  for (int k : cfg.designated_strategies) {
    if (k < 0 || k >= cfg.num_strategies)
      throw ConfigError("synth_generate: designated strategy out of range");
  }

  // Keyword pools are disjoint by construction: kw<k>_<i> vs shared sh<i>.
  std::vector<std::vector<std::string>> pools(cfg.num_strategies);
  for (int k = 0; k < cfg.num_strategies; ++k) {
    for (int i = 0; i < cfg.keywords_per_strategy; ++i)
      pools[k].push_back("kw" + std::to_string(k) + "_" + std::to_string(i));
  }
  std::vector<std::string> shared;
  for (int i = 0; i < cfg.shared_tokens; ++i)
    shared.push_back("sh" + std::to_string(i));

  Eigen::VectorXd weights = cfg.strategy_weights;
  if (weights.size() == 0) {
    weights = Eigen::VectorXd(cfg.num_strategies);
    for (int k = 0; k < cfg.num_strategies; ++k)
      weights[k] = static_cast<double>(cfg.num_strategies - k);  // non-uniform
  }
  if (weights.size() != cfg.num_strategies || (weights.array() <= 0).any())
    throw ConfigError("synth_generate: bad strategy_weights");
  std::discrete_distribution<int> strategy_dist(weights.data(),
                                                weights.data() + weights.size());

  std::mt19937_64 gen(cfg.seed);
  std::uniform_int_distribution<int> sent_count(cfg.min_sentences, cfg.max_sentences);
  std::uniform_int_distribution<int> tok_count(cfg.min_tokens, cfg.max_tokens);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Corpus corpus;
  corpus.num_strategies = cfg.num_strategies;
  corpus.num_doc_labels = cfg.num_doc_labels;
  for (int k = 0; k < cfg.num_strategies; ++k)
    corpus.strategy_names.push_back("strategy_" + std::to_string(k));
  for (const auto& pool : pools)
    for (const auto& t : pool) corpus.vocab.add(t);
  for (const auto& t : shared) corpus.vocab.add(t);

  std::vector<int> designated(cfg.num_strategies, 0);
  for (int k : cfg.designated_strategies) designated[k] = 1;

  for (int d = 0; d < cfg.num_documents; ++d) {
    Document doc;
    doc.doc_id = "synth_" + std::to_string(d);
    bool visible = unit(gen) < cfg.labeled_fraction;
    int m = sent_count(gen);
    int designated_count = 0;
    for (int j = 0; j < m; ++j) {
      int y = strategy_dist(gen);
      designated_count += designated[y];
      int len = tok_count(gen);
      Sentence s;
      std::string text;
      for (int p = 0; p < len; ++p) {
        const std::vector<std::string>& pool =
            unit(gen) < cfg.keyword_fraction ? pools[y] : shared;
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const std::string& tok = pool[pick(gen)];
        if (!text.empty()) text += ' ';
        text += tok;
        s.tokens.push_back(corpus.vocab.lookup(tok));
      }
      s.raw_text = text;
      s.gold_strategy = y;
      if (visible) s.strategy = y;
      doc.sentences.push_back(std::move(s));
    }
    // Bucketed count rule; for T=2 this is "label 1 iff count >= threshold".
    doc.doc_label = std::min(cfg.num_doc_labels - 1,
                             designated_count / cfg.designated_threshold);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

LabelStats label_stats(const Corpus& corpus) {
  LabelStats stats;
  stats.counts = Eigen::VectorXi::Zero(corpus.num_strategies);
  std::size_t total = 0;
  for (const auto& d : corpus.documents) {
    for (const auto& s : d.sentences) {
      if (s.labeled()) {
        stats.counts[*s.strategy] += 1;
        ++total;
      }
    }
  }
  if (total == 0)
    throw std::invalid_argument("label_stats: corpus has no labeled sentences");
  stats.proportions =
      stats.counts.cast<double>() / static_cast<double>(total);
  return stats;
}

}  // namespace wsvae
