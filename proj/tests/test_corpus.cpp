#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "wsvae/corpus.hpp"

using namespace wsvae;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "wsvae_corpus_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("tokenize lowercases and splits punctuation") {
  auto toks = tokenize("Hello, World!  two");
  REQUIRE(toks.size() == 5);
  CHECK(toks[0] == "hello");
  CHECK(toks[1] == ",");
  CHECK(toks[2] == "world");
  CHECK(toks[3] == "!");
  CHECK(toks[4] == "two");
  CHECK(tokenize("").empty());
}

TEST_CASE("load_corpus parses records and null strategies") {
  auto path = temp_file("two_line.jsonl");
  write_file(path,
             R"({"doc_id":"a","doc_label":0,"sentences":[{"text":"please help me now","strategy":1}]})"
             "\n"
             R"({"doc_id":"b","doc_label":1,"sentences":[{"text":"please help me now","strategy":null}]})"
             "\n");
  Corpus c = load_corpus(path.string(), {4, 2, {}}, nullptr, 1);
  REQUIRE(c.documents.size() == 2);
  CHECK(c.documents[0].sentences[0].strategy == 1);
  CHECK_FALSE(c.documents[1].sentences[0].labeled());
  CHECK(c.num_strategies == 4);
  CHECK(c.documents[0].sentences[0].tokens.size() == 4);
}

TEST_CASE("load_corpus reports schema errors with the line") {
  auto path = temp_file("bad_strategy.jsonl");
  write_file(path,
             R"({"doc_id":"a","doc_label":0,"sentences":[{"text":"x y","strategy":9}]})"
             "\n");
  try {
    load_corpus(path.string(), {7, 2, {}});
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    CHECK(std::string(e.what()).find("9") != std::string::npos);
  }

  auto path2 = temp_file("bad_json.jsonl");
  write_file(path2, "{not json\n");
  try {
    load_corpus(path2.string(), {7, 2, {}});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  auto path3 = temp_file("empty_doc.jsonl");
  write_file(path3, R"({"doc_id":"a","doc_label":0,"sentences":[]})" "\n");
  CHECK_THROWS_AS(load_corpus(path3.string(), {7, 2, {}}), SchemaError);
}

TEST_CASE("load_corpus accepts bucketed doc labels up to T") {
  // Lender-count buckets [1,2),[2,3),[3,4),[4,inf) mapped to 0..3.
  auto path = temp_file("buckets.jsonl");
  std::ostringstream os;
  for (int bucket = 0; bucket < 4; ++bucket) {
    os << R"({"doc_id":"k)" << bucket << R"(","doc_label":)" << bucket
       << R"(,"sentences":[{"text":"lend a hand","strategy":null}]})" << "\n";
  }
  write_file(path, os.str());
  Corpus c = load_corpus(path.string(), {6, 4, {}}, nullptr, 1);
  CHECK(c.num_doc_labels == 4);
  REQUIRE(c.documents.size() == 4);
  for (int bucket = 0; bucket < 4; ++bucket)
    CHECK(c.documents[bucket].doc_label == bucket);

  auto path2 = temp_file("bucket_overflow.jsonl");
  write_file(path2,
             R"({"doc_id":"k","doc_label":4,"sentences":[{"text":"x y","strategy":null}]})"
             "\n");
  CHECK_THROWS_AS(load_corpus(path2.string(), {6, 4, {}}), SchemaError);
}

TEST_CASE("vocabulary applies the frequency cutoff") {
  auto path = temp_file("freq.jsonl");
  write_file(path,
             R"({"doc_id":"a","doc_label":0,"sentences":[{"text":"common common rare","strategy":null}]})"
             "\n");
  Corpus c = load_corpus(path.string(), {2, 2, {}}, nullptr, 2);
  CHECK(c.vocab.lookup("common") != Vocab::kUnk);
  CHECK(c.vocab.lookup("rare") == Vocab::kUnk);
  CHECK(c.vocab.lookup("absent") == Vocab::kUnk);
}

TEST_CASE("corpus round-trips through write and load") {
  SynthConfig cfg;
  cfg.num_documents = 30;
  cfg.seed = 4;
  cfg.labeled_fraction = 0.5;
  Corpus c = synth_generate(cfg);
  auto path = temp_file("roundtrip.jsonl");
  write_corpus(c, path.string());
  Corpus re = load_corpus(path.string(), {cfg.num_strategies, cfg.num_doc_labels, {}},
                          &c.vocab);
  REQUIRE(re.documents.size() == c.documents.size());
  for (std::size_t i = 0; i < c.documents.size(); ++i) {
    CHECK(re.documents[i].doc_id == c.documents[i].doc_id);
    CHECK(re.documents[i].doc_label == c.documents[i].doc_label);
    REQUIRE(re.documents[i].sentences.size() == c.documents[i].sentences.size());
    for (std::size_t j = 0; j < c.documents[i].sentences.size(); ++j) {
      const Sentence& a = c.documents[i].sentences[j];
      const Sentence& b = re.documents[i].sentences[j];
      CHECK(a.raw_text == b.raw_text);
      CHECK(a.strategy == b.strategy);
      CHECK(a.tokens == b.tokens);
    }
  }
}

TEST_CASE("split_corpus honors counts and determinism") {
  SynthConfig cfg;
  cfg.num_documents = 2000;
  cfg.labeled_fraction = 0.88;  // comfortably above 1700 labeled
  cfg.seed = 10;
  Corpus c = synth_generate(cfg);
  std::size_t labeled = c.labeled_doc_indices().size();
  REQUIRE(labeled >= 1700);

  SplitResult s = split_corpus(c, {900, 400, 400}, 99);
  CHECK(s.train.labeled_doc_indices().size() == 900);
  CHECK(s.dev.documents.size() == 400);
  CHECK(s.test.documents.size() == 400);
  // Every document lands somewhere: leftover labeled are masked into train.
  CHECK(s.train.documents.size() + 800 == c.documents.size());

  SplitResult s2 = split_corpus(c, {900, 400, 400}, 99);
  for (std::size_t i = 0; i < s.dev.documents.size(); ++i)
    CHECK(s.dev.documents[i].doc_id == s2.dev.documents[i].doc_id);

  // Disjointness across the three splits.
  std::set<std::string> seen;
  for (const Corpus* part : {&s.train, &s.dev, &s.test}) {
    for (const Document& d : part->documents) {
      CHECK(seen.insert(d.doc_id).second);
    }
  }

  // Dev and test are fully labeled.
  for (const Document& d : s.dev.documents) CHECK(d.fully_labeled());
  for (const Document& d : s.test.documents) CHECK(d.fully_labeled());
}

TEST_CASE("split_corpus rejects counts beyond the labeled pool") {
  SynthConfig cfg;
  cfg.num_documents = 10;
  cfg.labeled_fraction = 0.35;
  cfg.seed = 3;
  Corpus c = synth_generate(cfg);
  std::size_t labeled = c.labeled_doc_indices().size();
  REQUIRE(labeled < 10);
  CHECK_THROWS_AS(
      split_corpus(c, {static_cast<int>(labeled), 1, 1}, 1), ConfigError);
}

TEST_CASE("cohens_kappa hand-derived cases") {
  CHECK(cohens_kappa({0, 1, 2, 1}, {0, 1, 2, 1}) == doctest::Approx(1.0));
  // p_o = 0.5, marginals (a: two 1s two 0s, b: two 1s two 0s) -> p_e = 0.5.
  CHECK(cohens_kappa({1, 1, 0, 0}, {1, 0, 0, 1}) == doctest::Approx(0.0));
  // Complete disagreement with symmetric marginals.
  CHECK(cohens_kappa({0, 1}, {1, 0}) == doctest::Approx(-1.0));
  CHECK_THROWS(cohens_kappa({0, 1}, {0}));

  // Symmetry on random pairs.
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> a, b;
    int n = 1 + static_cast<int>(gen() % 20);
    for (int i = 0; i < n; ++i) {
      a.push_back(static_cast<int>(gen() % 3));
      b.push_back(static_cast<int>(gen() % 3));
    }
    CHECK(cohens_kappa(a, b) == doctest::Approx(cohens_kappa(b, a)).epsilon(1e-12));
  }

  // Both raters constant on the same label: p_e = 1, perfect agreement.
  CHECK(cohens_kappa({1, 1, 1}, {1, 1, 1}) == doctest::Approx(1.0));
}

TEST_CASE("synth_generate is deterministic and honors the label rule") {
  SynthConfig cfg;
  cfg.num_documents = 60;
  cfg.seed = 21;
  Corpus a = synth_generate(cfg);
  Corpus b = synth_generate(cfg);
  auto pa = temp_file("synth_a.jsonl");
  auto pb = temp_file("synth_b.jsonl");
  write_corpus(a, pa.string());
  write_corpus(b, pb.string());
  CHECK(read_file(pa) == read_file(pb));  // byte-identical

  // Gold side file carries every label.
  auto pg = temp_file("synth_a.gold.jsonl");
  write_corpus(a, pg.string(), /*gold=*/true);
  Corpus gold = load_corpus(pg.string(), {cfg.num_strategies, cfg.num_doc_labels, {}},
                            &a.vocab);
  for (const Document& d : gold.documents) CHECK(d.fully_labeled());

  // Label rule: label 1 iff >= threshold designated sentences.
  for (const Document& d : a.documents) {
    int designated = 0;
    for (const Sentence& s : d.sentences) {
      REQUIRE(s.gold_strategy.has_value());
      if (*s.gold_strategy == 0 || *s.gold_strategy == 1) ++designated;
    }
    CHECK(d.doc_label == (designated >= cfg.designated_threshold ? 1 : 0));
  }

  SynthConfig all_labeled = cfg;
  all_labeled.labeled_fraction = 1.0;
  Corpus c = synth_generate(all_labeled);
  CHECK(c.unlabeled_doc_indices().empty());

  SynthConfig overlap = cfg;
  overlap.keywords_per_strategy = 0;
  CHECK_THROWS_AS(synth_generate(overlap), ConfigError);
}

TEST_CASE("synthetic corpus is identifiable by keyword frequencies") {
  SynthConfig cfg;
  cfg.num_documents = 400;
  cfg.labeled_fraction = 1.0;
  cfg.seed = 17;
  Corpus c = synth_generate(cfg);

  // Train a per-class token-frequency classifier on the first 300 documents,
  // evaluate on the rest.
  int k = cfg.num_strategies;
  std::vector<std::map<int, double>> counts(k);
  std::vector<double> totals(k, 1.0);
  for (std::size_t i = 0; i < 300; ++i) {
    for (const Sentence& s : c.documents[i].sentences) {
      for (int tok : s.tokens) {
        counts[*s.strategy][tok] += 1.0;
        totals[*s.strategy] += 1.0;
      }
    }
  }
  std::vector<int> preds, golds;
  for (std::size_t i = 300; i < c.documents.size(); ++i) {
    for (const Sentence& s : c.documents[i].sentences) {
      double best = -1e300;
      int arg = 0;
      for (int cls = 0; cls < k; ++cls) {
        double score = 0.0;
        for (int tok : s.tokens) {
          auto it = counts[cls].find(tok);
          double p = (it == counts[cls].end() ? 0.5 : it->second + 0.5) / totals[cls];
          score += std::log(p);
        }
        if (score > best) {
          best = score;
          arg = cls;
        }
      }
      preds.push_back(arg);
      golds.push_back(*s.strategy);
    }
  }
  double correct_per_class[8] = {0};
  double pred_per_class[8] = {0};
  double gold_per_class[8] = {0};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    pred_per_class[preds[i]] += 1;
    gold_per_class[golds[i]] += 1;
    if (preds[i] == golds[i]) correct_per_class[preds[i]] += 1;
  }
  double macro = 0.0;
  for (int cls = 0; cls < k; ++cls) {
    double p = pred_per_class[cls] > 0 ? correct_per_class[cls] / pred_per_class[cls] : 0;
    double r = gold_per_class[cls] > 0 ? correct_per_class[cls] / gold_per_class[cls] : 0;
    macro += (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  macro /= k;
  CHECK(macro > 0.9);
}

TEST_CASE("label_stats counts visible labels only") {
  SynthConfig cfg;
  cfg.num_documents = 5;
  cfg.seed = 6;
  cfg.labeled_fraction = 1.0;
  Corpus c = synth_generate(cfg);
  c.num_strategies = 3;
  c.documents.resize(1);
  c.documents[0].sentences.resize(4);
  for (int i = 0; i < 4; ++i) c.documents[0].sentences[i].tokens = {4};
  c.documents[0].sentences[0].strategy = 0;
  c.documents[0].sentences[1].strategy = 0;
  c.documents[0].sentences[2].strategy = 1;
  c.documents[0].sentences[3].strategy = 2;

  LabelStats stats = label_stats(c);
  CHECK(stats.proportions[0] == doctest::Approx(0.5));
  CHECK(stats.proportions[1] == doctest::Approx(0.25));
  CHECK(stats.proportions[2] == doctest::Approx(0.25));
  CHECK(stats.proportions.sum() == doctest::Approx(1.0));

  // Mixed labeled/unlabeled: proportions over labeled sentences only.
  c.documents[0].sentences[1].strategy.reset();
  c.documents[0].sentences[3].strategy.reset();
  LabelStats mixed = label_stats(c);
  CHECK(mixed.proportions[0] == doctest::Approx(0.5));
  CHECK(mixed.proportions[1] == doctest::Approx(0.5));
  CHECK(mixed.proportions[2] == doctest::Approx(0.0));

  // All one class.
  c.documents[0].sentences[1].strategy = 0;
  c.documents[0].sentences[2].strategy = 0;
  c.documents[0].sentences[3].strategy = 0;
  LabelStats one = label_stats(c);
  CHECK(one.proportions[0] == doctest::Approx(1.0));

  for (auto& s : c.documents[0].sentences) s.strategy.reset();
  CHECK_THROWS(label_stats(c));
}
