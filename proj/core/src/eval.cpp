#include "wsvae/eval.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace wsvae {

using nlohmann::json;

std::pair<double, Vec> macro_f1(const std::vector<int>& preds,
                                const std::vector<int>& golds, int k) {
  if (preds.size() != golds.size())
    throw std::invalid_argument("macro_f1: length mismatch");
  if (preds.empty()) throw std::invalid_argument("macro_f1: empty input");

  Vec tp = Vec::Zero(k), pred_count = Vec::Zero(k), gold_count = Vec::Zero(k);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] >= k || golds[i] < 0 || golds[i] >= k)
      throw std::invalid_argument("macro_f1: label outside [0, K)");
    pred_count[preds[i]] += 1.0;
    gold_count[golds[i]] += 1.0;
    if (preds[i] == golds[i]) tp[preds[i]] += 1.0;
  }

  Vec f1 = Vec::Zero(k);
  for (int c = 0; c < k; ++c) {
    double p = pred_count[c] > 0 ? tp[c] / pred_count[c] : 0.0;
    double r = gold_count[c] > 0 ? tp[c] / gold_count[c] : 0.0;
    f1[c] = (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return {f1.mean(), f1};
}

double doc_accuracy(const std::vector<int>& preds,
                    const std::vector<int>& golds) {
  if (preds.size() != golds.size())
    throw std::invalid_argument("doc_accuracy: length mismatch");
  if (preds.empty()) throw std::invalid_argument("doc_accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

Eigen::MatrixXi confusion_matrix(const std::vector<int>& preds,
                                 const std::vector<int>& golds, int k) {
  if (preds.size() != golds.size())
    throw std::invalid_argument("confusion_matrix: length mismatch");
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < preds.size(); ++i) m(golds[i], preds[i]) += 1;
  return m;
}

namespace {

int argmax_lowest(const Vec& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

std::vector<int> predict_strategies(ModelParams& params, const Corpus& corpus,
                                    bool use_doc_label) {
  std::vector<int> preds;
  for (const Document& d : corpus.documents) {
    std::optional<int> t =
        use_doc_label ? std::optional<int>(d.doc_label) : std::nullopt;
    for (const Sentence& s : d.sentences) {
      SentencePosterior post = encode_sentence(params, s.tokens, t);
      preds.push_back(argmax_lowest(post.y_probs.probs));
    }
  }
  return preds;
}

std::vector<std::pair<Vec, Vec>> document_latents(ModelParams& params,
                                                  const Document& doc,
                                                  std::optional<int> doc_label) {
  std::vector<std::pair<Vec, Vec>> pairs;
  ag::Tape tape;
  ag::Var label_emb = doc_label_embedding_node(tape, params, doc_label);
  for (const Sentence& s : doc.sentences) {
    ag::Var enc = encode_tokens_node(tape, params, s.tokens);
    ag::Var y = tape.softmax(y_logits_node(tape, params, enc, label_emb));
    ag::Var mix = strategy_mix_node(tape, params, y);
    ZHeadNodes zp = z_params_node(tape, params, enc, mix, label_emb);
    pairs.emplace_back(tape.value(y), tape.value(zp.mu));
  }
  return pairs;
}

std::vector<int> predict_doc_labels(ModelParams& params, const Corpus& corpus) {
  std::vector<int> preds;
  for (const Document& d : corpus.documents) {
    DocPrediction pred =
        predict_document(params, document_latents(params, d, std::nullopt));
    preds.push_back(argmax_lowest(pred.t_probs.probs));
  }
  return preds;
}

MetricsReport evaluate_corpus(ModelParams& params, const Corpus& corpus,
                              bool use_doc_label) {
  std::vector<int> golds;
  for (const Document& d : corpus.documents) {
    for (const Sentence& s : d.sentences) {
      std::optional<int> y = s.gold_strategy ? s.gold_strategy : s.strategy;
      if (!y)
        throw std::invalid_argument(
            "evaluate_corpus: sentence without gold strategy");
      golds.push_back(*y);
    }
  }
  std::vector<int> preds = predict_strategies(params, corpus, use_doc_label);

  MetricsReport report;
  auto [macro, per_class] = macro_f1(preds, golds, corpus.num_strategies);
  report.macro_f1 = macro;
  report.per_class_f1 = per_class;
  report.confusion = confusion_matrix(preds, golds, corpus.num_strategies);

  std::vector<int> doc_golds, doc_preds;
  for (const Document& d : corpus.documents) doc_golds.push_back(d.doc_label);
  doc_preds = predict_doc_labels(params, corpus);
  report.doc_accuracy = doc_accuracy(doc_preds, doc_golds);
  return report;
}

AttentionReport attention_report(ModelParams& params, const Corpus& corpus,
                                 bool use_doc_label, bool group_by_gold) {
  if (corpus.documents.empty())
    throw std::invalid_argument("attention_report: empty corpus");

  int k = corpus.num_strategies;
  Vec strategy_sum = Vec::Zero(k);
  Eigen::VectorXi strategy_count = Eigen::VectorXi::Zero(k);
  double content_mass = 0.0, strategy_mass = 0.0;
  int documents = 0;

  for (const Document& d : corpus.documents) {
    std::optional<int> t =
        use_doc_label ? std::optional<int>(d.doc_label) : std::nullopt;
    auto latents = document_latents(params, d, t);
    DocPrediction pred = predict_document(params, latents);

    double doc_strategy = 0.0, doc_content = 0.0;
    for (std::size_t j = 0; j < d.sentences.size(); ++j) {
      double w_strategy = pred.attention[2 * j];
      doc_strategy += w_strategy;
      doc_content += pred.attention[2 * j + 1];

      int cls;
      if (group_by_gold) {
        const Sentence& s = d.sentences[j];
        std::optional<int> y = s.gold_strategy ? s.gold_strategy : s.strategy;
        if (!y)
          throw std::invalid_argument(
              "attention_report: gold grouping needs labeled sentences");
        cls = *y;
      } else {
        cls = argmax_lowest(latents[j].first);
      }
      strategy_sum[cls] += w_strategy;
      strategy_count[cls] += 1;
    }
    strategy_mass += doc_strategy;
    content_mass += doc_content;
    ++documents;
  }

  AttentionReport report;
  report.documents = documents;
  report.content_mass = content_mass / documents;
  report.strategy_mass = strategy_mass / documents;
  report.per_strategy_mean.assign(k, std::nullopt);
  for (int c = 0; c < k; ++c) {
    if (strategy_count[c] > 0)
      report.per_strategy_mean[c] = strategy_sum[c] / strategy_count[c];
  }
  return report;
}

std::string metrics_report_to_json(const MetricsReport& report,
                                   const std::vector<std::string>& class_names) {
  json j;
  j["macro_f1"] = report.macro_f1;
  j["doc_accuracy"] = report.doc_accuracy;
  j["n_runs"] = report.n_runs;
  json per_class = json::object();
  if (report.per_class_f1.size() ==
      static_cast<Eigen::Index>(class_names.size())) {
    for (std::size_t c = 0; c < class_names.size(); ++c)
      per_class[class_names[c]] = report.per_class_f1[c];
  }
  j["per_class_f1"] = per_class;
  if (report.confusion.size() > 0) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < report.confusion.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < report.confusion.cols(); ++c)
        row.push_back(report.confusion(i, c));
      rows.push_back(row);
    }
    j["confusion"] = rows;
  }
  j["mean_macro_f1"] =
      report.mean_macro_f1 ? json(*report.mean_macro_f1) : json(nullptr);
  j["ci95_macro_f1"] =
      report.ci95_macro_f1 ? json(*report.ci95_macro_f1) : json(nullptr);
  return j.dump(2);
}

std::string attention_report_to_json(
    const AttentionReport& report, const std::vector<std::string>& class_names) {
  json j;
  j["documents"] = report.documents;
  j["content_mass"] = report.content_mass;
  j["strategy_mass"] = report.strategy_mass;
  json per = json::object();
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    per[class_names[c]] = report.per_strategy_mean[c]
                              ? json(*report.per_strategy_mean[c])
                              : json(nullptr);
  }
  j["per_strategy_mean_attention"] = per;
  return j.dump(2);
}

std::string similarity_to_json(const Mat& similarity,
                               const std::vector<std::string>& class_names) {
  json j;
  j["classes"] = class_names;
  json rows = json::array();
  for (Eigen::Index i = 0; i < similarity.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < similarity.cols(); ++c)
      row.push_back(similarity(i, c));
    rows.push_back(row);
  }
  j["cosine_similarity"] = rows;
  return j.dump(2);
}

}  // namespace wsvae
