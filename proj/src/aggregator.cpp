#include "ontorel/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ontorel {

std::optional<std::size_t> RelationVocabulary::index_of(
    const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return i;
  return std::nullopt;
}

RelationVocabulary encode_relations(const std::vector<std::string>& labels,
                                    const EmbeddingBackend& backend) {
  if (labels.empty()) throw DataError("relation vocabulary must be non-empty");
  std::set<std::string> seen;
  RelationVocabulary vocab;
  vocab.labels = labels;
  vocab.encoded.reserve(labels.size());
  for (const auto& label : labels) {
    if (!seen.insert(label).second)
      throw DataError("duplicate relation label: " + label);
    vocab.encoded.push_back(backend.embed(label_to_words(label)));
  }
  return vocab;
}

const char* bias_mode_name(BiasMode mode) {
  return mode == BiasMode::OneHot ? "onehot" : "full";
}

std::optional<BiasMode> bias_mode_from_name(std::string_view name) {
  if (name == "onehot") return BiasMode::OneHot;
  if (name == "full") return BiasMode::Full;
  return std::nullopt;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DataError("cosine similarity requires equal lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

BiasResult bias_score(const RelationVocabulary& vocab,
                      const SymbolicContext& context,
                      const EmbeddingBackend& backend, BiasMode mode,
                      double weight) {
  if (vocab.size() == 0) throw DataError("relation vocabulary must be non-empty");
  BiasResult result;
  result.mode = mode;
  result.weight = weight;
  result.bias.assign(vocab.size(), 0.0);
  if (context.empty()) return result;  // no path: bias stays zero

  std::string joined;
  auto append = [&](const std::vector<PathInfo>& paths) {
    for (const auto& p : paths) {
      if (!joined.empty()) joined += ", ";
      joined += p.verbalization;
    }
  };
  append(context.plain_paths);
  append(context.axiom_paths);

  auto penc = backend.embed(joined);
  std::size_t best = 0;
  double best_sim = -2.0;
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    double sim = cosine_similarity(penc, vocab.encoded[r]);
    if (mode == BiasMode::Full) result.bias[r] = weight * sim;
    if (sim > best_sim) {
      best_sim = sim;
      best = r;
    }
  }
  result.best_relation = best;
  result.best_similarity = best_sim;
  if (mode == BiasMode::OneHot) result.bias[best] = weight * best_sim;
  return result;
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw DataError("softmax over empty vector");
  double mx = scores[0];
  for (double s : scores) {
    if (!std::isfinite(s)) throw DataError("non-finite input to softmax");
    mx = std::max(mx, s);
  }
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - mx);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

std::vector<double> predict(std::span<const double> logits,
                            std::span<const double> bias) {
  if (logits.size() != bias.size())
    throw DataError("logits and bias must have equal lengths");
  std::vector<double> scores(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) scores[i] = logits[i] + bias[i];
  return softmax(scores);
}

double nll_loss(std::span<const double> probabilities, std::size_t gold_index,
                ClampCounter* clamps) {
  if (gold_index >= probabilities.size())
    throw DataError("gold index out of range");
  double p = probabilities[gold_index];
  if (p < kProbabilityFloor) {
    p = kProbabilityFloor;
    if (clamps) clamps->count.fetch_add(1, std::memory_order_relaxed);
  }
  return -std::log(p);
}

}  // namespace ontorel
