#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ontorel/encoder.hpp"
#include "ontorel/path_reasoner.hpp"

namespace ontorel {

// Ordered relation label list (including "NA") with one encoded row per
// label. Row i encodes the verbalized form of label i.
struct RelationVocabulary {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> encoded;  // |R| x d_enc

  std::size_t size() const { return labels.size(); }
  std::optional<std::size_t> index_of(const std::string& label) const;
};

RelationVocabulary encode_relations(const std::vector<std::string>& labels,
                                    const EmbeddingBackend& backend);

enum class BiasMode : std::uint8_t { OneHot, Full };

const char* bias_mode_name(BiasMode mode);
std::optional<BiasMode> bias_mode_from_name(std::string_view name);

struct BiasResult {
  std::vector<double> bias;  // |R|
  std::optional<std::size_t> best_relation;
  double best_similarity = 0.0;
  BiasMode mode = BiasMode::OneHot;
  double weight = 0.0;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Encodes the joined verbalization of every surviving path (one backend
// call) and scores it against each relation row. OneHot puts weight*max at
// the argmax (ties -> lowest index); Full sets entry r to weight*cos_r. An
// empty context yields an all-zero bias.
BiasResult bias_score(const RelationVocabulary& vocab,
                      const SymbolicContext& context,
                      const EmbeddingBackend& backend, BiasMode mode,
                      double weight);

// softmax(logits + bias), max-subtracted. Throws DataError on non-finite
// input or length mismatch.
std::vector<double> predict(std::span<const double> logits,
                            std::span<const double> bias);

std::vector<double> softmax(std::span<const double> scores);

// Counts gold probabilities clamped at the floor during loss computation.
struct ClampCounter {
  std::atomic<std::uint64_t> count{0};
};

inline constexpr double kProbabilityFloor = 1e-12;

double nll_loss(std::span<const double> probabilities, std::size_t gold_index,
                ClampCounter* clamps = nullptr);

}  // namespace ontorel
