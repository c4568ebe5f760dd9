#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ontorel/common.hpp"
#include "ontorel/path_reasoner.hpp"

namespace ontorel {

// Half-open token-index range.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool contains(std::size_t t) const { return t >= begin && t < end; }
  bool overlaps(const Span& other) const {
    return begin < other.end && other.begin < end;
  }
  auto operator<=>(const Span&) const = default;
};

struct SentenceInstance {
  std::vector<std::string> tokens;
  Span head_span, tail_span;
  std::string head_cui, tail_cui;
  std::string gold_relation;  // "NA" when no relation applies

  void validate() const;  // throws DataError on span violations
};

// Lowercased, split on any non-alphanumeric character.
std::vector<std::string> tokenize(std::string_view sentence);

struct TokenSpan {
  std::string text;
  std::size_t char_begin, char_end;
};
std::vector<TokenSpan> tokenize_with_offsets(std::string_view sentence);

enum class PositionCategory : std::uint8_t { Head = 0, Tail = 1, Other = 2 };

PositionCategory position_category(std::size_t t, const Span& head_span,
                                   const Span& tail_span);

// Deterministic, platform-independent character-n-gram embedding with unit
// norm. Stands in for a contextual encoder at desk scale.
std::vector<double> hashed_embed(std::string_view text, std::size_t dimension);

// Text -> vector lookup: either a loaded cache (externally computed
// embeddings, GloVe-style files) or pure hashed fallback. Lookups missing
// from a cache fall back to hashed embeddings of the same dimension.
class EmbeddingBackend {
 public:
  static EmbeddingBackend hashed(std::size_t dimension);
  // Records: key<TAB>v1 v2 ... vD (space-separated key also accepted for
  // single-token keys, GloVe-style).
  static EmbeddingBackend load_cache(std::istream& in);
  static EmbeddingBackend load_cache_file(const std::filesystem::path& path);

  std::size_t dimension() const { return dimension_; }
  bool cache_backed() const { return cache_backed_; }
  std::size_t cache_size() const { return cache_.size(); }
  bool contains(const std::string& key) const { return cache_.count(key) != 0; }

  std::vector<double> embed(const std::string& text) const;

 private:
  std::size_t dimension_ = 0;
  bool cache_backed_ = false;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

// Learned 3-row position table (head/tail/other), d_p columns.
struct PositionTable {
  std::size_t dim = 0;
  std::vector<double> data;  // 3 x dim, row-major

  static PositionTable zeros(std::size_t dim);
  const double* row(PositionCategory cat) const {
    return data.data() + static_cast<std::size_t>(cat) * dim;
  }
  double* row(PositionCategory cat) {
    return data.data() + static_cast<std::size_t>(cat) * dim;
  }
};

// Per-token [word ; position] vectors, dimension word_dim + position_dim.
struct EncodedSentence {
  std::size_t token_count = 0;
  std::size_t dim = 0;
  std::vector<double> data;  // token_count x dim, row-major
  Span head_span, tail_span;

  const double* row(std::size_t t) const { return data.data() + t * dim; }
};

EncodedSentence encode_sentence(const SentenceInstance& instance,
                                const EmbeddingBackend& words,
                                const PositionTable& positions);

// [sum over plain-path encodings ; sum over axiom-path encodings], dimension
// 2 * backend dimension. Empty path sets contribute zero blocks. mean_pool
// divides each block by its path count.
std::vector<double> encode_symbolic(const SymbolicContext& context,
                                    const EmbeddingBackend& backend,
                                    bool mean_pool = false);

}  // namespace ontorel
