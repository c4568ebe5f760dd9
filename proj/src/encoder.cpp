#include "ontorel/encoder.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>

namespace ontorel {

void SentenceInstance::validate() const {
  if (tokens.empty()) throw DataError("sentence has no tokens");
  auto check = [&](const Span& s, const char* name) {
    if (s.begin >= s.end || s.end > tokens.size())
      throw DataError(std::string(name) + " span out of bounds");
  };
  check(head_span, "head");
  check(tail_span, "tail");
  if (head_span.overlaps(tail_span))
    throw DataError("head and tail spans overlap");
}

std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_offsets(sentence)) out.push_back(std::move(t.text));
  return out;
}

std::vector<TokenSpan> tokenize_with_offsets(std::string_view sentence) {
  std::vector<TokenSpan> out;
  std::size_t start = 0;
  std::string current;
  for (std::size_t i = 0; i <= sentence.size(); ++i) {
    bool word = i < sentence.size() &&
                std::isalnum(static_cast<unsigned char>(sentence[i])) != 0;
    if (word) {
      if (current.empty()) start = i;
      current.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(sentence[i]))));
    } else if (!current.empty()) {
      out.push_back({std::move(current), start, i});
      current.clear();
    }
  }
  return out;
}

PositionCategory position_category(std::size_t t, const Span& head_span,
                                   const Span& tail_span) {
  if (head_span.contains(t)) return PositionCategory::Head;
  if (tail_span.contains(t)) return PositionCategory::Tail;
  return PositionCategory::Other;
}

std::vector<double> hashed_embed(std::string_view text, std::size_t dimension) {
  if (dimension < 1) throw DataError("embedding dimension must be >= 1");
  // Sentinel-padded character trigrams; signed feature hashing, then L2
  // normalization. Integer arithmetic only until accumulation, so the result
  // is identical across platforms.
  std::string padded;
  padded.reserve(text.size() + 2);
  padded.push_back('\x02');
  padded.append(text);
  padded.push_back('\x03');

  std::vector<double> v(dimension, 0.0);
  const std::size_t n = padded.size() < 3 ? padded.size() : 3;
  for (std::size_t i = 0; i + n <= padded.size(); ++i) {
    std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, n));
    std::size_t idx = static_cast<std::size_t>(h % dimension);
    v[idx] += (h >> 63) ? 1.0 : -1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    v[static_cast<std::size_t>(fnv1a64(padded) % dimension)] = 1.0;
    return v;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

EmbeddingBackend EmbeddingBackend::hashed(std::size_t dimension) {
  if (dimension < 1) throw DataError("embedding dimension must be >= 1");
  EmbeddingBackend b;
  b.dimension_ = dimension;
  b.cache_backed_ = false;
  return b;
}

EmbeddingBackend EmbeddingBackend::load_cache(std::istream& in) {
  EmbeddingBackend b;
  b.cache_backed_ = true;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string key;
    std::string values;
    auto tab = line.find('\t');
    if (tab != std::string::npos) {
      key = line.substr(0, tab);
      values = line.substr(tab + 1);
    } else {
      auto space = line.find(' ');
      if (space == std::string::npos)
        throw ParseError("embedding record has no values", line_no);
      key = line.substr(0, space);
      values = line.substr(space + 1);
    }
    if (key.empty()) throw ParseError("embedding record has empty key", line_no);
    std::vector<double> vec;
    std::istringstream vs(values);
    std::string tok;
    while (vs >> tok) {
      double d;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("bad float '" + tok + "'", line_no);
      vec.push_back(d);
    }
    if (vec.empty()) throw ParseError("embedding record has no values", line_no);
    if (b.dimension_ == 0) {
      b.dimension_ = vec.size();
    } else if (vec.size() != b.dimension_) {
      throw ParseError("dimension mismatch: expected " +
                           std::to_string(b.dimension_) + ", got " +
                           std::to_string(vec.size()),
                       line_no);
    }
    b.cache_[key] = std::move(vec);
  }
  if (b.dimension_ == 0) throw DataError("embedding cache is empty");
  return b;
}

EmbeddingBackend EmbeddingBackend::load_cache_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding cache: " + path.string());
  return load_cache(in);
}

std::vector<double> EmbeddingBackend::embed(const std::string& text) const {
  auto it = cache_.find(text);
  if (it != cache_.end()) return it->second;
  return hashed_embed(text, dimension_);
}

PositionTable PositionTable::zeros(std::size_t dim) {
  PositionTable t;
  t.dim = dim;
  t.data.assign(3 * dim, 0.0);
  return t;
}

EncodedSentence encode_sentence(const SentenceInstance& instance,
                                const EmbeddingBackend& words,
                                const PositionTable& positions) {
  instance.validate();
  EncodedSentence enc;
  enc.token_count = instance.tokens.size();
  enc.dim = words.dimension() + positions.dim;
  enc.head_span = instance.head_span;
  enc.tail_span = instance.tail_span;
  enc.data.resize(enc.token_count * enc.dim);
  for (std::size_t t = 0; t < enc.token_count; ++t) {
    auto w = words.embed(instance.tokens[t]);
    double* row = enc.data.data() + t * enc.dim;
    std::memcpy(row, w.data(), w.size() * sizeof(double));
    auto cat = position_category(t, instance.head_span, instance.tail_span);
    std::memcpy(row + words.dimension(), positions.row(cat),
                positions.dim * sizeof(double));
  }
  return enc;
}

std::vector<double> encode_symbolic(const SymbolicContext& context,
                                    const EmbeddingBackend& backend,
                                    bool mean_pool) {
  const std::size_t d = backend.dimension();
  std::vector<double> out(2 * d, 0.0);
  auto accumulate = [&](const std::vector<PathInfo>& paths, std::size_t offset) {
    for (const auto& p : paths) {
      auto v = backend.embed(p.verbalization);
      for (std::size_t i = 0; i < d; ++i) out[offset + i] += v[i];
    }
    if (mean_pool && !paths.empty()) {
      for (std::size_t i = 0; i < d; ++i)
        out[offset + i] /= static_cast<double>(paths.size());
    }
  };
  accumulate(context.plain_paths, 0);
  accumulate(context.axiom_paths, d);
  return out;
}

}  // namespace ontorel
