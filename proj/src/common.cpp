#include "ontorel/common.hpp"

#include <cctype>

namespace ontorel {

namespace {

// UTF-8 sequences for the set-operator glyphs used in axiom step labels.
constexpr std::string_view kIntersectionGlyph = "\xe2\x8a\x93";  // U+2293
constexpr std::string_view kUnionGlyph = "\xe2\x8a\x94";         // U+2294

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

std::vector<std::string> split_label_words(std::string_view label) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      words.push_back(to_lower(current));
      current.clear();
    }
  };
  for (std::size_t i = 0; i < label.size();) {
    if (label.compare(i, kIntersectionGlyph.size(), kIntersectionGlyph) == 0) {
      flush();
      words.emplace_back("intersection");
      i += kIntersectionGlyph.size();
      continue;
    }
    if (label.compare(i, kUnionGlyph.size(), kUnionGlyph) == 0) {
      flush();
      words.emplace_back("union");
      i += kUnionGlyph.size();
      continue;
    }
    unsigned char c = static_cast<unsigned char>(label[i]);
    if (!is_word_char(c)) {
      flush();
      ++i;
      continue;
    }
    // camelCase boundary: lower-or-digit followed by upper, or an upper run
    // ending before a lower ("ADRNode" -> "adr", "node").
    if (!current.empty() && std::isupper(c)) {
      unsigned char prev = static_cast<unsigned char>(current.back());
      bool next_lower = i + 1 < label.size() &&
                        std::islower(static_cast<unsigned char>(label[i + 1]));
      if (!std::isupper(prev) || next_lower) flush();
    }
    current.push_back(static_cast<char>(c));
    ++i;
  }
  flush();
  return words;
}

std::string label_to_words(std::string_view label) {
  std::string out;
  for (const auto& w : split_label_words(label)) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

}  // namespace ontorel
