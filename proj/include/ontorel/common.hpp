#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ontorel {

// Base error for everything raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input content (ontology files, caches, datasets).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Inputs that parse but violate a contract (bad ids, shape mismatch, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid user-facing configuration (CLI maps this to exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a64_bytes(const void* data, std::size_t n,
                                   std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

// Seeded RNG with hand-rolled draws so results do not depend on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : gen_() % n; }

  // standard normal via Box-Muller
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Splits an identifier-style label into lowercase words: camelCase boundaries,
// underscores, hyphens and whitespace all separate words. Digits stick to the
// preceding word. A few set-operator glyphs map to words so verbalizations
// stay plain text.
std::vector<std::string> split_label_words(std::string_view label);

// split_label_words joined with single spaces.
std::string label_to_words(std::string_view label);

std::string to_lower(std::string_view s);

}  // namespace ontorel
