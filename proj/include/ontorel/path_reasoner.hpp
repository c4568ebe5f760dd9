#pragma once

#include <string>
#include <vector>

#include "ontorel/onto_store.hpp"

namespace ontorel {

enum class PathKind : std::uint8_t { Plain, Axiom };

struct PathStep {
  std::vector<StepLabel> labels;
  ConceptId target;
  bool axiomatic;

  auto operator<=>(const PathStep&) const = default;
};

// A cycle-free concept-to-concept route. One step is one hop; an axiom step
// carrying a quantified pair still counts as a single hop.
struct Path {
  PathKind kind = PathKind::Plain;
  ConceptId source, dest;
  std::vector<PathStep> steps;

  std::size_t hop_count() const { return steps.size(); }
  auto operator<=>(const Path&) const = default;
};

std::string verbalize_step(const PathStep& step);

// Step labels split on camelCase/underscores, lowercased; labels within a
// step joined by spaces, steps joined by ", ".
std::string verbalize_path(const Path& path);

// Per-step verbalizations; the order-insensitive multiset of these is the
// dedup key.
std::vector<std::string> path_keywords(const Path& path);

// The same route walked backwards: step order reversed, every label
// direction-flipped (plain labels gain/lose the inverse marker, subClassOf
// and superClassOf swap).
Path reverse_path(const Path& path);

// All cycle-free plain-edge routes (forward or inverse traversals) of at
// most max_hops steps from vs to vo.
std::vector<Path> explore_path(const OntologyGraph& graph, const ConceptId& vs,
                               const ConceptId& vo, int max_hops);

// Routes mixing plain edges and axiom steps, at least one axiom step.
std::vector<Path> explore_symbolic_path(const OntologyGraph& graph,
                                        const ConceptId& vs,
                                        const ConceptId& vo, int max_hops);

// Keeps one representative per keyword multiset: the path with the
// lexicographically smallest verbalization (then fewest hops).
std::vector<Path> dedup_paths(std::vector<Path> paths);

// What the downstream modules consume per path.
struct PathInfo {
  PathKind kind;
  int hop_count;
  std::string verbalization;
  std::string reverse_verbalization;  // same route walked dest -> source

  auto operator<=>(const PathInfo&) const = default;
};

struct SymbolicContext {
  std::string source_cui, dest_cui;
  int max_hops = 0;
  std::vector<PathInfo> plain_paths;  // sorted by (hop_count, verbalization)
  std::vector<PathInfo> axiom_paths;

  bool empty() const { return plain_paths.empty() && axiom_paths.empty(); }
};

// Swaps the pair and uses the reverse verbalizations.
SymbolicContext reversed_view(const SymbolicContext& context);

// At most this many paths survive per (pair, kind): shorter paths first,
// then lexicographic verbalization. Keeps dense ontologies tractable.
inline constexpr std::size_t kMaxPathsPerKind = 64;

// Resolves both CUIs (every candidate concept), unions plain and symbolic
// exploration over all resolved pairs, deduplicates, sorts and caps. An
// unresolvable endpoint yields an empty context, not an error.
SymbolicContext path_generation(const OntologyGraph& graph,
                                const std::string& source_cui,
                                const std::string& dest_cui, int max_hops);

}  // namespace ontorel
