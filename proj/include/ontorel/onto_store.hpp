#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ontorel/common.hpp"

namespace ontorel {

using ConceptId = std::string;

struct Concept {
  ConceptId id;
  std::string preferred_label;
  std::string cui;  // empty = no CUI
  std::string source_ontology;
};

struct Edge {
  std::uint32_t subject;  // concept index
  std::string predicate_label;
  std::uint32_t object;
};

enum class AxiomKind : std::uint8_t {
  SubClassOf,
  EquivalentTo,
  ExistentialRestriction,
  UniversalRestriction,
  IntersectionMember,
  UnionMember,
};

const char* axiom_kind_name(AxiomKind kind);  // sub/equiv/some/only/and/or

struct Axiom {
  AxiomKind kind;
  std::uint32_t subject;
  std::string property_label;  // required for restrictions, empty otherwise
  std::uint32_t object;
};

enum class Quantifier : std::uint8_t { None, Some, Only };

// One traversable label. Quantifiers render as a "some"/"only" prefix and the
// inverse marker as a "(inverse)" suffix when verbalized.
struct StepLabel {
  std::string text;
  Quantifier quantifier = Quantifier::None;
  bool inverse = false;

  auto operator<=>(const StepLabel&) const = default;
};

std::string verbalize_label(const StepLabel& label);

// A single traversal move between two concepts. Plain edges carry one label;
// an axiom step may carry two (the quantified pair counts as one hop).
struct GraphStep {
  std::vector<StepLabel> labels;
  std::uint32_t target;
  bool axiomatic;

  auto operator<=>(const GraphStep&) const = default;
};

enum class Direction : std::uint8_t { Out, In, Both };

struct Neighbor {
  std::string predicate_label;
  ConceptId concept;
  bool inverse;  // reached through the edge's object side
};

struct AxiomStep {
  std::vector<StepLabel> labels;
  ConceptId target;
};

struct OntologyStats {
  std::size_t concept_count = 0;
  std::size_t property_count = 0;
  std::size_t max_subclass_depth = 0;
};

// Immutable merged symbolic knowledge: concepts, labeled edges, axioms and a
// CUI index. Construction goes through OntologyBuilder; once built the graph
// is safe for unlimited concurrent readers.
class OntologyGraph {
 public:
  std::size_t concept_count() const { return concepts_.size(); }
  const std::vector<Concept>& concepts() const { return concepts_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Axiom>& axioms() const { return axioms_; }
  const OntologyStats& stats() const { return stats_; }

  bool has_concept(const ConceptId& id) const;
  std::uint32_t index_of(const ConceptId& id) const;  // throws DataError
  std::optional<std::uint32_t> find(const ConceptId& id) const;
  const Concept& concept(std::uint32_t index) const { return concepts_[index]; }

  // All concept ids carrying the given CUI, in id order. Empty when absent.
  std::vector<ConceptId> resolve_cui(const std::string& cui) const;
  std::vector<std::uint32_t> resolve_cui_indices(const std::string& cui) const;

  // Plain-edge adjacency; inverse traversals are flagged.
  std::vector<Neighbor> neighbors(const ConceptId& id, Direction dir) const;

  // Axiom adjacency with the concept as subject or object.
  std::vector<AxiomStep> axiom_steps(const ConceptId& id) const;

  // Every traversal move (plain + axiom, both directions) from a concept.
  // Precomputed at build time; this is what the path reasoner walks.
  const std::vector<GraphStep>& steps_from(std::uint32_t index) const {
    return steps_[index];
  }

  // FNV digest of the canonical serialization; keys derived caches.
  std::uint64_t digest() const { return digest_; }

 private:
  friend class OntologyBuilder;

  std::vector<Concept> concepts_;
  std::vector<Edge> edges_;
  std::vector<Axiom> axioms_;
  std::unordered_map<std::string, std::uint32_t> id_index_;
  std::map<std::string, std::vector<std::uint32_t>> cui_index_;
  std::vector<std::vector<std::uint32_t>> out_edges_;
  std::vector<std::vector<std::uint32_t>> in_edges_;
  std::vector<std::vector<GraphStep>> steps_;
  OntologyStats stats_;
  std::uint64_t digest_ = 0;
};

class OntologyBuilder {
 public:
  void add_concept(Concept c);
  void add_edge(const ConceptId& subject, std::string predicate,
                const ConceptId& object);
  void add_axiom(AxiomKind kind, const ConceptId& subject,
                 std::string property, const ConceptId& object);

  // Validates references, builds indexes and stats. The builder is spent
  // afterwards.
  OntologyGraph build();

 private:
  struct PendingEdge {
    ConceptId subject, object;
    std::string predicate;
  };
  struct PendingAxiom {
    AxiomKind kind;
    ConceptId subject, object;
    std::string property;
  };
  std::vector<Concept> concepts_;
  std::unordered_map<std::string, std::uint32_t> id_index_;
  std::vector<PendingEdge> edges_;
  std::vector<PendingAxiom> axioms_;
};

enum class OntologyFormat : std::uint8_t { Triples, AxiomJson };

// Line-oriented exchange format:
//   C <id> <cui-or-"-"> <preferred label...>
//   E <subject-id> <predicate-label> <object-id>
//   A <kind> <subject-id> <property-label-or-"-"> <object-id>
// with kind in {sub, equiv, some, only, and, or}; '#' starts a comment.
// AxiomJson is one object per line with the same fields.
OntologyGraph parse_ontology(std::istream& in, OntologyFormat format,
                             const std::string& source_name);
OntologyGraph parse_ontology_text(const std::string& text, OntologyFormat format,
                                  const std::string& source_name);
OntologyGraph parse_ontology_file(const std::filesystem::path& path,
                                  OntologyFormat format);

// Canonical form: concepts sorted by id, then edges, then axioms.
void serialize_ontology(const OntologyGraph& graph, std::ostream& out);
std::string serialize_ontology_text(const OntologyGraph& graph);

// Unifies concepts sharing a CUI (within and across inputs) into one node;
// concepts without a CUI stay distinct. Duplicate edges/axioms collapse.
OntologyGraph merge_graphs(const std::vector<const OntologyGraph*>& graphs);
OntologyGraph merge_graphs(const std::vector<OntologyGraph>& graphs);

}  // namespace ontorel
