#include "ontorel/onto_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ontorel {

namespace {

constexpr std::string_view kIntersectionGlyph = "\xe2\x8a\x93";
constexpr std::string_view kUnionGlyph = "\xe2\x8a\x94";

std::string member_label(AxiomKind kind) {
  std::string s = "memberOf";
  s += kind == AxiomKind::IntersectionMember ? kIntersectionGlyph : kUnionGlyph;
  return s;
}

bool is_restriction(AxiomKind kind) {
  return kind == AxiomKind::ExistentialRestriction ||
         kind == AxiomKind::UniversalRestriction;
}

std::optional<AxiomKind> axiom_kind_from_name(std::string_view name) {
  if (name == "sub") return AxiomKind::SubClassOf;
  if (name == "equiv") return AxiomKind::EquivalentTo;
  if (name == "some") return AxiomKind::ExistentialRestriction;
  if (name == "only") return AxiomKind::UniversalRestriction;
  if (name == "and") return AxiomKind::IntersectionMember;
  if (name == "or") return AxiomKind::UnionMember;
  return std::nullopt;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream ss(line);
  std::string f;
  while (ss >> f) fields.push_back(f);
  return fields;
}

}  // namespace

const char* axiom_kind_name(AxiomKind kind) {
  switch (kind) {
    case AxiomKind::SubClassOf: return "sub";
    case AxiomKind::EquivalentTo: return "equiv";
    case AxiomKind::ExistentialRestriction: return "some";
    case AxiomKind::UniversalRestriction: return "only";
    case AxiomKind::IntersectionMember: return "and";
    case AxiomKind::UnionMember: return "or";
  }
  return "?";
}

std::string verbalize_label(const StepLabel& label) {
  std::string out;
  if (label.quantifier == Quantifier::Some) out = "some ";
  else if (label.quantifier == Quantifier::Only) out = "only ";
  out += label_to_words(label.text);
  if (label.inverse) out += " (inverse)";
  return out;
}

bool OntologyGraph::has_concept(const ConceptId& id) const {
  return id_index_.count(id) != 0;
}

std::uint32_t OntologyGraph::index_of(const ConceptId& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) throw DataError("unknown concept id: " + id);
  return it->second;
}

std::optional<std::uint32_t> OntologyGraph::find(const ConceptId& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<ConceptId> OntologyGraph::resolve_cui(const std::string& cui) const {
  std::vector<ConceptId> out;
  for (auto ix : resolve_cui_indices(cui)) out.push_back(concepts_[ix].id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> OntologyGraph::resolve_cui_indices(
    const std::string& cui) const {
  if (cui.empty()) return {};
  auto it = cui_index_.find(cui);
  if (it == cui_index_.end()) return {};
  return it->second;
}

std::vector<Neighbor> OntologyGraph::neighbors(const ConceptId& id,
                                               Direction dir) const {
  std::uint32_t ix = index_of(id);
  std::vector<Neighbor> out;
  if (dir == Direction::Out || dir == Direction::Both) {
    for (auto e : out_edges_[ix]) {
      out.push_back({edges_[e].predicate_label, concepts_[edges_[e].object].id,
                     false});
    }
  }
  if (dir == Direction::In || dir == Direction::Both) {
    for (auto e : in_edges_[ix]) {
      out.push_back({edges_[e].predicate_label, concepts_[edges_[e].subject].id,
                     true});
    }
  }
  return out;
}

std::vector<AxiomStep> OntologyGraph::axiom_steps(const ConceptId& id) const {
  std::uint32_t ix = index_of(id);
  std::vector<AxiomStep> out;
  for (const auto& step : steps_[ix]) {
    if (!step.axiomatic) continue;
    out.push_back({step.labels, concepts_[step.target].id});
  }
  return out;
}

void OntologyBuilder::add_concept(Concept c) {
  if (c.id.empty()) throw DataError("concept id must be non-empty");
  if (c.preferred_label.empty())
    throw DataError("concept " + c.id + " has an empty preferred label");
  if (id_index_.count(c.id))
    throw DataError("duplicate concept id: " + c.id);
  id_index_.emplace(c.id, static_cast<std::uint32_t>(concepts_.size()));
  concepts_.push_back(std::move(c));
}

void OntologyBuilder::add_edge(const ConceptId& subject, std::string predicate,
                               const ConceptId& object) {
  if (predicate.empty()) throw DataError("edge predicate must be non-empty");
  edges_.push_back({subject, object, std::move(predicate)});
}

void OntologyBuilder::add_axiom(AxiomKind kind, const ConceptId& subject,
                                std::string property, const ConceptId& object) {
  if (is_restriction(kind) && property.empty())
    throw DataError("restriction axiom on " + subject +
                    " requires a property label");
  if (!is_restriction(kind) && !property.empty())
    throw DataError("axiom kind '" + std::string(axiom_kind_name(kind)) +
                    "' does not take a property label");
  axioms_.push_back({kind, subject, object, std::move(property)});
}

OntologyGraph OntologyBuilder::build() {
  OntologyGraph g;
  g.concepts_ = std::move(concepts_);
  g.id_index_ = std::move(id_index_);

  auto resolve = [&](const ConceptId& id, const char* what) -> std::uint32_t {
    auto it = g.id_index_.find(id);
    if (it == g.id_index_.end())
      throw DataError(std::string(what) + " references missing concept: " + id);
    return it->second;
  };

  for (auto& e : edges_) {
    g.edges_.push_back({resolve(e.subject, "edge"), std::move(e.predicate),
                        resolve(e.object, "edge")});
  }
  for (auto& a : axioms_) {
    g.axioms_.push_back({a.kind, resolve(a.subject, "axiom"),
                         std::move(a.property), resolve(a.object, "axiom")});
  }
  edges_.clear();
  axioms_.clear();

  const std::size_t n = g.concepts_.size();
  g.out_edges_.resize(n);
  g.in_edges_.resize(n);
  g.steps_.resize(n);

  for (std::uint32_t i = 0; i < n; ++i) {
    const auto& cui = g.concepts_[i].cui;
    if (!cui.empty()) g.cui_index_[cui].push_back(i);
  }

  for (std::uint32_t e = 0; e < g.edges_.size(); ++e) {
    g.out_edges_[g.edges_[e].subject].push_back(e);
    g.in_edges_[g.edges_[e].object].push_back(e);
  }

  // Traversal steps: plain edges first (forward then inverse), then axiom
  // steps in declaration order.
  for (std::uint32_t v = 0; v < n; ++v) {
    for (auto e : g.out_edges_[v]) {
      g.steps_[v].push_back(
          {{{g.edges_[e].predicate_label, Quantifier::None, false}},
           g.edges_[e].object, false});
    }
    for (auto e : g.in_edges_[v]) {
      g.steps_[v].push_back(
          {{{g.edges_[e].predicate_label, Quantifier::None, true}},
           g.edges_[e].subject, false});
    }
  }
  for (const auto& a : g.axioms_) {
    switch (a.kind) {
      case AxiomKind::SubClassOf:
        g.steps_[a.subject].push_back(
            {{{"subClassOf", Quantifier::None, false}}, a.object, true});
        g.steps_[a.object].push_back(
            {{{"superClassOf", Quantifier::None, false}}, a.subject, true});
        break;
      case AxiomKind::EquivalentTo:
        g.steps_[a.subject].push_back(
            {{{"equivalentTo", Quantifier::None, false}}, a.object, true});
        g.steps_[a.object].push_back(
            {{{"equivalentTo", Quantifier::None, false}}, a.subject, true});
        break;
      case AxiomKind::ExistentialRestriction:
      case AxiomKind::UniversalRestriction: {
        Quantifier q = a.kind == AxiomKind::ExistentialRestriction
                           ? Quantifier::Some
                           : Quantifier::Only;
        g.steps_[a.subject].push_back(
            {{{"subClassOf", Quantifier::None, false},
              {a.property_label, q, false}},
             a.object, true});
        g.steps_[a.object].push_back(
            {{{a.property_label, q, true},
              {"superClassOf", Quantifier::None, false}},
             a.subject, true});
        break;
      }
      case AxiomKind::IntersectionMember:
      case AxiomKind::UnionMember: {
        std::string lbl = member_label(a.kind);
        g.steps_[a.subject].push_back(
            {{{lbl, Quantifier::None, false}}, a.object, true});
        g.steps_[a.object].push_back(
            {{{lbl, Quantifier::None, true}}, a.subject, true});
        break;
      }
    }
  }

  // Stats.
  g.stats_.concept_count = n;
  {
    std::set<std::string> props;
    for (const auto& e : g.edges_) props.insert(e.predicate_label);
    for (const auto& a : g.axioms_)
      if (is_restriction(a.kind)) props.insert(a.property_label);
    g.stats_.property_count = props.size();
  }
  {
    // Longest SubClassOf chain, cycles skipped with an on-path visited set.
    std::vector<std::vector<std::uint32_t>> parents(n);
    for (const auto& a : g.axioms_)
      if (a.kind == AxiomKind::SubClassOf) parents[a.subject].push_back(a.object);
    std::vector<char> on_path(n, 0);
    std::size_t best = 0;
    auto dfs = [&](auto&& self, std::uint32_t v) -> std::size_t {
      on_path[v] = 1;
      std::size_t depth = 0;
      for (auto p : parents[v]) {
        if (on_path[p]) continue;
        depth = std::max(depth, 1 + self(self, p));
      }
      on_path[v] = 0;
      return depth;
    };
    for (std::uint32_t v = 0; v < n; ++v) best = std::max(best, dfs(dfs, v));
    g.stats_.max_subclass_depth = best;
  }

  g.digest_ = fnv1a64(serialize_ontology_text(g));
  return g;
}

namespace {

void parse_triples_line(OntologyBuilder& builder, const std::string& line,
                        std::size_t line_no, const std::string& source) {
  auto fields = split_fields(line);
  if (fields.empty()) return;
  const std::string& tag = fields[0];
  try {
    if (tag == "C") {
      if (fields.size() < 4)
        throw ParseError("concept record needs: C <id> <cui|-> <label...>",
                         line_no);
      std::string label;
      for (std::size_t i = 3; i < fields.size(); ++i) {
        if (!label.empty()) label.push_back(' ');
        label += fields[i];
      }
      builder.add_concept(
          {fields[1], label, fields[2] == "-" ? "" : fields[2], source});
    } else if (tag == "E") {
      if (fields.size() != 4)
        throw ParseError("edge record needs: E <subject> <predicate> <object>",
                         line_no);
      builder.add_edge(fields[1], fields[2], fields[3]);
    } else if (tag == "A") {
      if (fields.size() != 5)
        throw ParseError(
            "axiom record needs: A <kind> <subject> <property|-> <object>",
            line_no);
      auto kind = axiom_kind_from_name(fields[1]);
      if (!kind)
        throw ParseError("unknown axiom kind '" + fields[1] + "'", line_no);
      builder.add_axiom(*kind, fields[2], fields[3] == "-" ? "" : fields[3],
                        fields[4]);
    } else {
      throw ParseError("unknown record tag '" + tag + "'", line_no);
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), line_no);
  }
}

void parse_json_line(OntologyBuilder& builder, const std::string& line,
                     std::size_t line_no, const std::string& source) {
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid json: ") + e.what(), line_no);
  }
  try {
    if (!rec.is_object() || !rec.contains("type"))
      throw ParseError("record must be an object with a 'type' field", line_no);
    std::string type = rec.at("type").get<std::string>();
    if (type == "concept") {
      builder.add_concept({rec.at("id").get<std::string>(),
                           rec.at("label").get<std::string>(),
                           rec.value("cui", std::string()), source});
    } else if (type == "edge") {
      builder.add_edge(rec.at("subject").get<std::string>(),
                       rec.at("predicate").get<std::string>(),
                       rec.at("object").get<std::string>());
    } else if (type == "axiom") {
      auto kind = axiom_kind_from_name(rec.at("kind").get<std::string>());
      if (!kind)
        throw ParseError("unknown axiom kind '" +
                             rec.at("kind").get<std::string>() + "'",
                         line_no);
      builder.add_axiom(*kind, rec.at("subject").get<std::string>(),
                        rec.value("property", std::string()),
                        rec.at("object").get<std::string>());
    } else {
      throw ParseError("unknown record type '" + type + "'", line_no);
    }
  } catch (const ParseError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad record: ") + e.what(), line_no);
  } catch (const Error& e) {
    throw ParseError(e.what(), line_no);
  }
}

}  // namespace

OntologyGraph parse_ontology(std::istream& in, OntologyFormat format,
                             const std::string& source_name) {
  OntologyBuilder builder;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    bool blank = line.find_first_not_of(" \t\r\n") == std::string::npos;
    if (blank) continue;
    if (format == OntologyFormat::Triples)
      parse_triples_line(builder, line, line_no, source_name);
    else
      parse_json_line(builder, line, line_no, source_name);
  }
  return builder.build();
}

OntologyGraph parse_ontology_text(const std::string& text, OntologyFormat format,
                                  const std::string& source_name) {
  std::istringstream in(text);
  return parse_ontology(in, format, source_name);
}

OntologyGraph parse_ontology_file(const std::filesystem::path& path,
                                  OntologyFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ontology file: " + path.string());
  return parse_ontology(in, format, path.stem().string());
}

void serialize_ontology(const OntologyGraph& graph, std::ostream& out) {
  std::vector<const Concept*> concepts;
  for (const auto& c : graph.concepts()) concepts.push_back(&c);
  std::sort(concepts.begin(), concepts.end(),
            [](const Concept* a, const Concept* b) { return a->id < b->id; });
  for (const auto* c : concepts) {
    out << "C " << c->id << ' ' << (c->cui.empty() ? "-" : c->cui) << ' '
        << c->preferred_label << '\n';
  }
  std::vector<std::string> lines;
  for (const auto& e : graph.edges()) {
    lines.push_back("E " + graph.concept(e.subject).id + ' ' +
                    e.predicate_label + ' ' + graph.concept(e.object).id);
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) out << l << '\n';
  lines.clear();
  for (const auto& a : graph.axioms()) {
    lines.push_back(std::string("A ") + axiom_kind_name(a.kind) + ' ' +
                    graph.concept(a.subject).id + ' ' +
                    (a.property_label.empty() ? "-" : a.property_label) + ' ' +
                    graph.concept(a.object).id);
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) out << l << '\n';
}

std::string serialize_ontology_text(const OntologyGraph& graph) {
  std::ostringstream out;
  serialize_ontology(graph, out);
  return out.str();
}

OntologyGraph merge_graphs(const std::vector<const OntologyGraph*>& graphs) {
  if (graphs.empty()) throw DataError("merge requires at least one graph");

  struct Group {
    std::string id, label, cui;
    std::set<std::string> sources;
  };
  std::vector<Group> groups;
  std::map<std::string, std::size_t> by_cui;
  // node key per input concept -> group index
  std::vector<std::vector<std::size_t>> group_of(graphs.size());

  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto& g = *graphs[gi];
    group_of[gi].resize(g.concept_count());
    for (std::uint32_t ci = 0; ci < g.concept_count(); ++ci) {
      const Concept& c = g.concept(ci);
      std::size_t target;
      if (!c.cui.empty()) {
        auto it = by_cui.find(c.cui);
        if (it == by_cui.end()) {
          target = groups.size();
          by_cui.emplace(c.cui, target);
          groups.push_back({c.id, c.preferred_label, c.cui, {}});
        } else {
          target = it->second;
          Group& grp = groups[target];
          // representative = smallest (id, label) member, so merging is
          // order-independent
          if (std::tie(c.id, c.preferred_label) <
              std::tie(grp.id, grp.label)) {
            grp.id = c.id;
            grp.label = c.preferred_label;
          }
        }
      } else {
        target = groups.size();
        groups.push_back({c.id, c.preferred_label, "", {}});
      }
      groups[target].sources.insert(c.source_ontology);
      group_of[gi][ci] = target;
    }
  }

  // Resolve id collisions between groups deterministically.
  std::map<std::string, int> used;
  for (auto& grp : groups) {
    int& count = used[grp.id];
    ++count;
    if (count > 1) grp.id += "~" + std::to_string(count);
  }

  OntologyBuilder builder;
  for (const auto& grp : groups) {
    std::string source;
    for (const auto& s : grp.sources) {
      if (!source.empty()) source += "+";
      source += s;
    }
    builder.add_concept({grp.id, grp.label, grp.cui, source});
  }

  std::set<std::tuple<std::string, std::string, std::string>> edge_set;
  std::set<std::tuple<int, std::string, std::string, std::string>> axiom_set;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto& g = *graphs[gi];
    for (const auto& e : g.edges()) {
      edge_set.insert({groups[group_of[gi][e.subject]].id, e.predicate_label,
                       groups[group_of[gi][e.object]].id});
    }
    for (const auto& a : g.axioms()) {
      axiom_set.insert({static_cast<int>(a.kind),
                        groups[group_of[gi][a.subject]].id, a.property_label,
                        groups[group_of[gi][a.object]].id});
    }
  }
  for (const auto& [s, p, o] : edge_set) builder.add_edge(s, p, o);
  for (const auto& [k, s, p, o] : axiom_set)
    builder.add_axiom(static_cast<AxiomKind>(k), s, p, o);
  return builder.build();
}

OntologyGraph merge_graphs(const std::vector<OntologyGraph>& graphs) {
  std::vector<const OntologyGraph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g);
  return merge_graphs(ptrs);
}

}  // namespace ontorel
