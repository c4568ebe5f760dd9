#include "ontorel/path_reasoner.hpp"

#include <algorithm>
#include <map>

namespace ontorel {

namespace {

StepLabel flip_label(StepLabel label) {
  if (label.quantifier == Quantifier::None && !label.inverse) {
    if (label.text == "subClassOf") {
      label.text = "superClassOf";
      return label;
    }
    if (label.text == "superClassOf") {
      label.text = "subClassOf";
      return label;
    }
    if (label.text == "equivalentTo") return label;
  }
  label.inverse = !label.inverse;
  return label;
}

void check_hops(int max_hops) {
  if (max_hops < 1) throw DataError("hop budget must be at least 1");
}

// Depth-first enumeration over the precomputed traversal steps. Concepts may
// not repeat within a partial path, so every emitted path is cycle-free.
class PathSearch {
 public:
  PathSearch(const OntologyGraph& graph, std::uint32_t source,
             std::uint32_t dest, int max_hops, bool allow_plain_only)
      : graph_(graph),
        source_(source),
        dest_(dest),
        max_hops_(max_hops),
        allow_plain_only_(allow_plain_only),
        visited_(graph.concept_count(), 0) {}

  std::vector<Path> run() {
    visited_[source_] = 1;
    descend(source_, 0, 0);
    return std::move(results_);
  }

 private:
  void descend(std::uint32_t node, int depth, int axiom_steps) {
    if (depth == max_hops_) return;
    for (const auto& step : graph_.steps_from(node)) {
      if (!allow_plain_only_ && !step.axiomatic && depth + 1 == max_hops_ &&
          axiom_steps == 0) {
        continue;  // cannot reach an axiom step anymore
      }
      if (allow_plain_only_ && step.axiomatic) continue;
      if (visited_[step.target]) continue;
      stack_.push_back(&step);
      if (step.target == dest_) {
        int total_axiom = axiom_steps + (step.axiomatic ? 1 : 0);
        if (allow_plain_only_ || total_axiom >= 1) emit();
        // dest reached; cycle-freedom forbids continuing through it
      } else {
        visited_[step.target] = 1;
        descend(step.target, depth + 1, axiom_steps + (step.axiomatic ? 1 : 0));
        visited_[step.target] = 0;
      }
      stack_.pop_back();
    }
  }

  void emit() {
    Path p;
    p.source = graph_.concept(source_).id;
    p.dest = graph_.concept(dest_).id;
    bool any_axiom = false;
    for (const auto* step : stack_) {
      p.steps.push_back(
          {step->labels, graph_.concept(step->target).id, step->axiomatic});
      any_axiom |= step->axiomatic;
    }
    p.kind = any_axiom ? PathKind::Axiom : PathKind::Plain;
    results_.push_back(std::move(p));
  }

  const OntologyGraph& graph_;
  std::uint32_t source_, dest_;
  int max_hops_;
  bool allow_plain_only_;
  std::vector<char> visited_;
  std::vector<const GraphStep*> stack_;
  std::vector<Path> results_;
};

std::vector<Path> explore(const OntologyGraph& graph, const ConceptId& vs,
                          const ConceptId& vo, int max_hops, bool plain_only) {
  check_hops(max_hops);
  std::uint32_t s = graph.index_of(vs);
  std::uint32_t o = graph.index_of(vo);
  if (s == o) return {};  // loops are excluded
  PathSearch search(graph, s, o, max_hops, plain_only);
  return search.run();
}

}  // namespace

std::string verbalize_step(const PathStep& step) {
  std::string out;
  for (const auto& label : step.labels) {
    if (!out.empty()) out.push_back(' ');
    out += verbalize_label(label);
  }
  return out;
}

std::string verbalize_path(const Path& path) {
  std::string out;
  for (const auto& step : path.steps) {
    if (!out.empty()) out += ", ";
    out += verbalize_step(step);
  }
  return out;
}

std::vector<std::string> path_keywords(const Path& path) {
  std::vector<std::string> out;
  out.reserve(path.steps.size());
  for (const auto& step : path.steps) out.push_back(verbalize_step(step));
  return out;
}

Path reverse_path(const Path& path) {
  Path out;
  out.kind = path.kind;
  out.source = path.dest;
  out.dest = path.source;
  // node sequence: source, t0, t1, ..., dest
  std::vector<ConceptId> nodes;
  nodes.push_back(path.source);
  for (const auto& step : path.steps) nodes.push_back(step.target);
  for (std::size_t i = path.steps.size(); i > 0; --i) {
    const auto& step = path.steps[i - 1];
    PathStep rev;
    rev.axiomatic = step.axiomatic;
    rev.target = nodes[i - 1];
    for (auto it = step.labels.rbegin(); it != step.labels.rend(); ++it)
      rev.labels.push_back(flip_label(*it));
    out.steps.push_back(std::move(rev));
  }
  return out;
}

std::vector<Path> explore_path(const OntologyGraph& graph, const ConceptId& vs,
                               const ConceptId& vo, int max_hops) {
  return explore(graph, vs, vo, max_hops, true);
}

std::vector<Path> explore_symbolic_path(const OntologyGraph& graph,
                                        const ConceptId& vs,
                                        const ConceptId& vo, int max_hops) {
  return explore(graph, vs, vo, max_hops, false);
}

std::vector<Path> dedup_paths(std::vector<Path> paths) {
  // representative = lexicographically smallest verbalization; sorting first
  // makes the choice independent of input order
  std::vector<std::pair<std::string, std::size_t>> order;
  order.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i)
    order.emplace_back(verbalize_path(paths[i]), i);
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return paths[a.second].steps < paths[b.second].steps;
  });
  std::map<std::vector<std::string>, std::size_t> seen;
  std::vector<Path> out;
  for (const auto& [verb, idx] : order) {
    auto key = path_keywords(paths[idx]);
    std::sort(key.begin(), key.end());
    if (seen.emplace(std::move(key), out.size()).second)
      out.push_back(std::move(paths[idx]));
  }
  return out;
}

SymbolicContext reversed_view(const SymbolicContext& context) {
  SymbolicContext out;
  out.source_cui = context.dest_cui;
  out.dest_cui = context.source_cui;
  out.max_hops = context.max_hops;
  auto flip = [](const std::vector<PathInfo>& paths) {
    std::vector<PathInfo> rev;
    rev.reserve(paths.size());
    for (const auto& p : paths)
      rev.push_back({p.kind, p.hop_count, p.reverse_verbalization,
                     p.verbalization});
    return rev;
  };
  out.plain_paths = flip(context.plain_paths);
  out.axiom_paths = flip(context.axiom_paths);
  return out;
}

SymbolicContext path_generation(const OntologyGraph& graph,
                                const std::string& source_cui,
                                const std::string& dest_cui, int max_hops) {
  check_hops(max_hops);
  SymbolicContext context;
  context.source_cui = source_cui;
  context.dest_cui = dest_cui;
  context.max_hops = max_hops;

  auto sources = graph.resolve_cui_indices(source_cui);
  auto dests = graph.resolve_cui_indices(dest_cui);
  if (sources.empty() || dests.empty()) return context;

  std::vector<Path> plain, axiom;
  for (auto s : sources) {
    for (auto o : dests) {
      if (s == o) continue;
      const auto& sid = graph.concept(s).id;
      const auto& oid = graph.concept(o).id;
      for (auto& p : explore_path(graph, sid, oid, max_hops))
        plain.push_back(std::move(p));
      for (auto& p : explore_symbolic_path(graph, sid, oid, max_hops))
        axiom.push_back(std::move(p));
    }
  }

  auto finalize = [&](std::vector<Path> paths) {
    paths = dedup_paths(std::move(paths));
    std::vector<PathInfo> infos;
    infos.reserve(paths.size());
    for (const auto& p : paths) {
      infos.push_back({p.kind, static_cast<int>(p.hop_count()),
                       verbalize_path(p), verbalize_path(reverse_path(p))});
    }
    std::sort(infos.begin(), infos.end(), [](const PathInfo& a, const PathInfo& b) {
      return std::tie(a.hop_count, a.verbalization) <
             std::tie(b.hop_count, b.verbalization);
    });
    if (infos.size() > kMaxPathsPerKind) infos.resize(kMaxPathsPerKind);
    return infos;
  };
  context.plain_paths = finalize(std::move(plain));
  context.axiom_paths = finalize(std::move(axiom));
  return context;
}

}  // namespace ontorel
