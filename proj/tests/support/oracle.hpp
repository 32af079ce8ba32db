#pragma once

// Reference implementations used only by tests. Nothing here shares code
// with the engine's executors beyond the Relation container.

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dualkg/dualkg.hpp"

namespace oracle {

using dualkg::KnowledgeGraph;
using dualkg::Query;
using dualkg::Relation;
using dualkg::TermId;
using dualkg::Triple;
using dualkg::TriplePattern;

namespace detail {

// A pattern term resolved up front: a variable slot, a known constant, or a
// constant absent from the graph (matches nothing).
struct Slot {
  bool is_var = false;
  std::size_t var = 0;
  std::optional<TermId> constant;
};

struct Compiled {
  const std::vector<Triple>* triples = nullptr;
  Slot s, o;
};

inline bool unify(const Slot& slot, TermId value, std::vector<std::optional<TermId>>& env,
                  std::vector<std::size_t>& bound_here) {
  if (!slot.is_var) return slot.constant && *slot.constant == value;
  auto& cell = env[slot.var];
  if (cell) return *cell == value;
  cell = value;
  bound_here.push_back(slot.var);
  return true;
}

inline void solve(const std::vector<Compiled>& patterns, std::size_t k,
                  std::vector<std::optional<TermId>>& env,
                  const std::vector<std::size_t>& select, Relation& out) {
  if (k == patterns.size()) {
    std::vector<TermId> row;
    for (auto v : select) row.push_back(*env.at(v));
    out.append(row);
    return;
  }
  const auto& cp = patterns[k];
  std::vector<std::size_t> bound;
  for (const auto& t : *cp.triples) {
    bound.clear();
    if (unify(cp.s, t.subject, env, bound) && unify(cp.o, t.object, env, bound))
      solve(patterns, k + 1, env, select, out);
    for (auto b : bound) env[b].reset();
  }
}

}  // namespace detail

/// Nested loops over the triples of each pattern's predicate, in the given
/// order. Grouping is a plain copy, not the engine's partitions.
inline Relation brute_force(const KnowledgeGraph& g,
                            const std::vector<TriplePattern>& patterns,
                            const std::vector<std::string>& select) {
  std::map<TermId, std::vector<Triple>> by_pred;
  for (const auto& [p, part] : g.partitions())
    for (const auto& t : part.triples()) by_pred[t.predicate].push_back(t);
  static const std::vector<Triple> kNone;

  std::map<std::string, std::size_t> slots;
  auto slot_of = [&](const dualkg::PatternTerm& term) {
    detail::Slot s;
    if (dualkg::is_variable(term)) {
      s.is_var = true;
      s.var = slots.emplace(dualkg::var_name(term), slots.size()).first->second;
    } else {
      s.constant = g.symbols().find(dualkg::const_text(term));
    }
    return s;
  };
  std::vector<detail::Compiled> compiled;
  for (const auto& tp : patterns) {
    detail::Compiled c;
    auto pred = g.symbols().find(tp.predicate);
    auto it = pred ? by_pred.find(*pred) : by_pred.end();
    c.triples = it == by_pred.end() ? &kNone : &it->second;
    c.s = slot_of(tp.subject);
    c.o = slot_of(tp.object);
    compiled.push_back(c);
  }
  std::vector<std::size_t> select_slots;
  for (const auto& v : select) select_slots.push_back(slots.at(v));

  Relation out(select);
  std::vector<std::optional<TermId>> env(slots.size());
  detail::solve(compiled, 0, env, select_slots, out);
  return out;
}

inline Relation brute_force(const KnowledgeGraph& g, const Query& q) {
  return brute_force(g, q.patterns, q.select_vars);
}

/// Eq.-style update evaluated straight from the textbook form, written
/// independently of the engine's q_update.
inline double q_learning_step(double q_sa, double alpha, double gamma, double reward,
                              double next_max) {
  const double target = reward + gamma * next_max;
  return q_sa + alpha * (target - q_sa);
}

struct RandomGraphSpec {
  std::size_t max_triples = 500;
  std::size_t max_predicates = 8;
  std::size_t entities = 40;
};

inline KnowledgeGraph random_graph(std::mt19937_64& rng, const RandomGraphSpec& spec = {}) {
  KnowledgeGraph g;
  const std::size_t preds = 1 + rng() % spec.max_predicates;
  const std::size_t n = 1 + rng() % spec.max_triples;
  const std::size_t ents = 2 + rng() % spec.entities;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s = "e" + std::to_string(rng() % ents);
    std::string p = "p" + std::to_string(rng() % preds);
    std::string o = (rng() % 10 == 0) ? "\"lit" + std::to_string(rng() % 5) + "\""
                                      : "e" + std::to_string(rng() % ents);
    g.add(s, p, o);
  }
  return g;
}

/// Random conjunctive query over the graph's predicates. Mostly connected;
/// constants are drawn from terms the graph actually uses, with an
/// occasional unknown one.
inline Query random_query(std::mt19937_64& rng, const KnowledgeGraph& g,
                          std::size_t max_patterns = 6) {
  std::vector<std::string> preds;
  for (const auto& [p, part] : g.partitions()) preds.push_back(g.symbols().text(p));
  if (preds.empty()) preds.push_back("p0");
  std::vector<std::string> subjects, objects;
  for (const auto& [p, part] : g.partitions())
    for (const auto& t : part.triples()) {
      subjects.push_back(g.symbols().text(t.subject));
      objects.push_back(g.symbols().text(t.object));
    }

  Query q;
  const std::size_t n = 1 + rng() % max_patterns;
  std::vector<std::string> vars;
  auto pick_var = [&]() -> dualkg::PatternTerm {
    bool reuse = !vars.empty() && rng() % 3 != 0;
    if (reuse) return dualkg::Variable{vars[rng() % vars.size()]};
    std::string v = "v" + std::to_string(vars.size());
    vars.push_back(v);
    return dualkg::Variable{v};
  };
  auto pick_const = [&](const std::vector<std::string>& pool) -> dualkg::PatternTerm {
    if (pool.empty() || rng() % 15 == 0) return dualkg::Constant{"nowhere"};
    return dualkg::Constant{pool[rng() % pool.size()]};
  };
  for (std::size_t i = 0; i < n; ++i) {
    TriplePattern tp;
    tp.predicate = preds[rng() % preds.size()];
    tp.subject = rng() % 5 == 0 ? pick_const(subjects) : pick_var();
    tp.object = rng() % 5 == 0 ? pick_const(objects) : pick_var();
    if (!dualkg::is_variable(tp.subject) && !dualkg::is_variable(tp.object))
      tp.object = pick_var();
    q.patterns.push_back(tp);
  }
  for (const auto& v : vars)
    if (rng() % 2 == 0) q.select_vars.push_back(v);
  if (q.select_vars.empty()) q.select_vars.push_back(vars[rng() % vars.size()]);
  return q;
}

/// Mirrors every partition of the store's graph into its graph store.
inline void mirror_all(dualkg::GraphStore& gs, const KnowledgeGraph& g) {
  std::vector<const dualkg::TriplePartition*> all;
  for (const auto& [p, part] : g.partitions()) all.push_back(&part);
  gs.migrate_in(all);
}

inline const char* kExample1 =
    "SELECT ?GivenName ?FamilyName WHERE { "
    "?p y:hasGivenName ?GivenName . "
    "?p y:hasFamilyName ?FamilyName . "
    "?p y:wasBornIn ?city . "
    "?p y:hasAcademicAdvisor ?a . "
    "?a y:wasBornIn ?city . "
    "?p y:isMarriedTo ?p2 . "
    "?p2 y:wasBornIn ?city . }";

/// Ten triples: alice shares a birth city with her advisor and her spouse;
/// bob's advisor was born elsewhere.
inline KnowledgeGraph example1_graph() {
  return dualkg::parse_graph(
      "alice\ty:hasGivenName\t\"Alice\"\n"
      "alice\ty:hasFamilyName\t\"Smith\"\n"
      "alice\ty:wasBornIn\tparis\n"
      "alice\ty:hasAcademicAdvisor\tcarol\n"
      "carol\ty:wasBornIn\tparis\n"
      "alice\ty:isMarriedTo\tdave\n"
      "dave\ty:wasBornIn\tparis\n"
      "bob\ty:wasBornIn\tlyon\n"
      "bob\ty:hasAcademicAdvisor\teve\n"
      "bob\ty:isMarriedTo\tfrank\n");
}

}  // namespace oracle
