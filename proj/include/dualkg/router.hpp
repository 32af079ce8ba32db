#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dualkg/graph_store.hpp"
#include "dualkg/query.hpp"
#include "dualkg/rel_store.hpp"

namespace dualkg {

enum class RouteCase { graph_only, split, relational_only };

inline const char* to_string(RouteCase c) {
  switch (c) {
    case RouteCase::graph_only: return "graph_only";
    case RouteCase::split: return "split";
    case RouteCase::relational_only: return "relational_only";
  }
  return "?";
}

struct RoutingDecision {
  RouteCase route = RouteCase::relational_only;
  std::optional<ComplexSubquery> complex;
};

namespace detail {

inline bool covered(const std::set<std::string>& preds, const GraphStore& gs) {
  return std::all_of(preds.begin(), preds.end(), [&](const std::string& p) {
    auto id = gs.symbols().find(p);
    return id && gs.is_resident(*id);
  });
}

}  // namespace detail

/// Coverage-driven plan choice: whole query on the graph store if every
/// predicate is resident, the complex part there if only it is covered,
/// otherwise the relational store.
inline RoutingDecision route(const Query& q,
                             const std::optional<ComplexSubquery>& qc,
                             const GraphStore& gs) {
  if (!qc) return {RouteCase::relational_only, std::nullopt};
  if (detail::covered(predicate_set(q.patterns), gs))
    return {RouteCase::graph_only, qc};
  if (detail::covered(predicate_set(qc->patterns), gs))
    return {RouteCase::split, qc};
  return {RouteCase::relational_only, qc};
}

struct RoutedResult {
  RouteCase route = RouteCase::relational_only;
  Relation relation;
  ExecutionStats graph_stats;
  ExecutionStats rel_stats;
  std::size_t migrated_rows = 0;

  ExecutionStats total() const {
    ExecutionStats s = graph_stats;
    s += rel_stats;
    return s;
  }
};

/// Columns shipped from the graph side in a split plan: the join variables
/// plus any selected variable that only the complex part binds.
inline std::vector<std::string> migration_columns(const Query& q,
                                                  const ComplexSubquery& qc) {
  auto cols = qc.output_vars;
  auto rest_vars = variables_of(remaining_patterns(q, qc));
  auto qc_vars = variables_of(qc.patterns);
  for (const auto& v : q.select_vars) {
    bool in_qc = std::find(qc_vars.begin(), qc_vars.end(), v) != qc_vars.end();
    bool in_rest =
        std::find(rest_vars.begin(), rest_vars.end(), v) != rest_vars.end();
    if (in_qc && !in_rest && std::find(cols.begin(), cols.end(), v) == cols.end())
      cols.push_back(v);
  }
  return cols;
}

namespace detail {

class TempGuard {
 public:
  TempGuard(RelationalStore& rel, std::string name)
      : rel_(rel), name_(std::move(name)) {}
  ~TempGuard() {
    try {
      rel_.drop_temp(name_);
    } catch (...) {
    }
  }
  TempGuard(const TempGuard&) = delete;
  TempGuard& operator=(const TempGuard&) = delete;

 private:
  RelationalStore& rel_;
  std::string name_;
};

}  // namespace detail

inline RoutedResult execute_routed(const RoutingDecision& decision,
                                   const Query& q, const GraphStore& gs,
                                   RelationalStore& rel,
                                   const ExecOptions& opts = {}) {
  RoutedResult out;
  out.route = decision.route;
  switch (decision.route) {
    case RouteCase::graph_only: {
      auto r = graph_execute(gs, q.patterns, q.select_vars, opts);
      out.relation = std::move(r.relation);
      out.graph_stats = r.stats;
      break;
    }
    case RouteCase::relational_only: {
      auto r = rel_execute(rel, q.patterns, q.select_vars, {}, opts);
      out.relation = std::move(r.relation);
      out.rel_stats = r.stats;
      break;
    }
    case RouteCase::split: {
      if (!decision.complex) throw Error("split route without a complex part");
      const auto& qc = *decision.complex;
      auto cols = migration_columns(q, qc);
      auto g = graph_execute(gs, qc.patterns, cols, opts);
      out.graph_stats = g.stats;
      out.migrated_rows = g.relation.size();

      std::string name = rel.fresh_temp_name();
      rel.register_temp(name, std::move(g.relation));
      detail::TempGuard guard(rel, name);
      auto rest = remaining_patterns(q, qc);
      std::string temps[] = {name};
      auto r = rel_execute(rel, rest, q.select_vars, temps, opts);
      out.relation = std::move(r.relation);
      out.rel_stats = r.stats;
      break;
    }
  }
  return out;
}

}  // namespace dualkg
