#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dualkg/kg_core.hpp"
#include "dualkg/query.hpp"
#include "dualkg/relation.hpp"

namespace dualkg {

/// Budget-bounded adjacency store for mirrored partitions. Lookups by
/// (subject, predicate) and (object, predicate) touch only the neighbourhood
/// they return.
class GraphStore {
 public:
  using Edge = std::pair<TermId, TermId>;

  GraphStore(std::shared_ptr<const SymbolTable> symbols, std::size_t budget)
      : symbols_(std::move(symbols)), budget_(budget) {}

  GraphStore(const GraphStore&) = delete;
  GraphStore& operator=(const GraphStore&) = delete;

  /// Loads each partition, replacing any stale copy already resident. The
  /// whole call is rejected if the result would exceed the budget.
  void migrate_in(std::span<const TriplePartition* const> parts) {
    std::size_t after = resident_triples_;
    std::set<TermId> seen;
    for (const auto* part : parts) {
      if (!seen.insert(part->predicate()).second)
        throw Error("partition listed twice in one migration");
      after -= partition_size(part->predicate());
      after += part->size();
    }
    if (after > budget_)
      throw BudgetError("migration needs " + std::to_string(after) +
                        " resident triples, budget is " +
                        std::to_string(budget_));
    for (const auto* part : parts) {
      if (is_resident(part->predicate())) remove(part->predicate());
      add(*part);
    }
  }

  void migrate_in(const TriplePartition& part) {
    const TriplePartition* one[] = {&part};
    migrate_in(one);
  }

  void evict(TermId predicate) {
    if (!is_resident(predicate))
      throw Error("cannot evict non-resident partition " +
                  symbols_->text(predicate));
    remove(predicate);
  }

  const std::set<TermId>& resident_predicates() const { return resident_; }
  bool is_resident(TermId p) const { return resident_.contains(p); }
  std::size_t resident_triples() const { return resident_triples_; }
  std::size_t budget() const { return budget_; }
  const SymbolTable& symbols() const { return *symbols_; }

  std::size_t partition_size(TermId p) const {
    auto it = parts_.find(p);
    return it == parts_.end() ? 0 : it->second.edges.size();
  }

  std::span<const TermId> out(TermId s, TermId p) const {
    auto it = out_.find(pack(s, p));
    if (it == out_.end()) return {};
    return it->second;
  }

  std::span<const TermId> in(TermId o, TermId p) const {
    auto it = in_.find(pack(o, p));
    if (it == in_.end()) return {};
    return it->second;
  }

  std::span<const Edge> edges(TermId p) const {
    auto it = parts_.find(p);
    if (it == parts_.end()) return {};
    return it->second.edges;
  }

  bool contains(const Triple& t) const { return members_.contains(t); }

  // Average fan-out along each direction; used for traversal ordering.
  double out_degree(TermId p) const {
    auto it = parts_.find(p);
    if (it == parts_.end() || it->second.subjects == 0) return 0;
    return static_cast<double>(it->second.edges.size()) / it->second.subjects;
  }
  double in_degree(TermId p) const {
    auto it = parts_.find(p);
    if (it == parts_.end() || it->second.objects == 0) return 0;
    return static_cast<double>(it->second.edges.size()) / it->second.objects;
  }

  /// o in out(s,p) <=> s in in(o,p) for every resident triple, and the
  /// indices hold nothing else.
  bool index_consistent() const {
    std::size_t out_total = 0, in_total = 0;
    for (const auto& [k, v] : out_) out_total += v.size();
    for (const auto& [k, v] : in_) in_total += v.size();
    if (out_total != resident_triples_ || in_total != resident_triples_ ||
        members_.size() != resident_triples_)
      return false;
    for (const auto& [p, part] : parts_) {
      for (const auto& [s, o] : part.edges) {
        auto os = out(s, p);
        auto is = in(o, p);
        if (std::find(os.begin(), os.end(), o) == os.end()) return false;
        if (std::find(is.begin(), is.end(), s) == is.end()) return false;
      }
    }
    return true;
  }

 private:
  struct Resident {
    std::vector<Edge> edges;
    std::size_t subjects = 0;
    std::size_t objects = 0;
  };

  static std::uint64_t pack(TermId a, TermId b) {
    return (static_cast<std::uint64_t>(raw(a)) << 32) | raw(b);
  }

  void add(const TriplePartition& part) {
    const TermId p = part.predicate();
    Resident r;
    r.edges.reserve(part.size());
    for (const auto& t : part.triples()) {
      auto& o = out_[pack(t.subject, p)];
      if (o.empty()) ++r.subjects;
      o.push_back(t.object);
      auto& i = in_[pack(t.object, p)];
      if (i.empty()) ++r.objects;
      i.push_back(t.subject);
      members_.insert(t);
      r.edges.emplace_back(t.subject, t.object);
    }
    resident_triples_ += r.edges.size();
    parts_.emplace(p, std::move(r));
    resident_.insert(p);
  }

  void remove(TermId p) {
    auto it = parts_.find(p);
    for (const auto& [s, o] : it->second.edges) {
      out_.erase(pack(s, p));
      in_.erase(pack(o, p));
      members_.erase(Triple{s, p, o});
    }
    resident_triples_ -= it->second.edges.size();
    parts_.erase(it);
    resident_.erase(p);
  }

  std::shared_ptr<const SymbolTable> symbols_;
  std::size_t budget_;
  std::size_t resident_triples_ = 0;
  std::set<TermId> resident_;
  std::map<TermId, Resident> parts_;
  std::unordered_map<std::uint64_t, std::vector<TermId>> out_;
  std::unordered_map<std::uint64_t, std::vector<TermId>> in_;
  std::unordered_set<Triple, TripleHash> members_;
};

namespace detail {

struct GraphSlot {
  bool is_var = false;
  std::size_t var = 0;
  bool known = false;  // for constants: present in the symbol table
  TermId id{};
};

struct GraphStep {
  TermId predicate{};
  GraphSlot s, o;
};

class Traversal {
 public:
  Traversal(const GraphStore& gs, std::span<const TriplePattern> patterns,
            std::span<const std::string> select_vars, const ExecOptions& opts,
            ExecResult& res)
      : gs_(gs), meter_(opts), res_(res) {
    const auto& symbols = gs.symbols();
    std::vector<GraphStep> steps;
    for (const auto& tp : patterns) {
      auto pid = symbols.find(tp.predicate);
      if (!pid || !gs.is_resident(*pid))
        throw CoverageError("predicate " + tp.predicate +
                            " is not resident in the graph store");
      steps.push_back({*pid, slot(tp.subject), slot(tp.object)});
    }
    for (const auto& v : select_vars) {
      auto it = std::find(vars_.begin(), vars_.end(), v);
      if (it == vars_.end())
        throw Error("selected variable ?" + v + " is not bound");
      select_.push_back(static_cast<std::size_t>(it - vars_.begin()));
    }
    order(std::move(steps));
    binding_.assign(vars_.size(), TermId{});
    bound_.assign(vars_.size(), false);
    row_.resize(select_.size());
  }

  void run() { descend(0); }

 private:
  GraphSlot slot(const PatternTerm& t) {
    GraphSlot s;
    if (is_variable(t)) {
      s.is_var = true;
      auto it = std::find(vars_.begin(), vars_.end(), var_name(t));
      s.var = static_cast<std::size_t>(it - vars_.begin());
      if (it == vars_.end()) vars_.push_back(var_name(t));
      return s;
    }
    if (auto id = gs_.symbols().find(const_text(t))) {
      s.known = true;
      s.id = *id;
    }
    return s;
  }

  // Expected candidates for a step given which variables are already bound.
  double estimate(const GraphStep& st, const std::vector<bool>& bound) const {
    auto fixed = [&](const GraphSlot& sl) { return !sl.is_var || bound[sl.var]; };
    const bool sf = fixed(st.s), of = fixed(st.o);
    if (sf && of) return 1.0;
    if (sf) {
      if (!st.s.is_var) return st.s.known ? gs_.out(st.s.id, st.predicate).size() : 0;
      return gs_.out_degree(st.predicate);
    }
    if (of) {
      if (!st.o.is_var) return st.o.known ? gs_.in(st.o.id, st.predicate).size() : 0;
      return gs_.in_degree(st.predicate);
    }
    return static_cast<double>(gs_.partition_size(st.predicate));
  }

  void order(std::vector<GraphStep> pending) {
    std::vector<bool> bound(vars_.size(), false);
    auto connected = [&](const GraphStep& st) {
      return (!st.s.is_var || bound[st.s.var]) || (!st.o.is_var || bound[st.o.var]);
    };
    while (!pending.empty()) {
      std::size_t best = pending.size();
      double best_est = std::numeric_limits<double>::infinity();
      bool any_connected = !steps_.empty() &&
          std::any_of(pending.begin(), pending.end(), connected);
      for (std::size_t i = 0; i < pending.size(); ++i) {
        if (any_connected && !connected(pending[i])) continue;
        double e = estimate(pending[i], bound);
        if (e < best_est) {
          best_est = e;
          best = i;
        }
      }
      if (best == pending.size()) best = 0;
      const auto& st = pending[best];
      if (st.s.is_var) bound[st.s.var] = true;
      if (st.o.is_var) bound[st.o.var] = true;
      steps_.push_back(st);
      pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(best));
    }
  }

  bool value(const GraphSlot& sl, TermId& out) const {
    if (!sl.is_var) {
      out = sl.id;
      return true;
    }
    if (bound_[sl.var]) {
      out = binding_[sl.var];
      return true;
    }
    return false;
  }

  void bind(std::size_t var, TermId v) {
    binding_[var] = v;
    bound_[var] = true;
  }

  void descend(std::size_t k) {
    if (k == steps_.size()) {
      for (std::size_t i = 0; i < select_.size(); ++i) row_[i] = binding_[select_[i]];
      res_.relation.append(row_);
      return;
    }
    const GraphStep& st = steps_[k];
    if ((!st.s.is_var && !st.s.known) || (!st.o.is_var && !st.o.known)) return;
    auto& visited = res_.stats.adjacency_visited;
    TermId sv{}, ov{};
    const bool sb = value(st.s, sv);
    const bool ob = value(st.o, ov);

    if (sb && ob) {
      meter_.charge(visited);
      if (gs_.contains(Triple{sv, st.predicate, ov})) descend(k + 1);
    } else if (sb) {
      // Object is an unbound variable; it may also be the subject variable
      // only if the subject were unbound, which it is not here.
      for (TermId o : gs_.out(sv, st.predicate)) {
        meter_.charge(visited);
        bind(st.o.var, o);
        descend(k + 1);
      }
      bound_[st.o.var] = false;
    } else if (ob) {
      for (TermId s : gs_.in(ov, st.predicate)) {
        meter_.charge(visited);
        bind(st.s.var, s);
        descend(k + 1);
      }
      bound_[st.s.var] = false;
    } else {
      const bool same = st.s.var == st.o.var;
      for (const auto& [s, o] : gs_.edges(st.predicate)) {
        meter_.charge(visited);
        if (same && s != o) continue;
        bind(st.s.var, s);
        bind(st.o.var, o);
        descend(k + 1);
      }
      bound_[st.s.var] = false;
      bound_[st.o.var] = false;
    }
  }

  const GraphStore& gs_;
  CostMeter meter_;
  ExecResult& res_;
  std::vector<std::string> vars_;
  std::vector<std::size_t> select_;
  std::vector<GraphStep> steps_;
  std::vector<TermId> binding_;
  std::vector<bool> bound_;
  std::vector<TermId> row_;

 public:
  std::uint64_t elapsed() const { return meter_.elapsed(); }
};

}  // namespace detail

/// Backtracking evaluation over resident adjacency. Every predicate must be
/// resident; otherwise CoverageError.
inline ExecResult graph_execute(const GraphStore& gs,
                                std::span<const TriplePattern> patterns,
                                std::span<const std::string> select_vars,
                                const ExecOptions& opts = {}) {
  ExecResult res;
  res.relation =
      Relation(std::vector<std::string>(select_vars.begin(), select_vars.end()));
  detail::Traversal walk(gs, patterns, select_vars, opts, res);
  try {
    walk.run();
  } catch (const detail::Cancelled&) {
    res.relation =
        Relation(std::vector<std::string>(select_vars.begin(), select_vars.end()));
    res.stats.cancelled = true;
  }
  res.stats.wall_nanos = walk.elapsed();
  return res;
}

inline std::set<TermId> resident_predicates(const GraphStore& gs) {
  return gs.resident_predicates();
}

}  // namespace dualkg
