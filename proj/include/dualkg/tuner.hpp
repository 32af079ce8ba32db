#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dualkg/graph_store.hpp"
#include "dualkg/kg_core.hpp"
#include "dualkg/query.hpp"
#include "dualkg/rel_store.hpp"

namespace dualkg {

// Partition state: 0 = relational only, 1 = mirrored in the graph store.
// Action: 0 = keep, 1 = transfer (from state 0) or evict (from state 1).
enum : int { kRelational = 0, kInGraph = 1 };
enum : int { kKeep = 0, kMove = 1 };

struct QMatrix {
  std::array<std::array<double, 2>, 2> q{};  // [state][action]

  double max_at(int state) const { return std::max(q[state][0], q[state][1]); }
  friend bool operator==(const QMatrix&, const QMatrix&) = default;
};

struct TunerConfig {
  double alpha = 0.5;
  double gamma = 0.7;
  double lambda = 4.5;
  double prob = 0.9;
  double budget_ratio = 0.25;
  std::uint64_t rng_seed = 42;
  CostMode cost_mode = CostMode::opcount;

  void validate() const {
    if (!(alpha > 0 && alpha <= 1)) throw ConfigError("alpha must be in (0,1]");
    if (!(gamma >= 0 && gamma < 1)) throw ConfigError("gamma must be in [0,1)");
    if (!(lambda > 1)) throw ConfigError("lambda must be > 1");
    if (!(prob >= 0 && prob <= 1)) throw ConfigError("prob must be in [0,1]");
    if (!(budget_ratio > 0 && budget_ratio < 1))
      throw ConfigError("budget ratio must be in (0,1)");
  }
};

/// One counterfactual measurement: graph cost c1 and relational cost c2,
/// where c2 is cut off at lambda * c1.
struct CostProbe {
  double c1 = 0;
  double c2 = 0;
  bool capped = false;
};

struct CellUpdate {
  TermId predicate{};
  int state = 0;
  int action = 0;
  Ratio share;
  double reward = 0;
  double before = 0;
  double after = 0;
};

enum class TuneDecision { kept_resident, transferred, declined, skipped };

inline const char* to_string(TuneDecision d) {
  switch (d) {
    case TuneDecision::kept_resident: return "kept_resident";
    case TuneDecision::transferred: return "transferred";
    case TuneDecision::declined: return "declined";
    case TuneDecision::skipped: return "skipped";
  }
  return "?";
}

/// Log record for one complex subquery handled by the tuner.
struct TuneEvent {
  std::uint64_t query_id = 0;
  TuneDecision decision = TuneDecision::declined;
  std::vector<TermId> partitions;  // T_c
  std::vector<TermId> transferred;
  std::vector<TermId> evicted;
  std::vector<CostProbe> probes;
  std::vector<CellUpdate> updates;
  std::string note;
};

struct TunerState {
  std::map<TermId, QMatrix> matrices;
  std::uint64_t seed = 0;
  std::mt19937_64 rng;
  std::uint64_t next_query_id = 0;
  std::vector<TuneEvent> history;

  TunerState() : TunerState(42) {}
  explicit TunerState(std::uint64_t s) : seed(s), rng(s) {}

  QMatrix& matrix(TermId p) { return matrices[p]; }

  // Uniform draw in [0,1) from the top 53 bits; portable across standard
  // libraries, unlike std::uniform_real_distribution.
  double uniform() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
};

/// References to everything a tuning pass reads or mutates.
struct TuningContext {
  const KnowledgeGraph& graph;
  GraphStore& gs;
  RelationalStore& rel;
};

inline int successor_state(int state, int action) {
  // transfer and keep-in-graph end in the graph store; evict and
  // keep-in-relational end outside it.
  return (state == kRelational) == (action == kMove) ? kInGraph : kRelational;
}

/// Q-learning update for one cell; returns the new value.
inline double q_update(const QMatrix& old, int s, int a, double reward,
                       double next_max, const TunerConfig& cfg) {
  return (1.0 - cfg.alpha) * old.q[s][a] +
         cfg.alpha * (reward + cfg.gamma * next_max);
}

/// Runs the patterns on the graph store, then replays them on the relational
/// store metered against lambda * c1.
inline CostProbe cost_probe(const ComplexSubquery& qc, const GraphStore& gs,
                            const RelationalStore& rel, const TunerConfig& cfg) {
  ExecOptions gopts{cfg.cost_mode, std::nullopt};
  auto g = graph_execute(gs, qc.patterns, qc.output_vars, gopts);
  CostProbe probe;
  probe.c1 = g.stats.cost(cfg.cost_mode);
  const double cap = cfg.lambda * probe.c1;
  ExecOptions ropts{cfg.cost_mode, cap};
  auto r = rel_execute(rel, qc.patterns, qc.output_vars, {}, ropts);
  double c2 = r.stats.cost(cfg.cost_mode);
  if (r.stats.cancelled || c2 >= cap) {
    probe.c2 = cap;
    probe.capped = true;
  } else {
    probe.c2 = c2;
  }
  return probe;
}

/// One probe, then one Q-cell update per partition in `parts`, with the
/// reward split by each predicate's share of the subquery's patterns.
inline void learning_proc(const ComplexSubquery& qc,
                          std::span<const TermId> parts, int s, int a,
                          TuningContext ctx, TunerState& state,
                          const TunerConfig& cfg, TuneEvent& event) {
  if (parts.empty()) return;
  CostProbe probe = cost_probe(qc, ctx.gs, ctx.rel, cfg);
  event.probes.push_back(probe);
  const double delta = probe.c2 - probe.c1;
  const int next = successor_state(s, a);
  for (TermId p : parts) {
    Ratio share =
        predicate_proportion(ctx.graph.symbols().text(p), qc.patterns);
    double reward = delta * static_cast<double>(share.num) /
                    static_cast<double>(share.den);
    QMatrix& m = state.matrix(p);
    double before = m.q[s][a];
    double after = q_update(m, s, a, reward, m.max_at(next), cfg);
    m.q[s][a] = after;
    event.updates.push_back({p, s, a, share, reward, before, after});
  }
}

namespace detail {

// Evicts residents outside `protect` in descending (Q[1][1] - Q[1][0]) order
// until `needed` more triples fit. Returns false, touching nothing, when
// even evicting every candidate would not make room.
inline bool make_room(std::size_t needed, const std::set<TermId>& protect,
                      TuningContext ctx, TunerState& state,
                      DualStoreDesign& design, TuneEvent& event) {
  auto& gs = ctx.gs;
  if (gs.resident_triples() + needed <= gs.budget()) return true;
  std::vector<TermId> candidates;
  std::size_t reclaimable = 0;
  for (TermId p : gs.resident_predicates()) {
    if (protect.contains(p)) continue;
    candidates.push_back(p);
    reclaimable += gs.partition_size(p);
  }
  if (gs.resident_triples() - reclaimable + needed > gs.budget()) return false;

  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](TermId x, TermId y) {
                     const auto& qx = state.matrix(x).q;
                     const auto& qy = state.matrix(y).q;
                     return qx[1][1] - qx[1][0] > qy[1][1] - qy[1][0];
                   });
  for (TermId p : candidates) {
    if (gs.resident_triples() + needed <= gs.budget()) break;
    gs.evict(p);
    design.graph_partitions.erase(p);
    event.evicted.push_back(p);
  }
  return true;
}

}  // namespace detail

/// One offline tuning pass over the complex subqueries of the latest batch,
/// processed in arrival order. Mutates the graph store and returns the new
/// design.
inline DualStoreDesign dotil_tune(const DualStoreDesign& design,
                                  std::span<const ComplexSubquery> batch,
                                  TuningContext ctx, TunerState& state,
                                  const TunerConfig& cfg) {
  DualStoreDesign next = design;
  for (const auto& [p, part] : ctx.graph.partitions())
    next.relational_partitions.insert(p);

  for (const auto& qc : batch) {
    TuneEvent event;
    event.query_id = state.next_query_id++;

    std::set<TermId> tc;
    std::string missing;
    for (const auto& name : predicate_set(qc.patterns)) {
      auto id = ctx.graph.symbols().find(name);
      if (!id || !ctx.graph.partition(*id)) {
        missing = name;
        break;
      }
      tc.insert(*id);
    }
    if (!missing.empty()) {
      event.decision = TuneDecision::skipped;
      event.note = "predicate " + missing + " not in knowledge graph";
      state.history.push_back(std::move(event));
      continue;
    }
    event.partitions.assign(tc.begin(), tc.end());
    for (TermId p : tc) state.matrix(p);

    std::vector<TermId> tset, kept;
    for (TermId p : tc)
      (ctx.gs.is_resident(p) ? kept : tset).push_back(p);

    if (tset.empty()) {
      event.decision = TuneDecision::kept_resident;
      learning_proc(qc, kept, kInGraph, kKeep, ctx, state, cfg, event);
      state.history.push_back(std::move(event));
      continue;
    }

    double q00 = 0, q01 = 0;
    for (TermId p : tset) {
      q00 += state.matrix(p).q[kRelational][kKeep];
      q01 += state.matrix(p).q[kRelational][kMove];
    }
    bool transfer = (q00 == 0 && q01 == 0) ? state.uniform() < cfg.prob
                                           : q01 > q00;
    std::size_t needed = 0;
    for (TermId p : tset) needed += ctx.graph.partition_size(p);
    if (transfer && needed > ctx.gs.budget()) {
      transfer = false;
      event.note = "partitions exceed graph store budget";
    }
    if (transfer &&
        !detail::make_room(needed, tc, ctx, state, next, event)) {
      transfer = false;
      event.note = "resident partitions of this subquery leave no room";
    }
    if (!transfer) {
      event.decision = TuneDecision::declined;
      state.history.push_back(std::move(event));
      continue;
    }

    std::vector<const TriplePartition*> parts;
    for (TermId p : tset) parts.push_back(ctx.graph.partition(p));
    ctx.gs.migrate_in(parts);
    next.graph_partitions.insert(tset.begin(), tset.end());
    event.decision = TuneDecision::transferred;
    event.transferred = tset;

    learning_proc(qc, tset, kRelational, kMove, ctx, state, cfg, event);
    learning_proc(qc, kept, kInGraph, kKeep, ctx, state, cfg, event);
    state.history.push_back(std::move(event));
  }
  return next;
}

/// Cold-start mitigation: a tuning pass over historical complex subqueries
/// before any measured run.
inline DualStoreDesign warm_up(TunerState& state,
                               std::span<const ComplexSubquery> history,
                               const DualStoreDesign& design, TuningContext ctx,
                               const TunerConfig& cfg) {
  if (history.empty()) return design;
  return dotil_tune(design, history, ctx, state, cfg);
}

}  // namespace dualkg
