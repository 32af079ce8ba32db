#pragma once

#include <cmath>
#include <map>
#include <span>

#include "dualkg/graph_store.hpp"
#include "dualkg/kg_core.hpp"
#include "dualkg/rel_store.hpp"
#include "dualkg/tuner.hpp"

namespace dualkg {

inline std::size_t budget_for(const KnowledgeGraph& g, double budget_ratio) {
  return static_cast<std::size_t>(
      std::floor(budget_ratio * static_cast<double>(g.triple_count())));
}

/// The whole engine: knowledge graph model, relational store holding every
/// partition, and the mirrored graph store.
struct DualStore {
  KnowledgeGraph graph;
  RelationalStore rel;
  GraphStore gs;
  DualStoreDesign design;

  DualStore(KnowledgeGraph g, std::size_t budget)
      : graph(std::move(g)),
        rel(graph),
        gs(graph.shared_symbols(), budget),
        design(initial_design(graph, budget)) {}

  TuningContext context() { return {graph, gs, rel}; }
};

/// Appends new triples to the graph model and the relational store only.
/// Mirrored partitions go stale until the tuner migrates them again.
inline std::map<TermId, std::size_t> insert_triples(
    KnowledgeGraph& graph, RelationalStore& rel, std::span<const Triple> batch) {
  for (const auto& t : batch)
    if (graph.add(t)) rel.append(t);
  return partition_sizes(graph);
}

inline std::map<TermId, std::size_t> insert_triples(
    DualStore& store, std::span<const Triple> batch) {
  auto sizes = insert_triples(store.graph, store.rel, batch);
  for (const auto& [p, n] : sizes) store.design.relational_partitions.insert(p);
  return sizes;
}

}  // namespace dualkg
