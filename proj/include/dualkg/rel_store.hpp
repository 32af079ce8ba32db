#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dualkg/kg_core.hpp"
#include "dualkg/query.hpp"
#include "dualkg/relation.hpp"

namespace dualkg {

/// Vertically partitioned triple tables (one (subject, object) table per
/// predicate) plus the temporary table space used by split execution.
class RelationalStore {
 public:
  using Row = std::pair<TermId, TermId>;

  explicit RelationalStore(const KnowledgeGraph& graph)
      : symbols_(graph.shared_symbols()) {
    for (const auto& [p, part] : graph.partitions()) {
      auto& table = tables_[p];
      table.reserve(part.size());
      for (const auto& t : part.triples()) table.emplace_back(t.subject, t.object);
    }
  }

  RelationalStore(const RelationalStore&) = delete;
  RelationalStore& operator=(const RelationalStore&) = delete;

  void append(const Triple& t) {
    tables_[t.predicate].emplace_back(t.subject, t.object);
  }

  const std::vector<Row>* table(TermId predicate) const {
    auto it = tables_.find(predicate);
    return it == tables_.end() ? nullptr : &it->second;
  }

  std::size_t partition_size(TermId predicate) const {
    const auto* t = table(predicate);
    return t ? t->size() : 0;
  }

  std::size_t partition_count() const { return tables_.size(); }

  const SymbolTable& symbols() const { return *symbols_; }

  void register_temp(const std::string& name, Relation rel) {
    std::lock_guard lock(temp_mu_);
    if (temps_.contains(name))
      throw TempTableError("temporary table already exists: " + name);
    temps_.emplace(name, std::make_shared<const Relation>(std::move(rel)));
  }

  void drop_temp(const std::string& name) {
    std::lock_guard lock(temp_mu_);
    if (temps_.erase(name) == 0)
      throw TempTableError("no such temporary table: " + name);
  }

  std::shared_ptr<const Relation> temp(const std::string& name) const {
    std::lock_guard lock(temp_mu_);
    auto it = temps_.find(name);
    if (it == temps_.end())
      throw TempTableError("no such temporary table: " + name);
    return it->second;
  }

  std::size_t temp_count() const {
    std::lock_guard lock(temp_mu_);
    return temps_.size();
  }

  std::string fresh_temp_name() {
    return "migrated_" + std::to_string(temp_seq_.fetch_add(1));
  }

 private:
  std::shared_ptr<SymbolTable> symbols_;
  std::map<TermId, std::vector<Row>> tables_;
  mutable std::mutex temp_mu_;
  std::map<std::string, std::shared_ptr<const Relation>> temps_;
  std::atomic<std::uint64_t> temp_seq_{0};
};

namespace detail {

// Constant slot resolved against the symbol table; `known == false` means
// the constant never occurs in the data and matches nothing.
struct ResolvedSlot {
  bool is_var = false;
  std::string var;
  bool known = false;
  TermId id{};
};

inline ResolvedSlot resolve(const PatternTerm& t, const SymbolTable& symbols) {
  ResolvedSlot r;
  if (is_variable(t)) {
    r.is_var = true;
    r.var = var_name(t);
    return r;
  }
  if (auto id = symbols.find(const_text(t))) {
    r.known = true;
    r.id = *id;
  }
  return r;
}

inline std::vector<std::string> pattern_columns(const ResolvedSlot& s,
                                                const ResolvedSlot& o) {
  std::vector<std::string> cols;
  if (s.is_var) cols.push_back(s.var);
  if (o.is_var && !(s.is_var && s.var == o.var)) cols.push_back(o.var);
  return cols;
}

/// Full scan of one predicate table with constants applied as selections.
inline Relation scan_pattern(const RelationalStore& store,
                             const TriplePattern& tp, CostMeter& meter,
                             ExecutionStats& stats) {
  const auto& symbols = store.symbols();
  auto s = resolve(tp.subject, symbols);
  auto o = resolve(tp.object, symbols);
  Relation out(pattern_columns(s, o));

  auto pred = symbols.find(tp.predicate);
  const auto* table = pred ? store.table(*pred) : nullptr;
  if (!table) return out;

  const bool same_var = s.is_var && o.is_var && s.var == o.var;
  TermId buf[2];
  for (const auto& [subj, obj] : *table) {
    meter.charge(stats.rows_scanned);
    if (!s.is_var && (!s.known || subj != s.id)) continue;
    if (!o.is_var && (!o.known || obj != o.id)) continue;
    if (same_var && subj != obj) continue;
    std::size_t n = 0;
    if (s.is_var) buf[n++] = subj;
    if (o.is_var && !same_var) buf[n++] = obj;
    out.append({buf, n});
  }
  return out;
}

inline bool shares_column(const Relation& a, const Relation& b) {
  for (const auto& c : b.columns())
    if (a.column_index(c)) return true;
  return false;
}

inline std::uint64_t key_hash(std::span<const TermId> row,
                              std::span<const std::size_t> cols) {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto c : cols) {
    h ^= raw(row[c]);
    h *= 1099511628211ULL;
  }
  return h;
}

/// Natural hash join; the smaller input is the build side. Output columns
/// are left's columns followed by right's columns not already present.
inline Relation hash_join(const Relation& left, const Relation& right,
                          CostMeter& meter, ExecutionStats& stats) {
  std::vector<std::size_t> lkey, rkey, rextra;
  for (std::size_t j = 0; j < right.width(); ++j) {
    if (auto i = left.column_index(right.columns()[j])) {
      lkey.push_back(*i);
      rkey.push_back(j);
    } else {
      rextra.push_back(j);
    }
  }
  std::vector<std::string> cols = left.columns();
  for (auto j : rextra) cols.push_back(right.columns()[j]);
  Relation out(std::move(cols));

  const bool build_left = left.size() < right.size();
  const Relation& build = build_left ? left : right;
  const Relation& probe = build_left ? right : left;
  const auto& bkey = build_left ? lkey : rkey;
  const auto& pkey = build_left ? rkey : lkey;

  std::unordered_map<std::uint64_t, std::vector<std::size_t>> table;
  table.reserve(build.size());
  for (std::size_t i = 0; i < build.size(); ++i)
    table[key_hash(build.row(i), bkey)].push_back(i);

  std::vector<TermId> buf(out.width());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    meter.charge(stats.hash_probes);
    auto prow = probe.row(i);
    auto it = table.find(key_hash(prow, pkey));
    if (it == table.end()) continue;
    for (std::size_t bi : it->second) {
      meter.charge(stats.hash_probes);
      auto brow = build.row(bi);
      bool match = true;
      for (std::size_t k = 0; k < bkey.size() && match; ++k)
        match = brow[bkey[k]] == prow[pkey[k]];
      if (!match) continue;
      auto lrow = build_left ? brow : prow;
      auto rrow = build_left ? prow : brow;
      std::size_t n = 0;
      for (auto v : lrow) buf[n++] = v;
      for (auto j : rextra) buf[n++] = rrow[j];
      out.append(buf);
      ++stats.join_output_rows;
    }
  }
  return out;
}

inline Relation project(const Relation& in,
                        std::span<const std::string> select_vars) {
  std::vector<std::size_t> idx;
  for (const auto& v : select_vars) {
    auto i = in.column_index(v);
    if (!i) throw Error("selected variable ?" + v + " is not bound");
    idx.push_back(*i);
  }
  Relation out(std::vector<std::string>(select_vars.begin(), select_vars.end()));
  std::vector<TermId> buf(idx.size());
  for (std::size_t r = 0; r < in.size(); ++r) {
    auto row = in.row(r);
    for (std::size_t k = 0; k < idx.size(); ++k) buf[k] = row[idx[k]];
    out.append(buf);
  }
  return out;
}

/// Greedy left-deep join: start from the smallest input, then repeatedly
/// join the smallest input connected to the running result. Disconnected
/// inputs are cross-joined last.
inline Relation join_all(std::vector<const Relation*> inputs, CostMeter& meter,
                         ExecutionStats& stats) {
  std::stable_sort(inputs.begin(), inputs.end(),
                   [](const Relation* a, const Relation* b) {
                     return a->size() < b->size();
                   });
  Relation current = *inputs.front();
  inputs.erase(inputs.begin());
  while (!inputs.empty()) {
    auto pick = inputs.begin();
    for (auto it = inputs.begin(); it != inputs.end(); ++it) {
      if (shares_column(current, **it)) {
        pick = it;
        break;
      }
    }
    current = hash_join(current, **pick, meter, stats);
    inputs.erase(pick);
  }
  return current;
}

}  // namespace detail

/// Evaluates the conjunction of `patterns` and the named temporary tables
/// under bag semantics and projects onto `select_vars`. A cancelled run
/// (cost cap reached) returns an empty relation with `stats.cancelled`.
inline ExecResult rel_execute(const RelationalStore& store,
                              std::span<const TriplePattern> patterns,
                              std::span<const std::string> select_vars,
                              std::span<const std::string> temp_inputs = {},
                              const ExecOptions& opts = {}) {
  ExecResult res;
  detail::CostMeter meter(opts);
  std::vector<std::shared_ptr<const Relation>> temps;
  for (const auto& name : temp_inputs) temps.push_back(store.temp(name));
  if (patterns.empty() && temps.empty())
    throw Error("relational query has no inputs");

  try {
    std::vector<Relation> scans;
    scans.reserve(patterns.size());
    for (const auto& tp : patterns)
      scans.push_back(detail::scan_pattern(store, tp, meter, res.stats));

    std::vector<const Relation*> inputs;
    for (const auto& s : scans) inputs.push_back(&s);
    for (const auto& t : temps) inputs.push_back(t.get());

    Relation joined = detail::join_all(std::move(inputs), meter, res.stats);
    res.relation = detail::project(joined, select_vars);
  } catch (const detail::Cancelled&) {
    res.relation =
        Relation(std::vector<std::string>(select_vars.begin(), select_vars.end()));
    res.stats.cancelled = true;
  }
  res.stats.wall_nanos = meter.elapsed();
  return res;
}

}  // namespace dualkg
