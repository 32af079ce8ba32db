#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dualkg/dual_store.hpp"
#include "dualkg/query.hpp"
#include "dualkg/router.hpp"
#include "dualkg/state_io.hpp"
#include "dualkg/tuner.hpp"

namespace dualkg {

struct WorkloadEntry {
  std::string template_name;
  Query query;
};

enum class TunerKind { dotil, oneoff, lru, ideal, none };
enum class WorkloadOrder { ordered, random };
enum class LruWindow { batch, all };

inline const char* to_string(TunerKind k) {
  switch (k) {
    case TunerKind::dotil: return "dotil";
    case TunerKind::oneoff: return "oneoff";
    case TunerKind::lru: return "lru";
    case TunerKind::ideal: return "ideal";
    case TunerKind::none: return "none";
  }
  return "?";
}

inline const char* to_string(WorkloadOrder o) {
  return o == WorkloadOrder::ordered ? "ordered" : "random";
}

// ---------------------------------------------------------------------------
// Workload files: query blocks separated by `---` lines. `# template: NAME`
// inside a block labels it; other `#` lines are comments.

inline std::vector<WorkloadEntry> parse_workload(std::string_view text) {
  std::vector<WorkloadEntry> out;
  std::istringstream in{std::string(text)};
  std::string line, body, tmpl;
  std::size_t line_no = 0, block_start = 1;

  auto flush = [&] {
    if (body.find_first_not_of(" \t\r\n") != std::string::npos) {
      try {
        out.push_back({tmpl, parse_query(body)});
      } catch (const ParseError& e) {
        throw ParseError("query block at line " + std::to_string(block_start) +
                             ": " + e.what(),
                         block_start);
      }
      if (out.back().template_name.empty())
        out.back().template_name = "q" + std::to_string(out.size() - 1);
    }
    body.clear();
    tmpl.clear();
    block_start = line_no + 1;
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = detail::strip_cr(line);
    auto first = v.find_first_not_of(" \t");
    std::string_view trimmed = first == std::string_view::npos ? "" : v.substr(first);
    if (trimmed.rfind("---", 0) == 0 &&
        trimmed.find_first_not_of("- \t") == std::string_view::npos) {
      flush();
      continue;
    }
    if (!trimmed.empty() && trimmed.front() == '#') {
      constexpr std::string_view kTag = "template:";
      auto rest = trimmed.substr(1);
      rest.remove_prefix(std::min(rest.find_first_not_of(" \t"), rest.size()));
      if (rest.rfind(kTag, 0) == 0) {
        auto name = rest.substr(kTag.size());
        auto b = name.find_first_not_of(" \t");
        auto e = name.find_last_not_of(" \t");
        tmpl = b == std::string_view::npos ? "" : std::string(name.substr(b, e - b + 1));
      }
      continue;
    }
    body += std::string(v) + "\n";
  }
  flush();
  return out;
}

inline std::vector<WorkloadEntry> load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open workload file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_workload(ss.str());
}

inline std::string format_workload(const std::vector<WorkloadEntry>& entries) {
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out += "---\n";
    out += "# template: " + entries[i].template_name + "\n";
    out += to_string(entries[i].query) + "\n";
  }
  return out;
}

/// [begin, end) bounds of `batches` contiguous chunks whose sizes differ by
/// at most one; earlier chunks take the remainder.
inline std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(
    std::size_t n, std::size_t batches) {
  if (batches == 0) throw ConfigError("batch count must be at least 1");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t base = n / batches, extra = n % batches, at = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    std::size_t len = base + (b < extra ? 1 : 0);
    out.emplace_back(at, at + len);
    at += len;
  }
  return out;
}

// Fisher-Yates driven directly by the engine so results do not depend on
// the standard library's shuffle.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

/// `k` structure-preserving variants of `tmpl`: every distinct constant in a
/// subject/object slot is replaced by a term drawn from the same slot of the
/// same predicate's partition, and pattern order is shuffled.
inline std::vector<Query> generate_mutations(const Query& tmpl, std::size_t k,
                                             std::uint64_t seed,
                                             const KnowledgeGraph& graph) {
  std::vector<Query> out;
  std::mt19937_64 rng(seed);
  const auto& symbols = graph.symbols();
  for (std::size_t i = 0; i < k; ++i) {
    Query q = tmpl;
    std::map<std::string, std::string> replaced;
    auto substitute = [&](PatternTerm& term, const std::string& pred,
                          bool subject_slot) {
      if (is_variable(term)) return;
      auto& text = std::get<Constant>(term).text;
      if (auto it = replaced.find(text); it != replaced.end()) {
        text = it->second;
        return;
      }
      auto pid = symbols.find(pred);
      const auto* part = pid ? graph.partition(*pid) : nullptr;
      if (!part || part->size() == 0) return;
      const Triple& t = part->triples()[rng() % part->size()];
      std::string pick = symbols.text(subject_slot ? t.subject : t.object);
      replaced.emplace(text, pick);
      text = pick;
    };
    for (auto& tp : q.patterns) {
      substitute(tp.subject, tp.predicate, true);
      substitute(tp.object, tp.predicate, false);
    }
    seeded_shuffle(q.patterns, rng);
    out.push_back(std::move(q));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runs

struct RunOptions {
  TunerKind tuner = TunerKind::dotil;
  TunerConfig cfg;
  std::size_t batches = 5;
  WorkloadOrder order = WorkloadOrder::ordered;
  bool warmup = false;
  LruWindow lru_window = LruWindow::batch;
  bool parallel = false;
};

struct QueryRecord {
  std::size_t index = 0;     // position in the workload file
  std::size_t position = 0;  // position in execution order
  std::size_t batch = 0;
  std::string template_name;
  bool has_complex = false;
  RouteCase route = RouteCase::relational_only;
  double cost = 0;
  double graph_cost = 0;
  double relational_cost = 0;
  std::uint64_t op_count = 0;
  std::uint64_t wall_nanos = 0;
  std::size_t rows = 0;
  std::string fingerprint;
};

struct RunReport {
  TunerKind tuner = TunerKind::none;
  CostMode mode = CostMode::opcount;
  WorkloadOrder order = WorkloadOrder::ordered;
  std::size_t budget = 0;
  std::vector<double> per_batch_tti;
  std::vector<double> per_batch_graph_cost;
  std::vector<double> per_batch_relational_cost;
  double total_tti = 0;
  std::vector<QueryRecord> queries;
  std::map<std::string, std::size_t> routing;
  std::vector<TuneEvent> events;
  std::vector<std::string> final_resident;
  std::vector<std::string> warnings;

  double tti_from(std::size_t first_batch) const {
    double s = 0;
    for (std::size_t b = first_batch; b < per_batch_tti.size(); ++b)
      s += per_batch_tti[b];
    return s;
  }
};

/// Order-insensitive digest of a result bag over surface strings.
inline std::string fingerprint(const Relation& r, const SymbolTable& symbols) {
  std::vector<std::string> rows;
  rows.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    std::string s;
    for (TermId t : r.row(i)) {
      s += symbols.text(t);
      s += '\x1f';
    }
    rows.push_back(std::move(s));
  }
  std::sort(rows.begin(), rows.end());
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& row : rows) {
    for (unsigned char c : row) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0x1e;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline std::vector<ComplexSubquery> complex_parts(
    const std::vector<WorkloadEntry>& w, std::size_t begin, std::size_t end) {
  std::vector<ComplexSubquery> out;
  for (std::size_t i = begin; i < end; ++i)
    if (auto qc = identify_complex_subquery(w[i].query)) out.push_back(*qc);
  return out;
}

inline void sync_design(DualStore& store) {
  store.design.graph_partitions = store.gs.resident_predicates();
}

/// Frequency baseline: keep the partitions used by the most complex
/// subqueries in the window, greedily under the budget.
inline void lru_tune(DualStore& store, const std::vector<ComplexSubquery>& window,
                     std::map<TermId, std::size_t>& freq, bool cumulative) {
  if (!cumulative) freq.clear();
  for (const auto& qc : window)
    for (const auto& name : predicate_set(qc.patterns))
      if (auto id = store.graph.symbols().find(name);
          id && store.graph.partition(*id))
        ++freq[*id];

  std::vector<std::pair<TermId, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<TermId> target;
  std::size_t used = 0;
  for (const auto& [p, n] : ranked) {
    std::size_t sz = store.graph.partition_size(p);
    if (used + sz <= store.gs.budget()) {
      target.insert(p);
      used += sz;
    }
  }
  // Evict least frequent first, then load what is missing.
  std::vector<TermId> victims;
  for (TermId p : store.gs.resident_predicates())
    if (!target.contains(p)) victims.push_back(p);
  std::stable_sort(victims.begin(), victims.end(), [&](TermId a, TermId b) {
    return freq[a] < freq[b];
  });
  for (TermId p : victims) store.gs.evict(p);
  std::vector<const TriplePartition*> load;
  for (TermId p : target)
    if (!store.gs.is_resident(p)) load.push_back(store.graph.partition(p));
  store.gs.migrate_in(load);
  sync_design(store);
}

inline void tune(DualStore& store, TunerState& state, const TunerConfig& cfg,
                 const std::vector<ComplexSubquery>& batch) {
  store.design = dotil_tune(store.design, batch, store.context(), state, cfg);
}

}  // namespace detail

/// Executes the workload batch by batch, tuning between batches according
/// to `opts.tuner`. `state` carries Q-matrices in and out.
inline RunReport run_workload(DualStore& store,
                              const std::vector<WorkloadEntry>& workload,
                              const RunOptions& opts, TunerState& state) {
  opts.cfg.validate();
  const CostMode mode = opts.cfg.cost_mode;
  const auto& symbols = store.graph.symbols();

  std::vector<std::size_t> order(workload.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (opts.order == WorkloadOrder::random) {
    std::mt19937_64 rng(opts.cfg.rng_seed);
    seeded_shuffle(order, rng);
  }
  std::vector<WorkloadEntry> run;
  run.reserve(order.size());
  for (auto i : order) run.push_back(workload[i]);

  RunReport report;
  report.tuner = opts.tuner;
  report.mode = mode;
  report.order = opts.order;
  report.budget = store.gs.budget();
  for (auto c : {RouteCase::graph_only, RouteCase::split,
                 RouteCase::relational_only})
    report.routing[to_string(c)] = 0;

  const auto all_qc = detail::complex_parts(run, 0, run.size());
  const bool learns = opts.tuner == TunerKind::dotil || opts.tuner == TunerKind::ideal;
  if (learns && opts.warmup)
    store.design = warm_up(state, all_qc, store.design, store.context(), opts.cfg);
  const std::size_t history_mark = state.history.size();

  if (opts.tuner == TunerKind::oneoff) detail::tune(store, state, opts.cfg, all_qc);

  std::map<TermId, std::size_t> lru_freq;
  const auto bounds = batch_bounds(run.size(), opts.batches);
  for (std::size_t b = 0; b < bounds.size(); ++b) {
    auto [begin, end] = bounds[b];
    const auto batch_qc = detail::complex_parts(run, begin, end);
    if (opts.tuner == TunerKind::ideal) detail::tune(store, state, opts.cfg, batch_qc);

    auto exec_one = [&](std::size_t i) {
      const Query& q = run[i].query;
      auto qc = identify_complex_subquery(q);
      auto decision = route(q, qc, store.gs);
      return std::make_pair(
          qc.has_value(),
          execute_routed(decision, q, store.gs, store.rel, ExecOptions{mode, {}}));
    };

    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::pair<bool, RoutedResult>> results;
    if (opts.parallel) {
      std::vector<std::future<std::pair<bool, RoutedResult>>> pending;
      for (std::size_t i = begin; i < end; ++i)
        pending.push_back(std::async(std::launch::async, exec_one, i));
      for (auto& f : pending) results.push_back(f.get());
    } else {
      for (std::size_t i = begin; i < end; ++i) results.push_back(exec_one(i));
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();

    double batch_cost = 0, graph_cost = 0, rel_cost = 0;
    for (std::size_t i = begin; i < end; ++i) {
      auto& [has_qc, r] = results[i - begin];
      QueryRecord rec;
      rec.index = order[i];
      rec.position = i;
      rec.batch = b;
      rec.template_name = run[i].template_name;
      rec.has_complex = has_qc;
      rec.route = r.route;
      auto total = r.total();
      rec.cost = total.cost(mode);
      rec.graph_cost = r.graph_stats.cost(mode);
      rec.relational_cost = r.rel_stats.cost(mode);
      rec.op_count = total.op_count();
      rec.wall_nanos = total.wall_nanos;
      rec.rows = r.relation.size();
      rec.fingerprint = fingerprint(r.relation, symbols);
      batch_cost += rec.cost;
      graph_cost += rec.graph_cost;
      rel_cost += rec.relational_cost;
      ++report.routing[to_string(r.route)];
      report.queries.push_back(std::move(rec));
    }
    double tti = mode == CostMode::opcount ? batch_cost : static_cast<double>(elapsed);
    report.per_batch_tti.push_back(tti);
    report.per_batch_graph_cost.push_back(graph_cost);
    report.per_batch_relational_cost.push_back(rel_cost);
    report.total_tti += tti;

    switch (opts.tuner) {
      case TunerKind::dotil:
        detail::tune(store, state, opts.cfg, batch_qc);
        break;
      case TunerKind::lru:
        detail::lru_tune(store, batch_qc, lru_freq,
                         opts.lru_window == LruWindow::all);
        break;
      default:
        break;
    }
  }

  for (std::size_t i = history_mark; i < state.history.size(); ++i) {
    report.events.push_back(state.history[i]);
    if (state.history[i].decision == TuneDecision::skipped)
      report.warnings.push_back("tuner skipped query " +
                                std::to_string(state.history[i].query_id) + ": " +
                                state.history[i].note);
  }
  std::set<std::string> resident;
  for (TermId p : store.gs.resident_predicates()) resident.insert(symbols.text(p));
  report.final_resident.assign(resident.begin(), resident.end());
  return report;
}

inline nlohmann::json report_to_json(const RunReport& r, const SymbolTable& symbols) {
  using nlohmann::json;
  const bool wall = r.mode == CostMode::wallclock;
  json j;
  j["tuner"] = to_string(r.tuner);
  j["cost_mode"] = wall ? "wallclock" : "opcount";
  j["order"] = to_string(r.order);
  j["budget"] = r.budget;
  j["per_batch_tti"] = r.per_batch_tti;
  j["per_batch_graph_cost"] = r.per_batch_graph_cost;
  j["per_batch_relational_cost"] = r.per_batch_relational_cost;
  j["total_tti"] = r.total_tti;
  j["routing"] = r.routing;
  j["queries"] = json::array();
  for (const auto& q : r.queries) {
    json e = {{"index", q.index},
              {"position", q.position},
              {"batch", q.batch},
              {"template", q.template_name},
              {"has_complex", q.has_complex},
              {"route", to_string(q.route)},
              {"cost", q.cost},
              {"graph_cost", q.graph_cost},
              {"relational_cost", q.relational_cost},
              {"op_count", q.op_count},
              {"rows", q.rows},
              {"fingerprint", q.fingerprint}};
    // Wall time is only reported when it is the cost measure, so op-count
    // reports stay reproducible byte for byte.
    if (wall) e["wall_nanos"] = q.wall_nanos;
    j["queries"].push_back(std::move(e));
  }
  j["tuner_events"] = json::array();
  for (const auto& e : r.events) j["tuner_events"].push_back(event_to_json(e, symbols));
  j["final_resident"] = r.final_resident;
  j["warnings"] = r.warnings;
  return j;
}

struct FileRun {
  RunReport report;
  nlohmann::json report_json;
};

/// Loads the graph and workload, restores tuner state from `state_path` when
/// that file exists (re-mirroring its resident partitions), runs, and writes
/// the updated state back.
inline FileRun run_workload_files(const std::string& graph_path,
                                  const std::string& workload_path,
                                  const RunOptions& opts,
                                  const std::optional<std::string>& state_path) {
  opts.cfg.validate();
  auto graph = load_graph(graph_path);
  auto workload = load_workload(workload_path);
  const std::size_t budget = budget_for(graph, opts.cfg.budget_ratio);
  DualStore store(std::move(graph), budget);

  TunerState state(opts.cfg.rng_seed);
  if (state_path && std::filesystem::exists(*state_path)) {
    auto persisted = load_state(*state_path, store.graph.symbols());
    state = std::move(persisted.tuner);
    for (const auto& name : persisted.resident) {
      auto id = store.graph.symbols().find(name);
      const auto* part = id ? store.graph.partition(*id) : nullptr;
      if (part && store.gs.resident_triples() + part->size() <= store.gs.budget())
        store.gs.migrate_in(*part);
    }
    store.design.graph_partitions = store.gs.resident_predicates();
  }

  FileRun out;
  out.report = run_workload(store, workload, opts, state);
  out.report_json = report_to_json(out.report, store.graph.symbols());
  if (state_path)
    save_state(*state_path, state, store.gs.resident_predicates(),
               store.graph.symbols());
  return out;
}

}  // namespace dualkg
