// dualkg: command-line front end for the dual-store engine.
//
//   dualkg run      --graph F --workload F --tuner dotil ... --report F.json
//   dualkg generate --triples 100000 --graph-out F --workload-out F
//   dualkg query    --graph F --query "SELECT ..." [--store relational|graph]

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dualkg/dualkg.hpp"

namespace {

constexpr int kInputError = 2;

template <typename E>
CLI::CheckedTransformer enum_map(const std::map<std::string, E>& m) {
  return CLI::CheckedTransformer(m, CLI::ignore_case);
}

int cmd_run(const dualkg::RunOptions& opts, const std::string& graph,
            const std::string& workload, const std::string& state,
            const std::string& report_path) {
  std::optional<std::string> state_path;
  if (!state.empty()) state_path = state;
  auto result = dualkg::run_workload_files(graph, workload, opts, state_path);
  const std::string text = result.report_json.dump(2);
  if (report_path.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream out(report_path);
    if (!out) throw dualkg::Error("cannot write report: " + report_path);
    out << text << '\n';
    const auto& r = result.report;
    std::cerr << "tuner=" << dualkg::to_string(r.tuner) << " total_tti=" << r.total_tti
              << " graph_only=" << r.routing.at("graph_only")
              << " split=" << r.routing.at("split")
              << " relational_only=" << r.routing.at("relational_only") << '\n';
  }
  return 0;
}

int cmd_generate(const dualkg::SyntheticConfig& cfg, const std::string& graph_out,
                 const std::string& workload_out) {
  auto data = dualkg::generate_synthetic(cfg);
  std::ofstream g(graph_out);
  if (!g) throw dualkg::Error("cannot write " + graph_out);
  dualkg::write_triples(g, data.graph);
  std::ofstream w(workload_out);
  if (!w) throw dualkg::Error("cannot write " + workload_out);
  w << dualkg::format_workload(data.workload);
  std::cerr << data.graph.triple_count() << " triples in "
            << data.graph.partitions().size() << " partitions, "
            << data.workload.size() << " queries\n";
  return 0;
}

int cmd_query(const std::string& graph_path, const std::string& text,
              const std::string& store_kind) {
  auto graph = dualkg::load_graph(graph_path);
  auto q = dualkg::parse_query(text);
  const std::size_t everything = graph.triple_count();
  dualkg::DualStore store(std::move(graph), everything);
  dualkg::ExecResult res;
  if (store_kind == "graph") {
    std::vector<const dualkg::TriplePartition*> all;
    for (const auto& [p, part] : store.graph.partitions()) all.push_back(&part);
    store.gs.migrate_in(all);
    res = dualkg::graph_execute(store.gs, q.patterns, q.select_vars);
  } else {
    res = dualkg::rel_execute(store.rel, q.patterns, q.select_vars);
  }
  const auto& sym = store.graph.symbols();
  for (std::size_t c = 0; c < res.relation.width(); ++c)
    std::cout << (c ? "\t" : "") << "?" << res.relation.columns()[c];
  std::cout << '\n';
  for (std::size_t i = 0; i < res.relation.size(); ++i) {
    auto row = res.relation.row(i);
    for (std::size_t c = 0; c < row.size(); ++c)
      std::cout << (c ? "\t" : "") << sym.text(row[c]);
    std::cout << '\n';
  }
  std::cerr << res.relation.size() << " rows, op_count=" << res.stats.op_count()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-store knowledge graph engine with a Q-learning tuner"};
  app.require_subcommand(1);

  dualkg::RunOptions opts;
  std::string graph, workload, state, report;
  std::string cost_mode = "opcount";
  std::string order = "ordered";
  std::string lru_window = "batch";

  auto* run = app.add_subcommand("run", "Execute a workload batch by batch with tuning");
  run->add_option("--graph", graph, "Triple file (TSV)")->required();
  run->add_option("--workload", workload, "Workload file")->required();
  run->add_option("--tuner", opts.tuner, "dotil|oneoff|lru|ideal|none")
      ->transform(enum_map<dualkg::TunerKind>({{"dotil", dualkg::TunerKind::dotil},
                                               {"oneoff", dualkg::TunerKind::oneoff},
                                               {"lru", dualkg::TunerKind::lru},
                                               {"ideal", dualkg::TunerKind::ideal},
                                               {"none", dualkg::TunerKind::none}}));
  run->add_option("--alpha", opts.cfg.alpha, "Learning rate")->capture_default_str();
  run->add_option("--gamma", opts.cfg.gamma, "Discount factor")->capture_default_str();
  run->add_option("--lambda", opts.cfg.lambda, "Relational/graph cost cap ratio")
      ->capture_default_str();
  run->add_option("--prob", opts.cfg.prob, "Initial transfer probability")
      ->capture_default_str();
  run->add_option("--budget-ratio", opts.cfg.budget_ratio,
                  "Graph store budget as a fraction of all triples")
      ->capture_default_str();
  run->add_option("--seed", opts.cfg.rng_seed, "RNG seed")->capture_default_str();
  run->add_option("--cost-mode", cost_mode, "opcount|wallclock")
      ->check(CLI::IsMember({"opcount", "wallclock"}))
      ->capture_default_str();
  run->add_option("--batches", opts.batches, "Number of batches")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--order", order, "ordered|random")
      ->check(CLI::IsMember({"ordered", "random"}))
      ->capture_default_str();
  run->add_option("--lru-window", lru_window, "batch|all")
      ->check(CLI::IsMember({"batch", "all"}))
      ->capture_default_str();
  run->add_flag("--warmup", opts.warmup,
                "Warm the Q-learning tuner on the workload's complex subqueries first");
  run->add_flag("--parallel", opts.parallel, "Execute each batch's queries concurrently");
  run->add_option("--state", state, "Tuner state file (read if present, then written)");
  run->add_option("--report", report, "Report JSON path (stdout if omitted)");

  dualkg::SyntheticConfig syn;
  std::string graph_out, workload_out;
  auto* gen = app.add_subcommand("generate", "Write a synthetic graph and workload");
  gen->add_option("--triples", syn.target_triples, "Approximate triple count")
      ->capture_default_str();
  gen->add_option("--mutations", syn.mutations, "Variants per template")
      ->capture_default_str();
  gen->add_option("--seed", syn.seed, "Generator seed")->capture_default_str();
  gen->add_option("--graph-out", graph_out, "Triple file to write")->required();
  gen->add_option("--workload-out", workload_out, "Workload file to write")->required();

  std::string query_text, store_kind = "relational";
  auto* qry = app.add_subcommand("query", "Run one query against a triple file");
  qry->add_option("--graph", graph, "Triple file (TSV)")->required();
  qry->add_option("--query", query_text, "Query text")->required();
  qry->add_option("--store", store_kind, "relational|graph")
      ->check(CLI::IsMember({"relational", "graph"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }

  opts.cfg.cost_mode =
      cost_mode == "wallclock" ? dualkg::CostMode::wallclock : dualkg::CostMode::opcount;
  opts.order = order == "random" ? dualkg::WorkloadOrder::random
                                 : dualkg::WorkloadOrder::ordered;
  opts.lru_window = lru_window == "all" ? dualkg::LruWindow::all : dualkg::LruWindow::batch;

  try {
    if (*run) return cmd_run(opts, graph, workload, state, report);
    if (*gen) return cmd_generate(syn, graph_out, workload_out);
    if (*qry) return cmd_query(graph, query_text, store_kind);
  } catch (const dualkg::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const dualkg::UnsupportedFeature& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const dualkg::ConfigError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const dualkg::StateFormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const dualkg::Error& e) {
    // Missing or unreadable files land here.
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return 0;
}
