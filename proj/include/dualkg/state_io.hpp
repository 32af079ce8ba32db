#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dualkg/error.hpp"
#include "dualkg/kg_core.hpp"
#include "dualkg/tuner.hpp"

namespace dualkg {

inline constexpr const char* kStateFormat = "dualkg-tuner-state";
inline constexpr int kStateVersion = 1;

/// Tuner state plus the resident set, so a later run can rebuild the graph
/// store it was tuned against.
struct PersistedState {
  TunerState tuner;
  std::vector<std::string> resident;
};

namespace detail {

using nlohmann::json;

inline json names(const std::vector<TermId>& ids, const SymbolTable& symbols) {
  json out = json::array();
  for (TermId id : ids) out.push_back(symbols.text(id));
  return out;
}

inline std::vector<TermId> ids(const json& j, SymbolTable& symbols) {
  std::vector<TermId> out;
  for (const auto& n : j) out.push_back(symbols.intern(n.get<std::string>()));
  return out;
}

inline Ratio parse_ratio(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) throw StateFormatError("bad ratio: " + s);
  return {std::stoull(s.substr(0, slash)), std::stoull(s.substr(slash + 1))};
}

}  // namespace detail

inline nlohmann::json event_to_json(const TuneEvent& e,
                                    const SymbolTable& symbols) {
  using nlohmann::json;
  json j;
  j["query_id"] = e.query_id;
  j["decision"] = to_string(e.decision);
  j["partitions"] = detail::names(e.partitions, symbols);
  j["transferred"] = detail::names(e.transferred, symbols);
  j["evicted"] = detail::names(e.evicted, symbols);
  j["probes"] = json::array();
  for (const auto& p : e.probes)
    j["probes"].push_back({{"c1", p.c1}, {"c2", p.c2}, {"capped", p.capped}});
  j["updates"] = json::array();
  for (const auto& u : e.updates)
    j["updates"].push_back(
        {{"predicate", symbols.text(u.predicate)},
         {"state", u.state},
         {"action", u.action},
         {"share", std::to_string(u.share.num) + "/" + std::to_string(u.share.den)},
         {"reward", u.reward},
         {"before", u.before},
         {"after", u.after}});
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

inline TuneEvent event_from_json(const nlohmann::json& j, SymbolTable& symbols) {
  TuneEvent e;
  e.query_id = j.at("query_id").get<std::uint64_t>();
  const auto d = j.at("decision").get<std::string>();
  if (d == "kept_resident") e.decision = TuneDecision::kept_resident;
  else if (d == "transferred") e.decision = TuneDecision::transferred;
  else if (d == "declined") e.decision = TuneDecision::declined;
  else if (d == "skipped") e.decision = TuneDecision::skipped;
  else throw StateFormatError("unknown decision: " + d);
  e.partitions = detail::ids(j.at("partitions"), symbols);
  e.transferred = detail::ids(j.at("transferred"), symbols);
  e.evicted = detail::ids(j.at("evicted"), symbols);
  for (const auto& p : j.at("probes"))
    e.probes.push_back({p.at("c1").get<double>(), p.at("c2").get<double>(),
                        p.at("capped").get<bool>()});
  for (const auto& u : j.at("updates"))
    e.updates.push_back({symbols.intern(u.at("predicate").get<std::string>()),
                         u.at("state").get<int>(), u.at("action").get<int>(),
                         detail::parse_ratio(u.at("share").get<std::string>()),
                         u.at("reward").get<double>(), u.at("before").get<double>(),
                         u.at("after").get<double>()});
  if (j.contains("note")) e.note = j.at("note").get<std::string>();
  return e;
}

inline nlohmann::json state_to_json(const TunerState& state,
                                    const std::set<TermId>& resident,
                                    const SymbolTable& symbols) {
  using nlohmann::json;
  json j;
  j["format"] = kStateFormat;
  j["version"] = kStateVersion;
  j["seed"] = state.seed;
  std::ostringstream rng;
  rng << state.rng;
  j["rng"] = rng.str();
  j["next_query_id"] = state.next_query_id;
  j["matrices"] = json::object();
  for (const auto& [p, m] : state.matrices)
    j["matrices"][symbols.text(p)] = {{m.q[0][0], m.q[0][1]},
                                      {m.q[1][0], m.q[1][1]}};
  json res = json::array();
  std::set<std::string> sorted;
  for (TermId p : resident) sorted.insert(symbols.text(p));
  for (const auto& s : sorted) res.push_back(s);
  j["resident"] = res;
  j["history"] = json::array();
  for (const auto& e : state.history) j["history"].push_back(event_to_json(e, symbols));
  return j;
}

inline PersistedState state_from_json(const nlohmann::json& j,
                                      SymbolTable& symbols) {
  try {
    if (j.at("format").get<std::string>() != kStateFormat)
      throw StateFormatError("not a tuner state document");
    if (j.at("version").get<int>() != kStateVersion)
      throw StateFormatError("unsupported tuner state version " +
                             std::to_string(j.at("version").get<int>()));
    PersistedState out;
    out.tuner = TunerState(j.at("seed").get<std::uint64_t>());
    std::istringstream rng(j.at("rng").get<std::string>());
    rng >> out.tuner.rng;
    if (!rng) throw StateFormatError("corrupt rng state");
    out.tuner.next_query_id = j.at("next_query_id").get<std::uint64_t>();
    for (const auto& [name, m] : j.at("matrices").items()) {
      QMatrix q;
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) q.q[s][a] = m.at(s).at(a).get<double>();
      out.tuner.matrices[symbols.intern(name)] = q;
    }
    for (const auto& r : j.at("resident")) out.resident.push_back(r.get<std::string>());
    for (const auto& e : j.at("history"))
      out.tuner.history.push_back(event_from_json(e, symbols));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw StateFormatError(std::string("malformed tuner state: ") + e.what());
  }
}

inline void save_state(const std::string& path, const TunerState& state,
                       const std::set<TermId>& resident,
                       const SymbolTable& symbols) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write tuner state: " + path);
  out << state_to_json(state, resident, symbols).dump(2) << '\n';
}

inline PersistedState load_state(const std::string& path, SymbolTable& symbols) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open tuner state: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw StateFormatError(std::string("corrupt tuner state: ") + e.what());
  }
  return state_from_json(j, symbols);
}

}  // namespace dualkg
