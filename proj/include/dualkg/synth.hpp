#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "dualkg/harness.hpp"
#include "dualkg/kg_core.hpp"

namespace dualkg {

/// Knobs for the synthetic people/places/organisations graph and its
/// template workload.
struct SyntheticConfig {
  std::size_t target_triples = 100000;
  std::size_t mutations = 4;  // variants generated per template
  std::uint64_t seed = 7;
};

struct SyntheticData {
  KnowledgeGraph graph;
  std::vector<WorkloadEntry> workload;  // templates clustered, file order
};

namespace detail {

enum class Pool { person, city, country, org, work, prize, given, family, gender };

struct PoolSpec {
  Pool pool;
  const char* prefix;
  double per_scale;  // entity count at scale 1.0
  bool literal;
};

inline constexpr PoolSpec kPools[] = {
    {Pool::person, "kg:person_", 8000, false}, {Pool::city, "kg:city_", 400, false},
    {Pool::country, "kg:country_", 60, false}, {Pool::org, "kg:org_", 600, false},
    {Pool::work, "kg:work_", 3000, false},     {Pool::prize, "kg:prize_", 50, false},
    {Pool::given, "Given_", 500, true},        {Pool::family, "Family_", 1000, true},
    {Pool::gender, "Gender_", 2, true},
};

struct PredicateSpec {
  const char* name;
  Pool domain;
  Pool range;
  double per_domain;  // triples per domain entity; 1.0 with `functional`
  bool functional;
};

// Five per-person attributes plus fifteen relationships: 20 predicates,
// about 84k triples at scale 1.0.
inline constexpr PredicateSpec kPredicates[] = {
    {"y:hasGivenName", Pool::person, Pool::given, 1.0, true},
    {"y:hasFamilyName", Pool::person, Pool::family, 1.0, true},
    {"y:wasBornIn", Pool::person, Pool::city, 1.0, true},
    {"y:hasGender", Pool::person, Pool::gender, 1.0, true},
    {"y:isCitizenOf", Pool::person, Pool::country, 1.0, true},
    {"y:livesIn", Pool::person, Pool::city, 0.75, false},
    {"y:hasAcademicAdvisor", Pool::person, Pool::person, 0.25, false},
    {"y:isMarriedTo", Pool::person, Pool::person, 0.3, false},
    {"y:worksAt", Pool::person, Pool::org, 0.75, false},
    {"y:isLocatedIn", Pool::org, Pool::city, 1.0, true},
    {"y:graduatedFrom", Pool::person, Pool::org, 0.6, false},
    {"y:hasChild", Pool::person, Pool::person, 0.3, false},
    {"y:influences", Pool::person, Pool::person, 0.25, false},
    {"y:created", Pool::person, Pool::work, 0.4, false},
    {"y:hasWonPrize", Pool::person, Pool::prize, 0.2, false},
    {"y:actedIn", Pool::person, Pool::work, 0.75, false},
    {"y:directed", Pool::person, Pool::work, 0.12, false},
    {"y:owns", Pool::org, Pool::org, 1.3, false},
    {"y:isLeaderOf", Pool::org, Pool::person, 1.0, false},
    {"y:playsFor", Pool::person, Pool::org, 0.5, false},
};

inline constexpr double kTriplesAtUnitScale = 83340.0;

struct TemplateSpec {
  const char* name;
  const char* text;
};

// C*: contain a complex subquery. Their complex parts draw on one hot set
// of relationship predicates (wasBornIn, hasAcademicAdvisor, isMarriedTo,
// hasChild, influences, directed, isLeaderOf, owns, isLocatedIn), several
// of them self-joined. S*: selective lookups without one.
inline constexpr TemplateSpec kTemplates[] = {
    {"C1_born_advisor_spouse",
     "SELECT ?g ?f WHERE { ?p y:hasGivenName ?g . ?p y:hasFamilyName ?f . "
     "?p y:wasBornIn ?city . ?p y:hasAcademicAdvisor ?a . ?a y:wasBornIn ?city . "
     "?p y:isMarriedTo ?p2 . ?p2 y:wasBornIn ?city . }"},
    {"C2_family_hometown",
     "SELECT ?g WHERE { ?p y:hasGivenName ?g . ?p y:isMarriedTo ?q . "
     "?p y:wasBornIn ?c . ?q y:wasBornIn ?c . ?p y:hasChild ?k . ?k y:wasBornIn ?c . }"},
    {"C3_influence_chain",
     "SELECT ?c WHERE { ?a y:influences ?b . ?b y:influences ?c . "
     "?a y:hasAcademicAdvisor ?c . ?a y:hasGender \"Gender_1\" . }"},
    {"C4_codirector_spouse",
     "SELECT ?f WHERE { ?p y:directed ?w . ?q y:directed ?w . "
     "?p y:isMarriedTo ?q . ?p y:hasFamilyName ?f . }"},
    {"C5_shared_advisor",
     "SELECT ?n WHERE { ?x y:hasChild ?y . ?x y:hasAcademicAdvisor ?a . "
     "?y y:hasAcademicAdvisor ?a . ?y y:hasGivenName ?n . }"},
    {"C6_leader_owner",
     "SELECT ?p WHERE { ?o y:isLeaderOf ?p . ?o y:owns ?o2 . "
     "?o2 y:isLeaderOf ?p . ?p y:isCitizenOf kg:country_3 . }"},
    {"C7_compatriot_influence",
     "SELECT ?p ?q WHERE { ?p y:influences ?q . ?p y:wasBornIn ?c . "
     "?q y:wasBornIn ?c . ?q y:hasWonPrize kg:prize_7 . }"},
    {"C8_hometown_leader",
     "SELECT ?f WHERE { ?o y:isLeaderOf ?p . ?o y:isLocatedIn ?c . "
     "?p y:wasBornIn ?c . ?p y:hasFamilyName ?f . }"},
    {"S1_born_in", "SELECT ?p WHERE { ?p y:wasBornIn kg:city_5 . }"},
    {"S2_local_workers",
     "SELECT ?p ?o WHERE { ?p y:worksAt ?o . ?p y:livesIn kg:city_9 . }"},
    {"S3_roles", "SELECT ?w WHERE { kg:person_10 y:actedIn ?w . }"},
    {"S4_org_city", "SELECT ?c WHERE { kg:org_3 y:isLocatedIn ?c . }"},
    {"S5_laureates", "SELECT ?p WHERE { ?p y:hasWonPrize kg:prize_2 . }"},
    {"S6_children", "SELECT ?x WHERE { kg:person_20 y:hasChild ?x . }"},
    {"S7_citizens",
     "SELECT ?p ?g WHERE { ?p y:isCitizenOf kg:country_7 . ?p y:hasGivenName ?g . }"},
    {"S8_holdings", "SELECT ?o WHERE { kg:org_5 y:owns ?o . }"},
    {"S9_directors", "SELECT ?p WHERE { ?p y:directed kg:work_12 . }"},
    {"S10_works", "SELECT ?w WHERE { kg:person_33 y:created ?w . }"},
    {"S11_alma_mater", "SELECT ?u WHERE { kg:person_44 y:graduatedFrom ?u . }"},
    {"S12_roster", "SELECT ?p WHERE { ?p y:playsFor kg:org_8 . }"},
};

inline std::string entity(Pool pool, std::size_t i) {
  for (const auto& spec : kPools)
    if (spec.pool == pool) {
      std::string s = std::string(spec.prefix) + std::to_string(i);
      return spec.literal ? "\"" + s + "\"" : s;
    }
  return {};
}

}  // namespace detail

/// Deterministic graph of roughly `target_triples` triples over 20
/// predicates, and a workload of 20 templates (8 with complex subqueries)
/// each followed by its mutations.
inline SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  using namespace detail;
  const double scale = static_cast<double>(cfg.target_triples) / kTriplesAtUnitScale;
  std::mt19937_64 rng(cfg.seed);

  auto pool_size = [&](Pool p) -> std::size_t {
    for (const auto& spec : kPools)
      if (spec.pool == p)
        return spec.literal ? static_cast<std::size_t>(spec.per_scale)
                            : std::max<std::size_t>(
                                  1, static_cast<std::size_t>(
                                         std::llround(spec.per_scale * scale)));
    return 1;
  };

  SyntheticData out;
  for (const auto& pred : kPredicates) {
    const std::size_t dom = pool_size(pred.domain);
    const std::size_t rng_size = pool_size(pred.range);
    if (pred.functional) {
      for (std::size_t i = 0; i < dom; ++i)
        out.graph.add(entity(pred.domain, i), pred.name,
                      entity(pred.range, rng() % rng_size));
    } else {
      auto n = static_cast<std::size_t>(std::llround(pred.per_domain * dom));
      for (std::size_t k = 0; k < n; ++k) {
        std::size_t s = rng() % dom;
        std::size_t o = rng() % rng_size;
        if (pred.domain == pred.range && s == o) o = (o + 1) % rng_size;
        out.graph.add(entity(pred.domain, s), pred.name, entity(pred.range, o));
      }
    }
  }

  std::uint64_t mut_seed = cfg.seed * 1000003ULL;
  for (const auto& t : kTemplates) {
    Query q = parse_query(t.text);
    out.workload.push_back({t.name, q});
    for (auto& m : generate_mutations(q, cfg.mutations, ++mut_seed, out.graph))
      out.workload.push_back({t.name, std::move(m)});
  }
  return out;
}

inline void write_triples(std::ostream& out, const KnowledgeGraph& g) {
  const auto& sym = g.symbols();
  for (const auto& [p, part] : g.partitions())
    for (const auto& t : part.triples())
      out << sym.text(t.subject) << '\t' << sym.text(t.predicate) << '\t'
          << sym.text(t.object) << '\n';
}

}  // namespace dualkg
