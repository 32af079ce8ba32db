#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "dualkg/dualkg.hpp"
#include "support/oracle.hpp"

using namespace dualkg;

namespace {

std::set<std::string> pattern_texts(const std::vector<TriplePattern>& ps) {
  std::set<std::string> out;
  for (const auto& p : ps) out.insert(to_string(p));
  return out;
}

// Occurrence counting done the slow way: rescan the whole query per slot.
std::set<std::size_t> complex_by_hand(const Query& q) {
  auto count = [&](const std::string& v) {
    int n = 0;
    for (const auto& tp : q.patterns) {
      if (is_variable(tp.subject) && var_name(tp.subject) == v) ++n;
      if (is_variable(tp.object) && var_name(tp.object) == v) ++n;
    }
    return n;
  };
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < q.patterns.size(); ++i) {
    const auto& tp = q.patterns[i];
    if (is_variable(tp.subject) && is_variable(tp.object) &&
        count(var_name(tp.subject)) >= 2 && count(var_name(tp.object)) >= 2)
      out.insert(i);
  }
  return out;
}

}  // namespace

TEST(ParseQuery, SimplePattern) {
  auto q = parse_query("SELECT ?x WHERE{ ?x p b. }");
  ASSERT_EQ(q.select_vars, std::vector<std::string>{"x"});
  ASSERT_EQ(q.patterns.size(), 1u);
  EXPECT_EQ(q.patterns[0].subject, PatternTerm(Variable{"x"}));
  EXPECT_EQ(q.patterns[0].predicate, "p");
  EXPECT_EQ(q.patterns[0].object, PatternTerm(Constant{"b"}));
}

TEST(ParseQuery, Example1Shape) {
  auto q = parse_query(oracle::kExample1);
  EXPECT_EQ(q.select_vars, (std::vector<std::string>{"GivenName", "FamilyName"}));
  EXPECT_EQ(q.patterns.size(), 7u);
}

TEST(ParseQuery, VariablePredicateUnsupported) {
  EXPECT_THROW(parse_query("SELECT ?x WHERE{ ?x ?p b. }"), UnsupportedFeature);
}

TEST(ParseQuery, Errors) {
  EXPECT_THROW(parse_query("SELECT ?x WHERE { }"), ParseError);
  EXPECT_THROW(parse_query("SELEC ?x WHERE { ?x p b . }"), ParseError);
  EXPECT_THROW(parse_query("SELECT ?x WHERE { ?x p b . "), ParseError);
  EXPECT_THROW(parse_query("SELECT ?y WHERE { ?x p b . }"), ParseError);
  EXPECT_THROW(parse_query("SELECT ?x WHERE { \"lit\" p ?x . }"), ParseError);
  EXPECT_THROW(parse_query("SELECT ?x WHERE { ?x p b . } extra"), ParseError);
  EXPECT_THROW(parse_query("SELECT WHERE { ?x p b . }"), ParseError);
}

TEST(ParseQuery, ErrorCarriesPosition) {
  try {
    parse_query("SELECT ?x WHERE { ?x p b . junk");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GT(e.location(), 0u);
  }
}

TEST(ParseQuery, KeywordsCaseInsensitiveAndLiterals) {
  auto q = parse_query("select ?x where { ?x <http://ex/p> \"a b. c\" }");
  ASSERT_EQ(q.patterns.size(), 1u);
  EXPECT_EQ(q.patterns[0].predicate, "<http://ex/p>");
  EXPECT_EQ(const_text(q.patterns[0].object), "\"a b. c\"");
}

TEST(ComplexSubquery, Example1) {
  auto q = parse_query(oracle::kExample1);
  auto qc = identify_complex_subquery(q);
  ASSERT_TRUE(qc);
  EXPECT_EQ(qc->pattern_indices, (std::vector<std::size_t>{2, 3, 4, 5, 6}));
  EXPECT_EQ(qc->output_vars, std::vector<std::string>{"p"});
  EXPECT_EQ(predicate_set(qc->patterns),
            (std::set<std::string>{"y:wasBornIn", "y:hasAcademicAdvisor",
                                   "y:isMarriedTo"}));
}

TEST(ComplexSubquery, SingleUseVariablesAreNotComplex) {
  EXPECT_FALSE(identify_complex_subquery(parse_query("SELECT ?x WHERE{ ?x p ?y. }")));
}

TEST(ComplexSubquery, WholeQueryComplexUsesSelectVars) {
  auto q = parse_query("SELECT ?x WHERE{ ?x p ?y. ?y q ?x. }");
  auto qc = identify_complex_subquery(q);
  ASSERT_TRUE(qc);
  EXPECT_EQ(qc->patterns.size(), 2u);
  EXPECT_EQ(qc->output_vars, std::vector<std::string>{"x"});
  EXPECT_TRUE(remaining_patterns(q, *qc).empty());
}

TEST(ComplexSubquery, MatchesHandCounterOnRandomQueries) {
  std::mt19937_64 rng(3);
  auto g = oracle::random_graph(rng);
  for (int i = 0; i < 500; ++i) {
    auto q = oracle::random_query(rng, g);
    auto qc = identify_complex_subquery(q);
    auto expect = complex_by_hand(q);
    if (expect.empty()) {
      EXPECT_FALSE(qc);
      continue;
    }
    ASSERT_TRUE(qc);
    EXPECT_EQ(std::set<std::size_t>(qc->pattern_indices.begin(), qc->pattern_indices.end()),
              expect);
    auto qc_vars = variables_of(qc->patterns);
    for (const auto& v : qc->output_vars)
      EXPECT_NE(std::find(qc_vars.begin(), qc_vars.end(), v), qc_vars.end());
  }
}

TEST(ComplexSubquery, PermutationStable) {
  std::mt19937_64 rng(9);
  auto g = oracle::random_graph(rng);
  for (int i = 0; i < 200; ++i) {
    auto q = oracle::random_query(rng, g);
    auto base = identify_complex_subquery(q);
    auto shuffled = q;
    std::shuffle(shuffled.patterns.begin(), shuffled.patterns.end(), rng);
    auto other = identify_complex_subquery(shuffled);
    ASSERT_EQ(bool(base), bool(other));
    if (base) EXPECT_EQ(pattern_texts(base->patterns), pattern_texts(other->patterns));
  }
}

TEST(PredicateSet, Basics) {
  EXPECT_TRUE(predicate_set(std::vector<TriplePattern>{}).empty());
  auto q = parse_query("SELECT ?x WHERE { ?x p ?y . ?y p ?z . }");
  EXPECT_EQ(predicate_set(q.patterns), std::set<std::string>{"p"});
}

TEST(PredicateProportion, Example1Shares) {
  auto qc = *identify_complex_subquery(parse_query(oracle::kExample1));
  auto born = predicate_proportion("y:wasBornIn", qc.patterns);
  EXPECT_EQ(born.num, 3u);
  EXPECT_EQ(born.den, 5u);
  auto adv = predicate_proportion("y:hasAcademicAdvisor", qc.patterns);
  EXPECT_EQ(adv.num, 1u);
  EXPECT_EQ(adv.den, 5u);
  auto mar = predicate_proportion("y:isMarriedTo", qc.patterns);
  EXPECT_EQ(mar.num, 1u);
  EXPECT_EQ(mar.den, 5u);
}

TEST(PredicateProportion, SinglePatternAndAbsent) {
  auto q = parse_query("SELECT ?x WHERE { ?x p ?y . }");
  auto r = predicate_proportion("p", q.patterns);
  EXPECT_EQ(r.num, 1u);
  EXPECT_EQ(r.den, 1u);
  EXPECT_THROW(predicate_proportion("zz", q.patterns), Error);
}

TEST(PredicateProportion, SharesSumToOne) {
  std::mt19937_64 rng(21);
  auto g = oracle::random_graph(rng);
  for (int i = 0; i < 200; ++i) {
    auto q = oracle::random_query(rng, g);
    std::uint64_t num = 0, den = 1;
    for (const auto& p : predicate_set(q.patterns)) {
      auto r = predicate_proportion(p, q.patterns);
      num = num * r.den + r.num * den;
      den *= r.den;
    }
    EXPECT_EQ(num, den);
  }
}

TEST(PrettyPrint, RoundTripIsFixedPoint) {
  std::mt19937_64 rng(17);
  auto g = oracle::random_graph(rng);
  auto check = [](const Query& q) {
    auto again = parse_query(to_string(q));
    EXPECT_EQ(again, q);
    EXPECT_EQ(to_string(again), to_string(q));
  };
  check(parse_query(oracle::kExample1));
  check(parse_query("SELECT ?x WHERE { ?x <http://a/b> \"q \\\"x\\\" y\" . }"));
  for (int i = 0; i < 200; ++i) check(oracle::random_query(rng, g));
}
