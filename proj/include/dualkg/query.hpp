#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "dualkg/error.hpp"

namespace dualkg {

struct Variable {
  std::string name;  // without the leading '?'
  friend bool operator==(const Variable&, const Variable&) = default;
};

struct Constant {
  std::string text;  // surface form, literals keep their quotes
  friend bool operator==(const Constant&, const Constant&) = default;
};

using PatternTerm = std::variant<Variable, Constant>;

inline bool is_variable(const PatternTerm& t) {
  return std::holds_alternative<Variable>(t);
}
inline const std::string& var_name(const PatternTerm& t) {
  return std::get<Variable>(t).name;
}
inline const std::string& const_text(const PatternTerm& t) {
  return std::get<Constant>(t).text;
}

/// Predicates are always bound: partitions are keyed by predicate.
struct TriplePattern {
  PatternTerm subject;
  std::string predicate;
  PatternTerm object;
  friend bool operator==(const TriplePattern&, const TriplePattern&) = default;
};

struct Query {
  std::vector<std::string> select_vars;
  std::vector<TriplePattern> patterns;
  friend bool operator==(const Query&, const Query&) = default;
};

struct ComplexSubquery {
  std::vector<std::size_t> pattern_indices;  // positions in the parent query
  std::vector<TriplePattern> patterns;
  std::vector<std::string> output_vars;
};

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const { return static_cast<double>(num) / den; }
  friend bool operator==(const Ratio& a, const Ratio& b) {
    return a.num * b.den == b.num * a.den;
  }
};

namespace detail {

class QueryLexer {
 public:
  explicit QueryLexer(std::string_view text) : text_(text) {}

  struct Token {
    enum Kind { word, var, iri, literal, lbrace, rbrace, dot, end } kind;
    std::string text;
    std::size_t pos;
  };

  Token next() {
    skip_space();
    std::size_t start = pos_;
    if (pos_ >= text_.size()) return {Token::end, "", start};
    char c = text_[pos_];
    if (c == '{') return ++pos_, Token{Token::lbrace, "{", start};
    if (c == '}') return ++pos_, Token{Token::rbrace, "}", start};
    if (c == '.' && ends_token(pos_ + 1))
      return ++pos_, Token{Token::dot, ".", start};
    if (c == '"') return {Token::literal, read_literal(), start};
    if (c == '<') return {Token::iri, read_angle(), start};
    if (c == '?') {
      ++pos_;
      std::string name = read_bare();
      if (name.empty()) throw ParseError("empty variable name", start);
      return {Token::var, name, start};
    }
    std::string word = read_bare();
    if (word.empty())
      throw ParseError(std::string("unexpected character '") + c + "'", start);
    return {Token::word, word, start};
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool ends_token(std::size_t at) const {
    return at >= text_.size() ||
           std::isspace(static_cast<unsigned char>(text_[at])) ||
           text_[at] == '}' || text_[at] == '{';
  }

  // A trailing '.' followed by a delimiter is a pattern separator.
  std::string read_bare() {
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '{' || c == '}')
        break;
      if (c == '.' && ends_token(pos_ + 1)) break;
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string read_literal() {
    std::size_t start = pos_++;
    while (pos_ < text_.size()) {
      char c = text_[pos_++];
      if (c == '\\') {
        ++pos_;
      } else if (c == '"') {
        return std::string(text_.substr(start, pos_ - start));
      }
    }
    throw ParseError("unterminated literal", start);
  }

  std::string read_angle() {
    std::size_t start = pos_;
    std::size_t close = text_.find('>', pos_);
    if (close == std::string_view::npos)
      throw ParseError("unterminated IRI", start);
    pos_ = close + 1;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline bool keyword_is(const QueryLexer::Token& t, std::string_view kw) {
  if (t.kind != QueryLexer::Token::word || t.text.size() != kw.size())
    return false;
  for (std::size_t i = 0; i < kw.size(); ++i)
    if (std::toupper(static_cast<unsigned char>(t.text[i])) != kw[i])
      return false;
  return true;
}

}  // namespace detail

/// Parses `SELECT ?v... WHERE { s p o . ... }`. Keywords are
/// case-insensitive; the final '.' is optional.
inline Query parse_query(std::string_view text) {
  using Token = detail::QueryLexer::Token;
  detail::QueryLexer lex(text);
  Query q;

  Token t = lex.next();
  if (!detail::keyword_is(t, "SELECT"))
    throw ParseError("expected SELECT", t.pos);
  t = lex.next();
  while (t.kind == Token::var) {
    q.select_vars.push_back(t.text);
    t = lex.next();
  }
  if (q.select_vars.empty())
    throw ParseError("SELECT needs at least one variable", t.pos);
  if (!detail::keyword_is(t, "WHERE")) throw ParseError("expected WHERE", t.pos);
  t = lex.next();
  if (t.kind != Token::lbrace) throw ParseError("expected '{'", t.pos);

  auto to_term = [](const Token& tok) -> PatternTerm {
    switch (tok.kind) {
      case Token::var:
        return Variable{tok.text};
      case Token::word:
      case Token::iri:
      case Token::literal:
        return Constant{tok.text};
      default:
        throw ParseError("expected a term", tok.pos);
    }
  };

  t = lex.next();
  while (t.kind != Token::rbrace) {
    if (t.kind == Token::end) throw ParseError("expected '}'", t.pos);
    TriplePattern tp;
    tp.subject = to_term(t);
    if (!is_variable(tp.subject) && const_text(tp.subject).front() == '"')
      throw ParseError("literal in subject position", t.pos);
    Token pred = lex.next();
    if (pred.kind == Token::var)
      throw UnsupportedFeature("variable predicate ?" + pred.text +
                               " is not supported");
    if (pred.kind != Token::word && pred.kind != Token::iri)
      throw ParseError("expected a predicate IRI", pred.pos);
    tp.predicate = pred.text;
    tp.object = to_term(lex.next());
    q.patterns.push_back(std::move(tp));

    t = lex.next();
    if (t.kind == Token::dot) {
      t = lex.next();
    } else if (t.kind != Token::rbrace) {
      throw ParseError("expected '.' or '}'", t.pos);
    }
  }
  if (q.patterns.empty()) throw ParseError("empty WHERE clause", t.pos);
  t = lex.next();
  if (t.kind != Token::end)
    throw ParseError("trailing input after '}'", t.pos);

  for (const auto& v : q.select_vars) {
    bool found = std::any_of(q.patterns.begin(), q.patterns.end(),
                             [&](const TriplePattern& tp) {
                               return (is_variable(tp.subject) &&
                                       var_name(tp.subject) == v) ||
                                      (is_variable(tp.object) &&
                                       var_name(tp.object) == v);
                             });
    if (!found)
      throw ParseError("selected variable ?" + v + " does not occur in WHERE",
                       0);
  }
  return q;
}

inline std::string to_string(const PatternTerm& t) {
  return is_variable(t) ? "?" + var_name(t) : const_text(t);
}

inline std::string to_string(const TriplePattern& tp) {
  return to_string(tp.subject) + " " + tp.predicate + " " +
         to_string(tp.object);
}

inline std::string to_string(const Query& q) {
  std::string out = "SELECT";
  for (const auto& v : q.select_vars) out += " ?" + v;
  out += " WHERE {";
  for (const auto& tp : q.patterns) out += " " + to_string(tp) + " .";
  out += " }";
  return out;
}

/// Distinct variables of `patterns` in first-appearance order.
inline std::vector<std::string> variables_of(
    std::span<const TriplePattern> patterns) {
  std::vector<std::string> vars;
  auto note = [&](const PatternTerm& t) {
    if (is_variable(t) &&
        std::find(vars.begin(), vars.end(), var_name(t)) == vars.end())
      vars.push_back(var_name(t));
  };
  for (const auto& tp : patterns) {
    note(tp.subject);
    note(tp.object);
  }
  return vars;
}

/// A pattern is complex when both its subject and object are variables that
/// occur at least twice across the subject/object slots of the WHERE clause.
inline std::optional<ComplexSubquery> identify_complex_subquery(
    const Query& q) {
  std::unordered_map<std::string, int> occurrences;
  for (const auto& tp : q.patterns) {
    if (is_variable(tp.subject)) ++occurrences[var_name(tp.subject)];
    if (is_variable(tp.object)) ++occurrences[var_name(tp.object)];
  }
  auto repeated = [&](const PatternTerm& t) {
    return is_variable(t) && occurrences[var_name(t)] >= 2;
  };

  ComplexSubquery qc;
  std::vector<TriplePattern> rest;
  for (std::size_t i = 0; i < q.patterns.size(); ++i) {
    const auto& tp = q.patterns[i];
    if (repeated(tp.subject) && repeated(tp.object)) {
      qc.pattern_indices.push_back(i);
      qc.patterns.push_back(tp);
    } else {
      rest.push_back(tp);
    }
  }
  if (qc.patterns.empty()) return std::nullopt;

  if (rest.empty()) {
    qc.output_vars = q.select_vars;
  } else {
    auto rest_vars = variables_of(rest);
    for (const auto& v : variables_of(qc.patterns))
      if (std::find(rest_vars.begin(), rest_vars.end(), v) != rest_vars.end())
        qc.output_vars.push_back(v);
  }
  return qc;
}

/// Patterns of `q` that are not part of `qc`, in query order.
inline std::vector<TriplePattern> remaining_patterns(const Query& q,
                                                     const ComplexSubquery& qc) {
  std::vector<TriplePattern> rest;
  for (std::size_t i = 0; i < q.patterns.size(); ++i)
    if (std::find(qc.pattern_indices.begin(), qc.pattern_indices.end(), i) ==
        qc.pattern_indices.end())
      rest.push_back(q.patterns[i]);
  return rest;
}

inline std::set<std::string> predicate_set(
    std::span<const TriplePattern> patterns) {
  std::set<std::string> preds;
  for (const auto& tp : patterns) preds.insert(tp.predicate);
  return preds;
}

/// Share of `patterns` whose predicate is `predicate`, as a reduced ratio.
inline Ratio predicate_proportion(std::string_view predicate,
                                  std::span<const TriplePattern> patterns) {
  std::uint64_t hits = 0;
  for (const auto& tp : patterns)
    if (tp.predicate == predicate) ++hits;
  if (hits == 0)
    throw Error("predicate " + std::string(predicate) +
                " does not occur in the query");
  std::uint64_t total = patterns.size();
  std::uint64_t g = std::gcd(hits, total);
  return {hits / g, total / g};
}

}  // namespace dualkg
