#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dualkg/error.hpp"

namespace dualkg {

enum class TermId : std::uint32_t {};
enum class TermKind : std::uint8_t { iri, literal };

inline std::uint32_t raw(TermId id) { return static_cast<std::uint32_t>(id); }

// Literals keep their surrounding quotes; anything else is an opaque IRI.
inline TermKind kind_of(std::string_view surface) {
  return (!surface.empty() && surface.front() == '"') ? TermKind::literal
                                                      : TermKind::iri;
}

/// Bijective string <-> id interning shared by every store of one engine.
class SymbolTable {
 public:
  TermId intern(std::string_view text) {
    std::string key(text);
    if (auto it = ids_.find(key); it != ids_.end()) return it->second;
    auto id = static_cast<TermId>(names_.size());
    names_.push_back(key);
    ids_.emplace(std::move(key), id);
    return id;
  }

  std::optional<TermId> find(std::string_view text) const {
    if (auto it = ids_.find(std::string(text)); it != ids_.end())
      return it->second;
    return std::nullopt;
  }

  const std::string& text(TermId id) const { return names_.at(raw(id)); }
  TermKind kind(TermId id) const { return kind_of(text(id)); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, TermId> ids_;
};

struct Triple {
  TermId subject;
  TermId predicate;
  TermId object;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

inline std::size_t hash_combine(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::size_t h = std::hash<std::uint32_t>{}(raw(t.subject));
    h = hash_combine(h, raw(t.predicate));
    return hash_combine(h, raw(t.object));
  }
};

/// All triples sharing one predicate, in insertion order. The unit that
/// moves between the two stores.
class TriplePartition {
 public:
  explicit TriplePartition(TermId predicate) : predicate_(predicate) {}

  TermId predicate() const { return predicate_; }
  const std::vector<Triple>& triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  bool contains(const Triple& t) const { return members_.contains(t); }

  // Returns false when the triple is already present.
  bool add(const Triple& t) {
    if (t.predicate != predicate_)
      throw Error("triple predicate does not match partition predicate");
    if (!members_.insert(t).second) return false;
    triples_.push_back(t);
    return true;
  }

 private:
  TermId predicate_;
  std::vector<Triple> triples_;
  std::unordered_set<Triple, TripleHash> members_;
};

class KnowledgeGraph {
 public:
  explicit KnowledgeGraph(
      std::shared_ptr<SymbolTable> symbols = std::make_shared<SymbolTable>())
      : symbols_(std::move(symbols)) {}

  bool add(const Triple& t) {
    auto it = partitions_.find(t.predicate);
    if (it == partitions_.end())
      it = partitions_.emplace(t.predicate, TriplePartition(t.predicate)).first;
    bool added = it->second.add(t);
    if (added) ++triple_count_;
    return added;
  }

  // Interns the three surface strings; rejects literal subjects/predicates.
  Triple make_triple(std::string_view s, std::string_view p,
                     std::string_view o) {
    if (kind_of(s) != TermKind::iri) throw Error("subject must be an IRI");
    if (kind_of(p) != TermKind::iri) throw Error("predicate must be an IRI");
    return Triple{symbols_->intern(s), symbols_->intern(p), symbols_->intern(o)};
  }

  bool add(std::string_view s, std::string_view p, std::string_view o) {
    return add(make_triple(s, p, o));
  }

  const std::map<TermId, TriplePartition>& partitions() const {
    return partitions_;
  }

  const TriplePartition* partition(TermId predicate) const {
    auto it = partitions_.find(predicate);
    return it == partitions_.end() ? nullptr : &it->second;
  }

  std::size_t partition_size(TermId predicate) const {
    const auto* p = partition(predicate);
    return p ? p->size() : 0;
  }

  std::size_t triple_count() const { return triple_count_; }

  SymbolTable& symbols() { return *symbols_; }
  const SymbolTable& symbols() const { return *symbols_; }
  const std::shared_ptr<SymbolTable>& shared_symbols() const { return symbols_; }

 private:
  std::shared_ptr<SymbolTable> symbols_;
  std::map<TermId, TriplePartition> partitions_;
  std::size_t triple_count_ = 0;
};

inline std::map<TermId, std::size_t> partition_sizes(const KnowledgeGraph& g) {
  std::map<TermId, std::size_t> sizes;
  for (const auto& [p, part] : g.partitions()) sizes.emplace(p, part.size());
  return sizes;
}

/// <T_R, T_G>: T_R always holds every partition; T_G is the mirrored subset.
struct DualStoreDesign {
  std::set<TermId> relational_partitions;
  std::set<TermId> graph_partitions;
  std::size_t budget = 0;

  bool graph_within_relational() const {
    for (TermId p : graph_partitions)
      if (!relational_partitions.contains(p)) return false;
    return true;
  }
};

inline DualStoreDesign initial_design(const KnowledgeGraph& g,
                                      std::size_t budget) {
  DualStoreDesign d;
  for (const auto& [p, part] : g.partitions()) d.relational_partitions.insert(p);
  d.budget = budget;
  return d;
}

namespace detail {

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

}  // namespace detail

/// Reads `subject<TAB>predicate<TAB>object` lines. Blank lines and lines
/// starting with '#' are skipped; duplicates collapse.
inline void read_triples(std::istream& in, KnowledgeGraph& graph) {
  std::string buffer;
  std::size_t line_no = 0;
  while (std::getline(in, buffer)) {
    ++line_no;
    std::string_view line = detail::strip_cr(buffer);
    if (detail::is_blank(line) || line.front() == '#') continue;

    std::string_view fields[3];
    std::size_t start = 0;
    int n = 0;
    for (;;) {
      std::size_t tab = line.find('\t', start);
      if (n == 3) {
        n = 4;
        break;
      }
      fields[n++] = line.substr(start, tab == std::string_view::npos
                                           ? std::string_view::npos
                                           : tab - start);
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (n != 3)
      throw ParseError("line " + std::to_string(line_no) +
                           ": expected 3 tab-separated fields",
                       line_no);
    for (auto f : fields)
      if (f.empty())
        throw ParseError("line " + std::to_string(line_no) + ": empty field",
                         line_no);
    try {
      graph.add(fields[0], fields[1], fields[2]);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                       line_no);
    }
  }
}

inline KnowledgeGraph load_graph(
    const std::string& path,
    std::shared_ptr<SymbolTable> symbols = std::make_shared<SymbolTable>()) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open triple file: " + path);
  KnowledgeGraph graph(std::move(symbols));
  read_triples(in, graph);
  return graph;
}

inline KnowledgeGraph parse_graph(std::string_view text) {
  std::istringstream in{std::string(text)};
  KnowledgeGraph graph;
  read_triples(in, graph);
  return graph;
}

}  // namespace dualkg
