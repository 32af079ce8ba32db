#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualkg/kg_core.hpp"

namespace dualkg {

/// Bag of fixed-width rows over named variable columns. Zero-width
/// relations are legal and carry only a row count.
class Relation {
 public:
  Relation() = default;
  explicit Relation(std::vector<std::string> columns)
      : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t width() const { return columns_.size(); }
  std::size_t size() const { return rows_; }
  bool empty() const { return rows_ == 0; }

  std::span<const TermId> row(std::size_t i) const {
    return {cells_.data() + i * width(), width()};
  }

  void append(std::span<const TermId> row) {
    cells_.insert(cells_.end(), row.begin(), row.end());
    ++rows_;
  }

  std::optional<std::size_t> column_index(const std::string& name) const {
    auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - columns_.begin());
  }

  /// Rows as vectors, sorted; equal for two relations iff they are equal
  /// bags over the same column order.
  std::vector<std::vector<TermId>> sorted_rows() const {
    std::vector<std::vector<TermId>> out;
    out.reserve(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      auto r = row(i);
      out.emplace_back(r.begin(), r.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<TermId> cells_;
  std::size_t rows_ = 0;
};

inline bool same_bag(const Relation& a, const Relation& b) {
  return a.columns() == b.columns() && a.sorted_rows() == b.sorted_rows();
}

enum class CostMode { opcount, wallclock };

struct ExecutionStats {
  std::uint64_t rows_scanned = 0;
  std::uint64_t hash_probes = 0;
  std::uint64_t join_output_rows = 0;
  std::uint64_t adjacency_visited = 0;
  std::uint64_t wall_nanos = 0;
  bool cancelled = false;

  /// Deterministic work measure: relational scans and probes plus graph
  /// adjacency entries.
  std::uint64_t op_count() const {
    return rows_scanned + hash_probes + adjacency_visited;
  }

  double cost(CostMode mode) const {
    return mode == CostMode::opcount ? static_cast<double>(op_count())
                                     : static_cast<double>(wall_nanos);
  }

  ExecutionStats& operator+=(const ExecutionStats& o) {
    rows_scanned += o.rows_scanned;
    hash_probes += o.hash_probes;
    join_output_rows += o.join_output_rows;
    adjacency_visited += o.adjacency_visited;
    wall_nanos += o.wall_nanos;
    cancelled = cancelled || o.cancelled;
    return *this;
  }
};

struct ExecOptions {
  CostMode mode = CostMode::opcount;
  // Abort once the accumulated cost (in `mode` units) reaches this value.
  std::optional<double> cost_cap;
};

struct ExecResult {
  Relation relation;
  ExecutionStats stats;
};

namespace detail {

struct Cancelled {};

/// Accumulates work and enforces the optional cost cap. In opcount mode the
/// cap is checked on every charge; in wall-clock mode every 1024 ops.
class CostMeter {
 public:
  explicit CostMeter(const ExecOptions& opts)
      : opts_(opts), start_(std::chrono::steady_clock::now()) {}

  void charge(std::uint64_t& counter, std::uint64_t n = 1) {
    counter += n;
    ops_ += n;
    if (!opts_.cost_cap) return;
    if (opts_.mode == CostMode::opcount) {
      if (static_cast<double>(ops_) >= *opts_.cost_cap) throw Cancelled{};
    } else if ((ops_ & 1023) < n || n >= 1024) {
      if (static_cast<double>(elapsed()) >= *opts_.cost_cap) throw Cancelled{};
    }
  }

  std::uint64_t elapsed() const {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - start_)
            .count());
  }

 private:
  const ExecOptions& opts_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t ops_ = 0;
};

}  // namespace detail

}  // namespace dualkg
