#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace clir {

/// Sparse vector over a dense integer index space. Entries are kept sorted by
/// index with no duplicates; zero values are dropped on construction.
class SparseVec {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  SparseVec() = default;

  /// Sorts, merges duplicate indices by summation and drops exact zeros.
  static SparseVec from_unsorted(std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    SparseVec v;
    v.entries_.reserve(entries.size());
    for (const auto& e : entries) {
      if (!v.entries_.empty() && v.entries_.back().first == e.first)
        v.entries_.back().second += e.second;
      else
        v.entries_.push_back(e);
    }
    std::erase_if(v.entries_, [](const Entry& e) { return e.second == 0.0; });
    return v;
  }

  static SparseVec from_dense(std::span<const double> dense) {
    SparseVec v;
    for (std::uint32_t i = 0; i < dense.size(); ++i)
      if (dense[i] != 0.0) v.entries_.emplace_back(i, dense[i]);
    return v;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  double at(std::uint32_t index) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                               [](const Entry& e, std::uint32_t i) { return e.first < i; });
    return (it != entries_.end() && it->first == index) ? it->second : 0.0;
  }

  double dot(const SparseVec& other) const {
    double acc = 0.0;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
      if (a->first < b->first)
        ++a;
      else if (b->first < a->first)
        ++b;
      else {
        acc += a->second * b->second;
        ++a;
        ++b;
      }
    }
    return acc;
  }

  double norm() const {
    double acc = 0.0;
    for (const auto& [i, x] : entries_) acc += x * x;
    return std::sqrt(acc);
  }

  SparseVec scaled(double factor) const {
    SparseVec v = *this;
    for (auto& [i, x] : v.entries_) x *= factor;
    std::erase_if(v.entries_, [](const Entry& e) { return e.second == 0.0; });
    return v;
  }

 private:
  std::vector<Entry> entries_;
};

}  // namespace clir
