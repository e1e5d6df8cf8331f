#pragma once

#include <algorithm>
#include <cstddef>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "scamlens/table.hpp"

namespace scamlens::knn {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// The k nearest candidates to `query` (excluding `self`), nearest first.
/// Ties in distance go to the lower row index.
inline std::vector<std::size_t> nearest(const std::vector<Row>& rows, std::span<const std::size_t> candidates,
                                        std::size_t self, std::size_t k) {
  using Entry = std::pair<double, std::size_t>;  // max-heap on (distance, index)
  std::priority_queue<Entry> heap;
  const auto& query = rows[self];
  for (std::size_t c : candidates) {
    if (c == self) continue;
    const Entry e{squared_distance(query, rows[c]), c};
    if (heap.size() < k) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
  }
  std::vector<std::size_t> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top().second;
    heap.pop();
  }
  return out;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace scamlens::knn
