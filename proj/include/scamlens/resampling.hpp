#pragma once

// Class rebalancing: random oversampling, SMOTE, ADASYN, edited nearest
// neighbours, Tomek links and the two SMOTE+cleaning combinations.
//
// Every oversampler raises each present class to the size of the largest
// class. Distances are Euclidean on whatever columns the table carries; the
// pipeline calls these on standardized features.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scamlens/error.hpp"
#include "scamlens/knn.hpp"
#include "scamlens/rng.hpp"
#include "scamlens/table.hpp"

namespace scamlens::resampling {

enum class Method { None, ROS, SMOTE, ADASYN, SMOTE_ENN, SMOTE_Tomek, TomekLinks };

inline constexpr std::array<Method, 7> kAllMethods = {Method::None,      Method::ROS,         Method::SMOTE,
                                                      Method::ADASYN,    Method::SMOTE_ENN,   Method::SMOTE_Tomek,
                                                      Method::TomekLinks};

inline constexpr std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::None: return "none";
    case Method::ROS: return "ros";
    case Method::SMOTE: return "smote";
    case Method::ADASYN: return "adasyn";
    case Method::SMOTE_ENN: return "smote-enn";
    case Method::SMOTE_Tomek: return "smote-tomek";
    case Method::TomekLinks: return "tomek";
  }
  return "none";
}

inline std::optional<Method> parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

struct ResampleConfig {
  Method method = Method::None;
  std::size_t k_neighbors = 5;
  std::size_t k_enn = 3;
  std::uint64_t seed = 0;
};

/// Where a synthetic row came from: x + u * (neighbor - x). ROS rows have no neighbor and u = 0.
struct SyntheticOrigin {
  std::size_t base = 0;
  std::optional<std::size_t> neighbor;
  double u = 0.0;
};

struct Resampled {
  LabeledTable table;                    // originals first, synthetics appended
  std::vector<SyntheticOrigin> origins;  // one per synthetic row, in table order
};

struct TomekPair {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  bool operator==(const TomekPair&) const = default;
  auto operator<=>(const TomekPair&) const = default;
};

namespace detail {

inline std::array<std::vector<std::size_t>, kNumClasses> rows_by_class(const LabeledTable& t) {
  std::array<std::vector<std::size_t>, kNumClasses> out;
  for (std::size_t i = 0; i < t.size(); ++i) out[class_index(t.labels[i])].push_back(i);
  return out;
}

inline std::size_t present_classes(const LabeledTable& t) {
  auto counts = t.class_counts();
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

inline void require_multiclass(const LabeledTable& t, std::string_view op) {
  if (present_classes(t) < 2) throw Error("resampling", ErrorKind::SingleClass, std::string(op) + " needs at least 2 classes");
}

inline std::size_t max_count(const LabeledTable& t) {
  auto counts = t.class_counts();
  return *std::max_element(counts.begin(), counts.end());
}

inline std::string synthetic_id(const std::string& base, std::string_view tag, std::size_t n) {
  return base + "#" + std::string(tag) + std::to_string(n);
}

inline void require_neighbours(const std::array<std::vector<std::size_t>, kNumClasses>& by_class, std::size_t target,
                               std::size_t k, std::string_view op) {
  if (k == 0) throw Error("resampling", ErrorKind::BadInput, "k must be at least 1");
  for (int c = 0; c < kNumClasses; ++c) {
    const auto n = by_class[c].size();
    if (n > 0 && n < target && n <= k) {
      throw Error("resampling", ErrorKind::TooFewMinority,
                  std::string(op) + ": class " + std::string(to_string(label_from_index(c))) + " has " + std::to_string(n) +
                      " rows, needs more than k=" + std::to_string(k));
    }
  }
}

}  // namespace detail

/// x + u (n - x), coordinate-wise.
inline Row interpolate(const Row& x, const Row& n, double u) {
  Row out(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) out[d] = x[d] + u * (n[d] - x[d]);
  return out;
}

/// k nearest same-class neighbours of every row in `cls`, keyed by row index.
inline std::vector<std::vector<std::size_t>> class_neighbours(const LabeledTable& table, ScamLabel cls, std::size_t k) {
  std::vector<std::vector<std::size_t>> out(table.size());
  const auto members = detail::rows_by_class(table)[class_index(cls)];
  for (std::size_t i : members) out[i] = knn::nearest(table.rows, members, i, k);
  return out;
}

inline Resampled random_oversample(const LabeledTable& table, std::uint64_t seed) {
  detail::require_multiclass(table, "ros");
  Resampled out{table, {}};
  const auto by_class = detail::rows_by_class(table);
  const std::size_t target = detail::max_count(table);
  Rng rng(seed);
  std::size_t serial = 0;
  for (const auto& members : by_class) {
    if (members.empty()) continue;
    for (std::size_t g = members.size(); g < target; ++g) {
      const std::size_t src = members[rng.index(members.size())];
      out.table.push_back(table.rows[src], table.labels[src], detail::synthetic_id(table.ids[src], "ros", serial++));
      out.origins.push_back({src, std::nullopt, 0.0});
    }
  }
  return out;
}

inline Resampled smote(const LabeledTable& table, std::size_t k, std::uint64_t seed) {
  detail::require_multiclass(table, "smote");
  const auto by_class = detail::rows_by_class(table);
  const std::size_t target = detail::max_count(table);
  detail::require_neighbours(by_class, target, k, "smote");

  Resampled out{table, {}};
  Rng rng(seed);
  std::size_t serial = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& members = by_class[c];
    if (members.empty() || members.size() >= target) continue;
    const auto nbrs = class_neighbours(table, label_from_index(c), k);
    for (std::size_t g = members.size(); g < target; ++g) {
      const std::size_t x = members[rng.index(members.size())];
      const std::size_t n = nbrs[x][rng.index(nbrs[x].size())];
      const double u = rng.uniform();
      out.table.push_back(interpolate(table.rows[x], table.rows[n], u), table.labels[x],
                          detail::synthetic_id(table.ids[x], "smote", serial++));
      out.origins.push_back({x, n, u});
    }
  }
  return out;
}

/// Splits `total` proportionally to `weights` with largest-remainder rounding;
/// equal remainders favour the lower index. All-zero weights split uniformly.
inline std::vector<std::size_t> allocate_largest_remainder(const std::vector<double>& weights, std::size_t total) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> alloc(n, 0);
  if (n == 0 || total == 0) return alloc;
  double sum = 0.0;
  for (double w : weights) sum += w;
  std::vector<double> quota(n);
  for (std::size_t i = 0; i < n; ++i) {
    quota[i] = sum > 0.0 ? static_cast<double>(total) * weights[i] / sum : static_cast<double>(total) / static_cast<double>(n);
  }
  std::size_t assigned = 0;
  std::vector<std::pair<double, std::size_t>> remainders(n);
  for (std::size_t i = 0; i < n; ++i) {
    alloc[i] = static_cast<std::size_t>(std::floor(quota[i]));
    assigned += alloc[i];
    remainders[i] = {quota[i] - std::floor(quota[i]), i};
  }
  // floating quotas can overshoot by one in pathological cases
  while (assigned > total) {
    auto it = std::max_element(alloc.begin(), alloc.end());
    --*it;
    --assigned;
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; r = (r + 1) % n) {
    ++alloc[remainders[r].second];
    ++assigned;
  }
  return alloc;
}

/// Fraction of each row's k nearest neighbours (whole table) carrying another label.
inline std::vector<double> adasyn_difficulty(const LabeledTable& table, const std::vector<std::size_t>& members,
                                             std::size_t k) {
  const auto everyone = knn::all_indices(table.size());
  std::vector<double> r(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    const std::size_t i = members[m];
    const auto nn = knn::nearest(table.rows, everyone, i, k);
    const auto foreign = std::count_if(nn.begin(), nn.end(), [&](std::size_t j) { return table.labels[j] != table.labels[i]; });
    r[m] = static_cast<double>(foreign) / static_cast<double>(k);
  }
  return r;
}

inline Resampled adasyn(const LabeledTable& table, std::size_t k, std::uint64_t seed) {
  detail::require_multiclass(table, "adasyn");
  const auto by_class = detail::rows_by_class(table);
  const std::size_t target = detail::max_count(table);
  detail::require_neighbours(by_class, target, k, "adasyn");

  Resampled out{table, {}};
  Rng rng(seed);
  std::size_t serial = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& members = by_class[c];
    if (members.empty() || members.size() >= target) continue;
    const auto alloc = allocate_largest_remainder(adasyn_difficulty(table, members, k), target - members.size());
    const auto nbrs = class_neighbours(table, label_from_index(c), k);
    for (std::size_t m = 0; m < members.size(); ++m) {
      const std::size_t x = members[m];
      for (std::size_t g = 0; g < alloc[m]; ++g) {
        const std::size_t n = nbrs[x][rng.index(nbrs[x].size())];
        const double u = rng.uniform();
        out.table.push_back(interpolate(table.rows[x], table.rows[n], u), table.labels[x],
                            detail::synthetic_id(table.ids[x], "adasyn", serial++));
        out.origins.push_back({x, n, u});
      }
    }
  }
  return out;
}

/// Rows whose label disagrees with the strict majority label of their k
/// nearest neighbours. Neighbours are computed once, on the input table.
inline std::vector<std::size_t> enn_removals(const LabeledTable& table, std::size_t k) {
  if (k == 0) throw Error("resampling", ErrorKind::BadInput, "k must be at least 1");
  if (table.size() <= k) throw Error("resampling", ErrorKind::TooFewRows, "enn needs more than k rows");
  const auto everyone = knn::all_indices(table.size());
  std::vector<std::size_t> removed;
  for (std::size_t i = 0; i < table.size(); ++i) {
    std::array<std::size_t, kNumClasses> votes{};
    for (std::size_t j : knn::nearest(table.rows, everyone, i, k)) ++votes[class_index(table.labels[j])];
    const auto top = std::max_element(votes.begin(), votes.end());
    if (std::count(votes.begin(), votes.end(), *top) > 1) continue;
    if (static_cast<int>(top - votes.begin()) != class_index(table.labels[i])) removed.push_back(i);
  }
  return removed;
}

inline LabeledTable drop_rows(const LabeledTable& table, const std::vector<std::size_t>& removed) {
  std::vector<char> gone(table.size(), 0);
  for (std::size_t i : removed) gone[i] = 1;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!gone[i]) keep.push_back(i);
  }
  return table.subset(keep);
}

inline LabeledTable enn_filter(const LabeledTable& table, std::size_t k) { return drop_rows(table, enn_removals(table, k)); }

/// Mutual cross-class 1-nearest-neighbour pairs, i < j, sorted.
inline std::vector<TomekPair> tomek_pairs(const LabeledTable& table) {
  const auto everyone = knn::all_indices(table.size());
  std::vector<std::size_t> nn1(table.size(), table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto nn = knn::nearest(table.rows, everyone, i, 1);
    if (!nn.empty()) nn1[i] = nn.front();
  }
  std::vector<TomekPair> pairs;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::size_t j = nn1[i];
    if (j < table.size() && i < j && nn1[j] == i && table.labels[i] != table.labels[j]) pairs.push_back({i, j});
  }
  return pairs;
}

struct TomekResult {
  LabeledTable table;
  std::vector<TomekPair> pairs;
  std::vector<std::size_t> removed;
};

/// Removes the member of each Tomek pair whose class is globally larger.
/// Pairs between equal-sized classes are left intact.
inline TomekResult tomek_filter(const LabeledTable& table) {
  detail::require_multiclass(table, "tomek");
  const auto counts = table.class_counts();
  TomekResult out;
  out.pairs = tomek_pairs(table);
  for (const auto& p : out.pairs) {
    const auto ci = counts[class_index(table.labels[p.i])];
    const auto cj = counts[class_index(table.labels[p.j])];
    if (ci > cj) out.removed.push_back(p.i);
    if (cj > ci) out.removed.push_back(p.j);
  }
  std::sort(out.removed.begin(), out.removed.end());
  out.table = drop_rows(table, out.removed);
  return out;
}

inline LabeledTable smote_enn(const LabeledTable& table, std::size_t k_smote, std::size_t k_enn, std::uint64_t seed) {
  return enn_filter(smote(table, k_smote, seed).table, k_enn);
}

inline LabeledTable smote_tomek(const LabeledTable& table, std::size_t k_smote, std::uint64_t seed) {
  return tomek_filter(smote(table, k_smote, seed).table).table;
}

inline LabeledTable resample(const LabeledTable& table, const ResampleConfig& cfg) {
  switch (cfg.method) {
    case Method::None: return table;
    case Method::ROS: return random_oversample(table, cfg.seed).table;
    case Method::SMOTE: return smote(table, cfg.k_neighbors, cfg.seed).table;
    case Method::ADASYN: return adasyn(table, cfg.k_neighbors, cfg.seed).table;
    case Method::SMOTE_ENN: return smote_enn(table, cfg.k_neighbors, cfg.k_enn, cfg.seed);
    case Method::SMOTE_Tomek: return smote_tomek(table, cfg.k_neighbors, cfg.seed);
    case Method::TomekLinks: return tomek_filter(table).table;
  }
  return table;
}

}  // namespace scamlens::resampling
