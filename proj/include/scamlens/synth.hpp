#pragma once

// Synthetic labeled tables: Gaussian class conditionals whose means sit on an
// equilateral triangle (pairwise distance = separation, unit variance), with
// class sizes in the reference dataset's 3008 : 285 : 3526 proportions.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "scamlens/error.hpp"
#include "scamlens/features.hpp"
#include "scamlens/resampling.hpp"
#include "scamlens/rng.hpp"
#include "scamlens/table.hpp"

namespace scamlens::synth {

inline constexpr std::array<double, kNumClasses> kReferenceCounts = {3008.0, 285.0, 3526.0};

struct SynthOptions {
  std::size_t n = 1500;
  double separation = 6.0;  // distance between class means, in units of sigma
  std::size_t dims = features::kNumFeatures;
  std::size_t informative = features::kNumFeatures;  // leading columns carrying the class signal
  std::uint64_t seed = 42;
};

inline std::array<std::size_t, kNumClasses> class_sizes(std::size_t n) {
  const auto alloc = resampling::allocate_largest_remainder({kReferenceCounts.begin(), kReferenceCounts.end()}, n);
  return {alloc[0], alloc[1], alloc[2]};
}

inline LabeledTable generate(const SynthOptions& opt) {
  if (opt.informative < 2 || opt.informative > opt.dims) {
    throw Error("synth", ErrorKind::BadInput, "need 2 <= informative <= dims");
  }
  Rng rng(opt.seed);

  // two orthonormal directions inside the informative subspace
  std::array<std::vector<double>, 2> basis;
  for (std::size_t b = 0; b < 2; ++b) {
    auto& v = basis[b];
    v.resize(opt.informative);
    for (double& x : v) x = rng.normal();
    if (b == 1) {
      double dot = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) dot += v[j] * basis[0][j];
      for (std::size_t j = 0; j < v.size(); ++j) v[j] -= dot * basis[0][j];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  const double radius = opt.separation / std::sqrt(3.0);
  std::array<std::vector<double>, kNumClasses> means;
  for (int c = 0; c < kNumClasses; ++c) {
    const double theta = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * c / 3.0;
    means[c].assign(opt.dims, 0.0);
    for (std::size_t j = 0; j < opt.informative; ++j) {
      means[c][j] = radius * (std::cos(theta) * basis[0][j] + std::sin(theta) * basis[1][j]);
    }
  }

  LabeledTable table;
  if (opt.dims == features::kNumFeatures) {
    table.feature_names = features::feature_names();
  } else {
    for (std::size_t j = 0; j < opt.dims; ++j) table.feature_names.push_back("f" + std::to_string(j));
  }
  const auto sizes = class_sizes(opt.n);
  std::vector<std::pair<Row, ScamLabel>> items;
  for (int c = 0; c < kNumClasses; ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      Row row(opt.dims);
      for (std::size_t j = 0; j < opt.dims; ++j) row[j] = means[c][j] + rng.normal();
      items.emplace_back(std::move(row), label_from_index(c));
    }
  }
  rng.shuffle(std::span(items));
  for (std::size_t i = 0; i < items.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth%05zu", i);
    table.push_back(std::move(items[i].first), items[i].second, id);
  }
  return table;
}

}  // namespace scamlens::synth
