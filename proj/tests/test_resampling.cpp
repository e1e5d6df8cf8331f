#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "scamlens/knn.hpp"
#include "scamlens/resampling.hpp"

using namespace scamlens;
using namespace scamlens::resampling;

namespace {

LabeledTable from_points(const std::vector<std::pair<Row, ScamLabel>>& pts) {
  LabeledTable t;
  for (std::size_t j = 0; j < pts[0].first.size(); ++j) t.feature_names.push_back("x" + std::to_string(j));
  for (std::size_t i = 0; i < pts.size(); ++i) t.push_back(pts[i].first, pts[i].second, "p" + std::to_string(i));
  return t;
}

/// Class c gets counts[c] rows spread around centre 20*c.
LabeledTable blobs(std::array<std::size_t, 3> counts, Rng& rng, double spread = 1.0) {
  LabeledTable t;
  t.feature_names = {"a", "b"};
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) {
      t.push_back({20.0 * c + spread * rng.normal(), spread * rng.normal()}, label_from_index(c),
                  "c" + std::to_string(c) + "_" + std::to_string(i));
    }
  }
  return t;
}

/// Coarse integer grid so that distance ties are common.
LabeledTable grid_table(Rng& rng, std::size_t n) {
  LabeledTable t;
  t.feature_names = {"a", "b"};
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back({static_cast<double>(rng.index(4)), static_cast<double>(rng.index(4))},
                label_from_index(static_cast<int>(i % 3)), std::to_string(i));
  }
  return t;
}

void expect_originals_kept(const LabeledTable& before, const LabeledTable& after) {
  ASSERT_GE(after.size(), before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(after.rows[i], before.rows[i]);
    EXPECT_EQ(after.labels[i], before.labels[i]);
    EXPECT_EQ(after.ids[i], before.ids[i]);
  }
}

}  // namespace

TEST(Knn, MatchesBruteForceIncludingTies) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = trial % 2 ? grid_table(rng, 40) : oracle::random_table(rng, 60, 3, 3);
    const auto all = oracle::everyone(t);
    for (std::size_t k : {1u, 3u, 5u}) {
      for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(knn::nearest(t.rows, all, i, k), oracle::brute_knn(t.rows, all, i, k));
    }
  }
}

TEST(RandomOversample, BalancesToMaximum) {
  Rng rng(1);
  const auto t = blobs({10, 2, 3}, rng);
  const auto r = random_oversample(t, 7);
  EXPECT_EQ(r.table.class_counts(), (std::array<std::size_t, 3>{10, 10, 10}));
  expect_originals_kept(t, r.table);
  for (std::size_t s = t.size(); s < r.table.size(); ++s) {
    const auto& o = r.origins[s - t.size()];
    EXPECT_EQ(r.table.rows[s], t.rows[o.base]);
    EXPECT_EQ(r.table.labels[s], t.labels[o.base]);
  }
}

TEST(RandomOversample, BalancedInputUnchanged) {
  Rng rng(2);
  const auto t = blobs({5, 5, 5}, rng);
  EXPECT_EQ(random_oversample(t, 1).table, t);
}

TEST(RandomOversample, SingleClassRejected) {
  Rng rng(2);
  const auto t = blobs({5, 0, 0}, rng);
  try {
    random_oversample(t, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingleClass);
  }
}

TEST(Smote, MidpointInterpolation) {
  EXPECT_EQ(interpolate({0.0, 0.0}, {1.0, 1.0}, 0.5), (Row{0.5, 0.5}));
}

TEST(Smote, SyntheticRowsLieOnRecordedSegments) {
  Rng rng(3);
  const auto t = blobs({40, 8, 15}, rng);
  const auto r = smote(t, 3, 11);
  EXPECT_EQ(r.table.class_counts(), (std::array<std::size_t, 3>{40, 40, 40}));
  expect_originals_kept(t, r.table);
  ASSERT_EQ(r.origins.size(), r.table.size() - t.size());
  for (std::size_t s = 0; s < r.origins.size(); ++s) {
    const auto& o = r.origins[s];
    ASSERT_TRUE(o.neighbor.has_value());
    const auto& x = t.rows[o.base];
    const auto& n = t.rows[*o.neighbor];
    const auto& y = r.table.rows[t.size() + s];
    EXPECT_GE(o.u, 0.0);
    EXPECT_LE(o.u, 1.0);
    EXPECT_EQ(t.labels[o.base], t.labels[*o.neighbor]);
    const auto nn = oracle::brute_knn(t.rows, oracle::members_of(t, t.labels[o.base]), o.base, 3);
    EXPECT_NE(std::find(nn.begin(), nn.end(), *o.neighbor), nn.end());
    for (std::size_t d = 0; d < x.size(); ++d) {
      EXPECT_GE(y[d], std::min(x[d], n[d]));
      EXPECT_LE(y[d], std::max(x[d], n[d]));
      EXPECT_DOUBLE_EQ(y[d], x[d] + o.u * (n[d] - x[d]));
    }
  }
}

TEST(Smote, NeighbourSetsMatchBruteForce) {
  Rng rng(5);
  const auto t = oracle::random_table(rng, 50, 3, 5, 2);
  for (auto cls : {ScamLabel::Normal, ScamLabel::Ponzi}) {
    const auto members = oracle::members_of(t, cls);
    const auto nbrs = class_neighbours(t, cls, 3);
    for (std::size_t i : members) EXPECT_EQ(nbrs[i], oracle::brute_knn(t.rows, members, i, 3));
  }
}

TEST(Smote, TooFewMinorityRows) {
  Rng rng(6);
  const auto t = blobs({20, 3, 20}, rng);
  try {
    smote(t, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewMinority);
  }
  EXPECT_NO_THROW(smote(t, 2, 1));
}

TEST(Adasyn, HardRowReceivesEverything) {
  // one ponzi row inside the normal cluster, the other two far away together
  const auto t = from_points({{{0.0, 0.0}, ScamLabel::Normal},
                        {{0.1, 0.0}, ScamLabel::Normal},
                        {{0.0, 0.1}, ScamLabel::Normal},
                        {{0.1, 0.1}, ScamLabel::Normal},
                        {{0.05, 0.05}, ScamLabel::Ponzi},
                        {{50.0, 50.0}, ScamLabel::Ponzi},
                        {{50.1, 50.0}, ScamLabel::Ponzi},
                        {{90.0, 0.0}, ScamLabel::OtherScam},
                        {{90.1, 0.0}, ScamLabel::OtherScam},
                        {{90.0, 0.1}, ScamLabel::OtherScam},
                        {{90.1, 0.1}, ScamLabel::OtherScam}});
  const auto r = adasyn(t, 1, 3);
  EXPECT_EQ(r.table.class_counts()[1], 4u);
  ASSERT_EQ(r.origins.size(), 1u);
  EXPECT_EQ(r.origins[0].base, 4u);
}

TEST(Adasyn, UniformFallbackWhenNoRowIsHard) {
  Rng rng(7);
  const auto t = blobs({30, 6, 12}, rng, 0.5);
  const auto members = oracle::members_of(t, ScamLabel::Ponzi);
  const auto r = adasyn_difficulty(t, members, 3);
  EXPECT_TRUE(std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; }));
  const auto out = adasyn(t, 3, 9);
  EXPECT_EQ(out.table.class_counts(), (std::array<std::size_t, 3>{30, 30, 30}));
  std::map<std::size_t, int> per_base;
  for (const auto& o : out.origins) {
    if (t.labels[o.base] == ScamLabel::Ponzi) ++per_base[o.base];
  }
  for (const auto& [base, n] : per_base) EXPECT_EQ(n, 4);  // 24 synthetics over 6 rows
}

TEST(Adasyn, DifficultyMatchesBruteForce) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = oracle::random_table(rng, 80, 2, 6);
    const auto all = oracle::everyone(t);
    for (auto cls : {ScamLabel::Normal, ScamLabel::Ponzi, ScamLabel::OtherScam}) {
      const auto members = oracle::members_of(t, cls);
      const auto r = adasyn_difficulty(t, members, 5);
      for (std::size_t m = 0; m < members.size(); ++m) {
        const auto nn = oracle::brute_knn(t.rows, all, members[m], 5);
        const auto foreign = std::count_if(nn.begin(), nn.end(), [&](std::size_t j) { return t.labels[j] != cls; });
        EXPECT_EQ(r[m], static_cast<double>(foreign) / 5.0);
      }
    }
  }
}

TEST(Adasyn, AllocationSumsExactly) {
  Rng rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> w(1 + rng.index(30));
    for (double& v : w) v = rng.index(4) == 0 ? 0.0 : rng.uniform();
    const std::size_t total = rng.index(1000);
    const auto alloc = allocate_largest_remainder(w, total);
    EXPECT_EQ(std::accumulate(alloc.begin(), alloc.end(), std::size_t{0}), total);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double quota = sum > 0 ? total * w[i] / sum : static_cast<double>(total) / w.size();
      EXPECT_LT(std::abs(static_cast<double>(alloc[i]) - quota), 1.0 + 1e-9);
    }
  }
}

TEST(Adasyn, BalancesRandomTables) {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = oracle::random_table(rng, 90, 3, 8);
    const auto counts = t.class_counts();
    const auto target = *std::max_element(counts.begin(), counts.end());
    const auto out = adasyn(t, 5, trial);
    EXPECT_EQ(out.table.class_counts(), (std::array<std::size_t, 3>{target, target, target}));
    expect_originals_kept(t, out.table);
  }
}

TEST(Enn, RemovesOutvotedRow) {
  const auto t = from_points({{{0.0, 0.0}, ScamLabel::Ponzi},
                              {{0.1, 0.0}, ScamLabel::Normal},
                              {{0.0, 0.1}, ScamLabel::Normal},
                              {{-0.1, 0.0}, ScamLabel::Normal},
                              {{9.0, 9.0}, ScamLabel::Normal}});
  EXPECT_EQ(enn_removals(t, 3), (std::vector<std::size_t>{0}));
}

TEST(Enn, SingleClusterUnchanged) {
  Rng rng(11);
  const auto t = blobs({12, 0, 0}, rng, 0.1);
  EXPECT_EQ(enn_filter(t, 3), t);
}

TEST(Enn, TiesKeepTheRow) {
  // k = 2, one neighbour from each other class
  const auto t = from_points({{{0.0}, ScamLabel::Normal}, {{1.0}, ScamLabel::Ponzi}, {{-1.0}, ScamLabel::OtherScam}});
  const auto removed = enn_removals(t, 2);
  EXPECT_EQ(std::count(removed.begin(), removed.end(), 0u), 0);
}

TEST(Enn, MatchesBruteForce) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = trial % 3 == 0 ? grid_table(rng, 30 + rng.index(60)) : oracle::random_table(rng, 20 + rng.index(180), 1 + rng.index(4), 2);
    for (std::size_t k : {1u, 3u, 5u}) {
      const auto got = enn_removals(t, k);
      EXPECT_EQ(std::set<std::size_t>(got.begin(), got.end()), oracle::brute_enn_removals(t, k));
    }
  }
}

TEST(Enn, TooFewRows) {
  const auto t = from_points({{{0.0}, ScamLabel::Normal}, {{1.0}, ScamLabel::Ponzi}, {{2.0}, ScamLabel::Normal}});
  try {
    enn_filter(t, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewRows);
  }
}

TEST(Tomek, RemovesMajorityMemberOnly) {
  const auto t = from_points({{{0.0, 0.0}, ScamLabel::Normal},
                              {{0.1, 0.0}, ScamLabel::Ponzi},
                              {{5.0, 5.0}, ScamLabel::Normal}});
  const auto r = tomek_filter(t);
  EXPECT_EQ(r.pairs, (std::vector<TomekPair>{{0, 1}}));
  EXPECT_EQ(r.removed, (std::vector<std::size_t>{0}));
  EXPECT_EQ(r.table.ids, (std::vector<std::string>{"p1", "p2"}));
}

TEST(Tomek, SeparatedClassesHaveNoPairs) {
  Rng rng(13);
  const auto t = blobs({10, 4, 7}, rng, 0.3);
  const auto r = tomek_filter(t);
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.table, t);
}

TEST(Tomek, MatchesBruteForceAndNeverDropsMinority) {
  Rng rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = oracle::random_table(rng, 20 + rng.index(180), 1 + rng.index(4), 2);
    const auto r = tomek_filter(t);
    std::set<std::pair<std::size_t, std::size_t>> got;
    for (const auto& p : r.pairs) {
      got.insert({p.i, p.j});
      got.insert({p.j, p.i});
    }
    EXPECT_EQ(got, oracle::brute_tomek(t));
    const auto counts = t.class_counts();
    const auto smallest = *std::min_element(counts.begin(), counts.end());
    for (std::size_t i : r.removed) EXPECT_GT(counts[class_index(t.labels[i])], smallest);
  }
}

TEST(Combined, SmoteTomekEqualsSmoteWhenSeparable) {
  Rng rng(15);
  const auto t = blobs({30, 8, 12}, rng, 0.5);
  EXPECT_EQ(smote_tomek(t, 3, 5), smote(t, 3, 5).table);
}

TEST(Combined, SmoteEnnOnlyRemoves) {
  Rng rng(16);
  const auto t = oracle::random_table(rng, 120, 3, 10);
  EXPECT_LE(smote_enn(t, 5, 3, 2).size(), smote(t, 5, 2).table.size());
}

TEST(Combined, DispatcherIsDeterministic) {
  Rng rng(17);
  const auto t = oracle::random_table(rng, 120, 3, 10);
  for (auto m : kAllMethods) {
    ResampleConfig cfg{m, 5, 3, 123};
    EXPECT_EQ(resample(t, cfg), resample(t, cfg)) << to_string(m);
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_EQ(resample(t, {Method::None, 5, 3, 1}), t);
  EXPECT_FALSE(parse_method("bogus").has_value());
}
