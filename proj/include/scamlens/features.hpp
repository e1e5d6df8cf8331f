#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "scamlens/error.hpp"
#include "scamlens/ingest.hpp"
#include "scamlens/table.hpp"

namespace scamlens::features {

inline constexpr std::size_t kNumFeatures = 17;
inline constexpr std::int64_t kSecondsPerDay = 86'400;
inline constexpr std::int64_t kDiffWindowSeconds = 48 * 3'600;

/// Canonical column order of the feature table.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "lifetime_days",      "active_days",       "most_active_day",   "num_in",           "num_out",
    "in_vs_out",          "addr_received",     "addr_spent",        "mean_delay_days",  "median_delay_days",
    "min_delay_days",     "max_delay_days",    "total_received_btc", "total_spent_btc", "avg_received_btc",
    "avg_spent_btc",      "diff_48h_btc",
};

inline std::vector<std::string> feature_names() { return {kFeatureNames.begin(), kFeatureNames.end()}; }

struct FeatureVector {
  double lifetime_days = 0;
  std::int64_t active_days = 0;
  std::int64_t most_active_day = 0;
  std::int64_t num_in = 0;
  std::int64_t num_out = 0;
  double in_vs_out = 0;
  std::int64_t addr_received = 0;
  std::int64_t addr_spent = 0;
  double mean_delay_days = 0;
  double median_delay_days = 0;
  double min_delay_days = 0;
  double max_delay_days = 0;
  double total_received_btc = 0;
  double total_spent_btc = 0;
  double avg_received_btc = 0;
  double avg_spent_btc = 0;
  double diff_48h_btc = 0;

  std::array<double, kNumFeatures> to_array() const {
    return {lifetime_days,
            static_cast<double>(active_days),
            static_cast<double>(most_active_day),
            static_cast<double>(num_in),
            static_cast<double>(num_out),
            in_vs_out,
            static_cast<double>(addr_received),
            static_cast<double>(addr_spent),
            mean_delay_days,
            median_delay_days,
            min_delay_days,
            max_delay_days,
            total_received_btc,
            total_spent_btc,
            avg_received_btc,
            avg_spent_btc,
            diff_48h_btc};
  }

  bool operator==(const FeatureVector&) const = default;
};

namespace detail {

inline double satoshi_to_btc(std::int64_t sat) {
  return static_cast<double>(sat) / static_cast<double>(ingest::kSatoshiPerBtc);
}

inline double median_of_sorted(const std::vector<double>& v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Each Out pairs with the latest In at or before it; delays in days.
inline std::vector<double> delays_days(const std::vector<ingest::TxRecord>& records) {
  std::vector<double> delays;
  std::optional<std::int64_t> last_in;
  // Ins sharing a timestamp with an Out must be visible to it, whatever their order.
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].time == records[i].time) ++j;
    for (std::size_t k = i; k < j; ++k) {
      if (records[k].direction == ingest::Direction::In) last_in = records[k].time;
    }
    for (std::size_t k = i; k < j; ++k) {
      if (records[k].direction == ingest::Direction::Out && last_in) {
        delays.push_back(static_cast<double>(records[k].time - *last_in) / static_cast<double>(kSecondsPerDay));
      }
    }
    i = j;
  }
  return delays;
}

/// Max over record-anchored windows [t, t+48h) of |received - spent|, in satoshi.
inline std::int64_t max_window_imbalance(const std::vector<ingest::TxRecord>& records) {
  std::int64_t best = 0;
  std::int64_t balance = 0;  // received - spent over [records[lo].time, records[hi-1].time]
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < records.size(); ++lo) {
    if (lo > 0 && records[lo].time == records[lo - 1].time) continue;
    while (hi < records.size() && records[hi].time < records[lo].time + kDiffWindowSeconds) {
      balance += records[hi].direction == ingest::Direction::In ? records[hi].amount : -records[hi].amount;
      ++hi;
    }
    best = std::max(best, balance < 0 ? -balance : balance);
    // drop every record at this anchor time before moving on
    std::size_t k = lo;
    while (k < records.size() && records[k].time == records[lo].time) {
      balance -= records[k].direction == ingest::Direction::In ? records[k].amount : -records[k].amount;
      ++k;
    }
  }
  return best;
}

}  // namespace detail

inline FeatureVector extract_features(const ingest::AddressHistory& history) {
  const auto& recs = history.records;
  if (recs.empty()) throw Error("features", ErrorKind::EmptyHistory, "address " + history.address + " has no records");

  FeatureVector f;
  f.lifetime_days = static_cast<double>(recs.back().time - recs.front().time) / static_cast<double>(kSecondsPerDay);

  std::map<std::int64_t, std::int64_t> per_day;
  std::set<std::string> senders, receivers;
  std::int64_t received = 0, spent = 0;
  for (const auto& r : recs) {
    ++per_day[r.time / kSecondsPerDay];
    if (r.direction == ingest::Direction::In) {
      ++f.num_in;
      received += r.amount;
      senders.insert(r.counterparties.begin(), r.counterparties.end());
    } else {
      ++f.num_out;
      spent += r.amount;
      receivers.insert(r.counterparties.begin(), r.counterparties.end());
    }
  }
  f.active_days = static_cast<std::int64_t>(per_day.size());
  for (const auto& [day, count] : per_day) f.most_active_day = std::max(f.most_active_day, count);

  f.in_vs_out = static_cast<double>(f.num_in) / static_cast<double>(std::max<std::int64_t>(f.num_out, 1));
  f.addr_received = static_cast<std::int64_t>(senders.size());
  f.addr_spent = static_cast<std::int64_t>(receivers.size());

  auto delays = detail::delays_days(recs);
  if (!delays.empty()) {
    std::sort(delays.begin(), delays.end());
    double sum = 0.0;
    for (double d : delays) sum += d;
    // clamp guards the mean against rounding just outside [min, max]
    f.mean_delay_days = std::clamp(sum / static_cast<double>(delays.size()), delays.front(), delays.back());
    f.median_delay_days = detail::median_of_sorted(delays);
    f.min_delay_days = delays.front();
    f.max_delay_days = delays.back();
  }

  f.total_received_btc = detail::satoshi_to_btc(received);
  f.total_spent_btc = detail::satoshi_to_btc(spent);
  f.avg_received_btc = f.num_in > 0 ? f.total_received_btc / static_cast<double>(f.num_in) : 0.0;
  f.avg_spent_btc = f.num_out > 0 ? f.total_spent_btc / static_cast<double>(f.num_out) : 0.0;
  f.diff_48h_btc = detail::satoshi_to_btc(detail::max_window_imbalance(recs));
  return f;
}

inline LabeledTable featurize_all(const std::vector<ingest::LabeledHistory>& histories) {
  LabeledTable table;
  table.feature_names = feature_names();
  table.rows.reserve(histories.size());
  for (const auto& item : histories) {
    const auto f = extract_features(item.history).to_array();
    table.push_back(Row(f.begin(), f.end()), item.label, item.history.address);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Standardization

struct Scaler {
  std::vector<double> means;
  std::vector<double> stds;  // strictly positive; 1 for constant columns

  std::size_t dims() const noexcept { return means.size(); }
  bool operator==(const Scaler&) const = default;
};

/// Per-column mean and population standard deviation of the training rows.
inline Scaler scaler_fit(const LabeledTable& train) {
  if (train.size() < 2) throw Error("features", ErrorKind::TooFewRows, "scaler needs at least 2 rows");
  check_shape(train);
  const std::size_t d = train.dims();
  const double n = static_cast<double>(train.size());
  Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  for (std::size_t j = 0; j < d; ++j) {
    const double first = train.rows[0][j];
    bool constant = true;
    double sum = 0.0;
    for (const auto& r : train.rows) {
      sum += r[j];
      constant = constant && r[j] == first;
    }
    if (constant) {
      s.means[j] = first;
      continue;
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : train.rows) ss += (r[j] - mean) * (r[j] - mean);
    const double sd = std::sqrt(ss / n);
    s.means[j] = mean;
    s.stds[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

inline LabeledTable scaler_apply(const Scaler& scaler, const LabeledTable& table) {
  if (table.dims() != scaler.dims()) {
    throw Error("features", ErrorKind::DimensionMismatch,
                "scaler has " + std::to_string(scaler.dims()) + " columns, table has " + std::to_string(table.dims()));
  }
  check_shape(table);
  LabeledTable out = table;
  for (auto& row : out.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - scaler.means[j]) / scaler.stds[j];
  }
  return out;
}

/// Maps standardized values back to original units.
inline Row scaler_invert(const Scaler& scaler, const Row& z) {
  Row x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * scaler.stds[j] + scaler.means[j];
  return x;
}

}  // namespace scamlens::features
