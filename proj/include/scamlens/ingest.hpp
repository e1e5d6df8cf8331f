#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scamlens/error.hpp"
#include "scamlens/rng.hpp"
#include "scamlens/table.hpp"

namespace scamlens::ingest {

enum class Direction { In, Out };

struct TxRecord {
  std::string txid;
  std::int64_t time = 0;  // unix seconds, UTC
  Direction direction = Direction::In;
  std::int64_t amount = 0;  // satoshi
  std::set<std::string> counterparties;

  bool operator==(const TxRecord&) const = default;
};

struct AddressHistory {
  std::string address;
  std::vector<TxRecord> records;  // ascending by time

  bool operator==(const AddressHistory&) const = default;
};

struct LabeledHistory {
  AddressHistory history;
  ScamLabel label = ScamLabel::Normal;
};

inline constexpr std::int64_t kSatoshiPerBtc = 100'000'000;

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error("ingest", ErrorKind::MalformedReport, "missing field '" + std::string(key) + "' in " + where);
  return *it;
}

inline std::int64_t require_int(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw Error("ingest", ErrorKind::MalformedReport, "field '" + std::string(key) + "' must be an integer in " + where);
  }
  return v.get<std::int64_t>();
}

inline std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) {
    throw Error("ingest", ErrorKind::MalformedReport, "field '" + std::string(key) + "' must be a string in " + where);
  }
  return v.get<std::string>();
}

}  // namespace detail

/// Builds an AddressHistory from an already-parsed report object.
inline AddressHistory history_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error("ingest", ErrorKind::MalformedReport, "report must be a JSON object");
  AddressHistory history;
  history.address = detail::require_string(doc, "address", "report");
  if (history.address.empty()) throw Error("ingest", ErrorKind::MalformedReport, "empty address");
  const auto& txs = detail::require(doc, "txs", "report");
  if (!txs.is_array()) throw Error("ingest", ErrorKind::MalformedReport, "'txs' must be an array");

  history.records.reserve(txs.size());
  for (std::size_t i = 0; i < txs.size(); ++i) {
    const auto& tx = txs[i];
    const std::string where = "txs[" + std::to_string(i) + "]";
    if (!tx.is_object()) throw Error("ingest", ErrorKind::MalformedReport, where + " is not an object");
    TxRecord rec;
    rec.txid = detail::require_string(tx, "txid", where);
    rec.time = detail::require_int(tx, "time", where);
    rec.amount = detail::require_int(tx, "amount_satoshi", where);
    const std::string dir = detail::require_string(tx, "direction", where);
    if (dir == "in") {
      rec.direction = Direction::In;
    } else if (dir == "out") {
      rec.direction = Direction::Out;
    } else {
      throw Error("ingest", ErrorKind::InvalidRecord, where + ": unknown direction '" + dir + "'");
    }
    if (rec.amount < 0) throw Error("ingest", ErrorKind::InvalidRecord, where + ": negative amount");
    if (rec.time < 0) throw Error("ingest", ErrorKind::InvalidRecord, where + ": negative time");
    const auto& cps = detail::require(tx, "counterparties", where);
    if (!cps.is_array()) throw Error("ingest", ErrorKind::MalformedReport, where + ": 'counterparties' must be an array");
    for (const auto& cp : cps) {
      if (!cp.is_string()) throw Error("ingest", ErrorKind::MalformedReport, where + ": counterparty must be a string");
      rec.counterparties.insert(cp.get<std::string>());
    }
    if (rec.counterparties.empty()) throw Error("ingest", ErrorKind::InvalidRecord, where + ": no counterparties");
    history.records.push_back(std::move(rec));
  }
  std::stable_sort(history.records.begin(), history.records.end(),
                   [](const TxRecord& a, const TxRecord& b) { return a.time < b.time; });
  return history;
}

/// Parses one Address Report JSON document. Unknown fields are ignored.
inline AddressHistory parse_address_report(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("ingest", ErrorKind::MalformedReport, e.what());
  }
  return history_from_json(doc);
}

inline nlohmann::json history_to_json(const AddressHistory& history) {
  nlohmann::json txs = nlohmann::json::array();
  for (const auto& r : history.records) {
    txs.push_back({{"txid", r.txid},
                   {"time", r.time},
                   {"direction", r.direction == Direction::In ? "in" : "out"},
                   {"amount_satoshi", r.amount},
                   {"counterparties", r.counterparties}});
  }
  return {{"address", history.address}, {"txs", std::move(txs)}};
}

inline std::string serialize_address_report(const AddressHistory& history) { return history_to_json(history).dump(); }

// ---------------------------------------------------------------------------
// Keyword screening

struct KeywordDictionary {
  std::set<std::string> terms;

  static KeywordDictionary make(std::initializer_list<std::string_view> words) {
    KeywordDictionary dict;
    for (auto w : words) {
      std::string t(w);
      std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
      if (!t.empty()) dict.terms.insert(std::move(t));
    }
    if (dict.terms.empty()) throw Error("ingest", ErrorKind::BadInput, "keyword dictionary must not be empty");
    return dict;
  }
};

/// ponzi, profit, hyip, multiplier, investment, mlm
inline KeywordDictionary default_dictionary() {
  return KeywordDictionary::make({"ponzi", "profit", "hyip", "multiplier", "investment", "mlm"});
}

inline bool keyword_screen(std::string_view text, const KeywordDictionary& dict) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::any_of(dict.terms.begin(), dict.terms.end(),
                     [&](const std::string& term) { return lower.find(term) != std::string::npos; });
}

// ---------------------------------------------------------------------------
// Sources

/// Resolves an address to its report. nullopt means the source has no record of it.
class ReportSource {
 public:
  virtual ~ReportSource() = default;
  virtual std::optional<AddressHistory> fetch(const std::string& address) = 0;
};

/// Reads `<dir>/<address>.json`. Read-only; safe to share between threads.
class FixtureSource final : public ReportSource {
 public:
  explicit FixtureSource(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) {
      throw Error("ingest", ErrorKind::SourceUnavailable, "fixture directory not found: " + dir_.string());
    }
  }

  std::optional<AddressHistory> fetch(const std::string& address) override {
    if (address.empty() || address.find_first_of("/\\") != std::string::npos || address.front() == '.') {
      return std::nullopt;
    }
    const auto path = dir_ / (address + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_address_report(buf.str());
  }

 private:
  std::filesystem::path dir_;
};

inline std::optional<AddressHistory> fetch_address_report(ReportSource& source, const std::string& address) {
  return source.fetch(address);
}

struct DedupResult {
  std::vector<LabeledHistory> kept;
  std::vector<std::string> warnings;  // label conflicts and drops, one line each
};

/// First occurrence of an address wins; addresses with no report or no
/// transactions are discarded.
inline DedupResult validate_and_dedup(const std::vector<std::pair<std::string, ScamLabel>>& addresses, ReportSource& source) {
  DedupResult result;
  std::unordered_map<std::string, ScamLabel> seen;
  std::vector<std::pair<std::string, ScamLabel>> unique;
  for (const auto& [address, label] : addresses) {
    auto [it, inserted] = seen.emplace(address, label);
    if (inserted) {
      unique.emplace_back(address, label);
    } else if (it->second != label) {
      result.warnings.push_back("label conflict for " + address + ": kept " + std::string(to_string(it->second)) +
                                ", ignored " + std::string(to_string(label)));
    }
  }
  for (const auto& [address, label] : unique) {
    auto history = source.fetch(address);
    if (!history) {
      result.warnings.push_back("dropped " + address + ": no report");
      continue;
    }
    if (history->records.empty()) {
      result.warnings.push_back("dropped " + address + ": no transactions");
      continue;
    }
    result.kept.push_back({std::move(*history), label});
  }
  return result;
}

/// Label file: CSV `address,label` with label in {normal, ponzi, other_scam}.
inline std::vector<std::pair<std::string, ScamLabel>> read_label_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("ingest", ErrorKind::BadInput, "empty label file");
  auto header = csv::split_line(line);
  if (header.size() != 2 || header[0] != "address" || header[1] != "label") {
    throw Error("ingest", ErrorKind::BadInput, "label file header must be 'address,label'");
  }
  std::vector<std::pair<std::string, ScamLabel>> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = csv::split_line(line);
    if (fields.size() != 2) throw Error("ingest", ErrorKind::BadInput, "bad label line: " + line);
    auto label = parse_label(fields[1]);
    if (!label) throw Error("ingest", ErrorKind::BadInput, "unknown label '" + fields[1] + "'");
    out.emplace_back(fields[0], *label);
  }
  return out;
}

/// Histories file: one JSON report per line with an extra "label" field.
inline void write_histories(std::ostream& out, const std::vector<LabeledHistory>& items) {
  for (const auto& item : items) {
    auto doc = history_to_json(item.history);
    doc["label"] = std::string(to_string(item.label));
    out << doc.dump() << '\n';
  }
}

inline std::vector<LabeledHistory> read_histories(std::istream& in) {
  std::vector<LabeledHistory> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("ingest", ErrorKind::MalformedReport, e.what());
    }
    auto label_text = detail::require_string(doc, "label", "histories line");
    auto label = parse_label(label_text);
    if (!label) throw Error("ingest", ErrorKind::BadInput, "unknown label '" + label_text + "'");
    items.push_back({history_from_json(doc), *label});
  }
  return items;
}

// ---------------------------------------------------------------------------
// Stratified split

struct SplitResult {
  LabeledTable train;
  LabeledTable test;
};

/// Per-class train count is round(ratio * class_count); the remainder goes to
/// test. Rows keep their original relative order in both partitions.
inline SplitResult split(const LabeledTable& table, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("ingest", ErrorKind::BadInput, "split ratio must lie in (0,1)");
  if (table.empty()) throw Error("ingest", ErrorKind::TooFewRows, "cannot split an empty table");
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < table.size(); ++i) by_class[class_index(table.labels[i])].push_back(i);
  for (int c = 0; c < kNumClasses; ++c) {
    if (by_class[c].size() == 1) {
      throw Error("ingest", ErrorKind::DegenerateClass,
                  "class " + std::string(to_string(label_from_index(c))) + " has fewer than 2 rows");
    }
  }

  Rng rng(seed);
  std::vector<char> in_train(table.size(), 0);
  for (auto& members : by_class) {
    rng.shuffle(std::span(members));
    const auto n_train = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(members.size())));
    for (std::size_t j = 0; j < n_train; ++j) in_train[members[j]] = 1;
  }
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < table.size(); ++i) (in_train[i] ? train_idx : test_idx).push_back(i);
  return {table.subset(train_idx), table.subset(test_idx)};
}

}  // namespace scamlens::ingest
