#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scamlens/error.hpp"

namespace scamlens {

enum class ScamLabel : int { Normal = 0, Ponzi = 1, OtherScam = 2 };

inline constexpr int kNumClasses = 3;

inline constexpr int class_index(ScamLabel label) noexcept { return static_cast<int>(label); }

inline constexpr ScamLabel label_from_index(int index) noexcept { return static_cast<ScamLabel>(index); }

inline constexpr std::string_view to_string(ScamLabel label) noexcept {
  switch (label) {
    case ScamLabel::Normal: return "normal";
    case ScamLabel::Ponzi: return "ponzi";
    case ScamLabel::OtherScam: return "other_scam";
  }
  return "normal";
}

inline std::optional<ScamLabel> parse_label(std::string_view text) {
  if (text == "normal") return ScamLabel::Normal;
  if (text == "ponzi") return ScamLabel::Ponzi;
  if (text == "other_scam") return ScamLabel::OtherScam;
  return std::nullopt;
}

using Row = std::vector<double>;

/// Feature matrix plus labels and address ids; the currency between pipeline stages.
struct LabeledTable {
  std::vector<std::string> feature_names;
  std::vector<Row> rows;
  std::vector<ScamLabel> labels;
  std::vector<std::string> ids;

  std::size_t size() const noexcept { return rows.size(); }
  std::size_t dims() const noexcept { return feature_names.size(); }
  bool empty() const noexcept { return rows.empty(); }

  void push_back(Row row, ScamLabel label, std::string id) {
    rows.push_back(std::move(row));
    labels.push_back(label);
    ids.push_back(std::move(id));
  }

  /// Same columns, no rows.
  LabeledTable empty_like() const {
    LabeledTable out;
    out.feature_names = feature_names;
    return out;
  }

  LabeledTable subset(const std::vector<std::size_t>& indices) const {
    LabeledTable out = empty_like();
    out.rows.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(rows[i], labels[i], ids[i]);
    return out;
  }

  std::array<std::size_t, kNumClasses> class_counts() const {
    std::array<std::size_t, kNumClasses> counts{};
    for (ScamLabel l : labels) ++counts[class_index(l)];
    return counts;
  }

  bool operator==(const LabeledTable&) const = default;
};

inline void check_shape(const LabeledTable& table) {
  if (table.rows.size() != table.labels.size() || table.rows.size() != table.ids.size()) {
    throw Error("table", ErrorKind::DimensionMismatch, "rows, labels and ids differ in length");
  }
  for (const Row& r : table.rows) {
    if (r.size() != table.dims()) {
      throw Error("table", ErrorKind::DimensionMismatch,
                  "row has " + std::to_string(r.size()) + " entries, expected " + std::to_string(table.dims()));
    }
  }
}

namespace csv {

/// Decimal text with 12 significant digits.
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

}  // namespace csv

/// Feature table CSV: `address,label,<feature names...>`.
inline void write_table_csv(std::ostream& out, const LabeledTable& table) {
  out << "address,label";
  for (const auto& name : table.feature_names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.ids[i] << ',' << to_string(table.labels[i]);
    for (double v : table.rows[i]) out << ',' << csv::format_value(v);
    out << '\n';
  }
}

inline std::string table_to_csv(const LabeledTable& table) {
  std::ostringstream out;
  write_table_csv(out, table);
  return out.str();
}

inline LabeledTable read_table_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("table", ErrorKind::BadInput, "empty feature table");
  auto header = csv::split_line(line);
  if (header.size() < 2 || header[0] != "address" || header[1] != "label") {
    throw Error("table", ErrorKind::BadInput, "feature table header must start with address,label");
  }
  LabeledTable table;
  table.feature_names.assign(header.begin() + 2, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = csv::split_line(line);
    if (fields.size() != header.size()) {
      throw Error("table", ErrorKind::DimensionMismatch, "line " + std::to_string(line_no) + " has wrong field count");
    }
    auto label = parse_label(fields[1]);
    if (!label) throw Error("table", ErrorKind::BadInput, "unknown label '" + fields[1] + "'");
    Row row;
    row.reserve(fields.size() - 2);
    for (std::size_t j = 2; j < fields.size(); ++j) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(fields[j], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != fields[j].size() || !std::isfinite(v)) {
        throw Error("table", ErrorKind::BadInput, "bad number '" + fields[j] + "' on line " + std::to_string(line_no));
      }
      row.push_back(v);
    }
    table.push_back(std::move(row), *label, fields[0]);
  }
  return table;
}

inline LabeledTable table_from_csv(const std::string& text) {
  std::istringstream in(text);
  return read_table_csv(in);
}

}  // namespace scamlens
