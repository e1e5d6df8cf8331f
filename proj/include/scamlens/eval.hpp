#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "scamlens/error.hpp"
#include "scamlens/table.hpp"
#include "scamlens/trees.hpp"

namespace scamlens::eval {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& r : counts) t += r[0] + r[1] + r[2];
    return t;
  }
  std::size_t trace() const { return counts[0][0] + counts[1][1] + counts[2][2]; }
  std::size_t row_sum(int c) const { return counts[c][0] + counts[c][1] + counts[c][2]; }
  std::size_t col_sum(int c) const { return counts[0][c] + counts[1][c] + counts[2][c]; }

  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(const std::vector<ScamLabel>& y_true, const std::vector<ScamLabel>& y_pred) {
  if (y_true.size() != y_pred.size()) throw Error("eval", ErrorKind::LengthMismatch, "label vectors differ in length");
  if (y_true.empty()) throw Error("eval", ErrorKind::LengthMismatch, "no labels to compare");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.counts[class_index(y_true[i])][class_index(y_pred[i])];
  return cm;
}

/// 2PR / (P + R); 0 when P + R = 0.
inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * (recall * precision) / (recall + precision) : 0.0;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool precision_undefined = false;  // nothing predicted as this class
  bool recall_undefined = false;     // class absent from the truth
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> per_class;
  double accuracy = 0.0;
  Averages macro;
  Averages weighted;
  std::size_t total = 0;

  bool any_undefined() const {
    return std::any_of(per_class.begin(), per_class.end(),
                       [](const ClassMetrics& c) { return c.precision_undefined || c.recall_undefined; });
  }
};

inline MetricsReport metrics(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw Error("eval", ErrorKind::EmptyMatrix, "confusion matrix is empty");
  MetricsReport rep;
  rep.total = total;
  const double n = static_cast<double>(total);
  rep.accuracy = static_cast<double>(cm.trace()) / n;
  for (int c = 0; c < kNumClasses; ++c) {
    auto& m = rep.per_class[c];
    const std::size_t tp = cm.counts[c][c];
    const std::size_t predicted = cm.col_sum(c);
    m.support = cm.row_sum(c);
    m.precision_undefined = predicted == 0;
    m.recall_undefined = m.support == 0;
    m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    m.recall = m.support ? static_cast<double>(tp) / static_cast<double>(m.support) : 0.0;
    m.f1 = f1_score(m.precision, m.recall);
    rep.macro.precision += m.precision / kNumClasses;
    rep.macro.recall += m.recall / kNumClasses;
    rep.macro.f1 += m.f1 / kNumClasses;
    const double w = static_cast<double>(m.support);
    rep.weighted.precision += w * m.precision;
    rep.weighted.f1 += w * m.f1;
  }
  rep.weighted.precision /= n;
  rep.weighted.f1 /= n;
  // support_c * (tp_c / support_c) summed over classes is tp total
  rep.weighted.recall = rep.accuracy;
  return rep;
}

// ---------------------------------------------------------------------------
// Comparison report

struct ComparisonRow {
  std::string classifier;
  std::string resampler;
  MetricsReport metrics;
};

struct ReportDocument {
  std::string table_text;  // aligned plain text
  std::string table_csv;   // classifier,resampler,accuracy,precision_w,recall_w,f1_w,f1_macro
  std::string chart_csv;   // combination,f1
  std::string importance_csv;  // feature,vim (empty when no ranking given)
};

inline std::string combination_name(const std::string& classifier, const std::string& resampler) {
  return classifier + "+" + resampler;
}

inline ReportDocument compare_report(std::vector<ComparisonRow> results,
                                     const std::optional<std::vector<trees::Importance>>& importance = std::nullopt) {
  std::stable_sort(results.begin(), results.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    return std::tie(a.classifier, a.resampler) < std::tie(b.classifier, b.resampler);
  });
  ReportDocument doc;
  std::ostringstream text, table, chart;
  table << "classifier,resampler,accuracy,precision_w,recall_w,f1_w,f1_macro\n";
  chart << "combination,f1\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-12s %9s %9s %9s %9s %9s\n", "classifier", "resampler", "accuracy",
                "precision", "recall", "f1_w", "f1_macro");
  text << line;
  for (const auto& r : results) {
    const auto& m = r.metrics;
    std::snprintf(line, sizeof line, "%-12s %-12s %9.4f %9.4f %9.4f %9.4f %9.4f%s\n", r.classifier.c_str(),
                  r.resampler.c_str(), m.accuracy, m.weighted.precision, m.weighted.recall, m.weighted.f1, m.macro.f1,
                  m.any_undefined() ? "  *" : "");
    text << line;
    table << r.classifier << ',' << r.resampler << ',' << csv::format_value(m.accuracy) << ','
          << csv::format_value(m.weighted.precision) << ',' << csv::format_value(m.weighted.recall) << ','
          << csv::format_value(m.weighted.f1) << ',' << csv::format_value(m.macro.f1) << '\n';
    chart << combination_name(r.classifier, r.resampler) << ',' << csv::format_value(m.weighted.f1) << '\n';
  }
  if (std::any_of(results.begin(), results.end(), [](const ComparisonRow& r) { return r.metrics.any_undefined(); })) {
    text << "* a class had no predictions or no true rows; its precision/recall is reported as 0\n";
  }
  doc.table_text = text.str();
  doc.table_csv = table.str();
  doc.chart_csv = chart.str();
  if (importance) {
    std::ostringstream imp;
    trees::write_importance_csv(imp, *importance);
    doc.importance_csv = imp.str();
    doc.table_text += "\nfeature importance (Gini decrease, descending):\n";
    for (const auto& i : *importance) {
      std::snprintf(line, sizeof line, "  %-20s %.6f\n", i.feature.c_str(), i.vim);
      doc.table_text += line;
    }
  }
  return doc;
}

/// Parses chart CSV back into (combination, f1) pairs.
inline std::vector<std::pair<std::string, double>> parse_chart_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "combination,f1") throw Error("eval", ErrorKind::BadInput, "bad chart header");
  std::vector<std::pair<std::string, double>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != 2) throw Error("eval", ErrorKind::BadInput, "bad chart line: " + line);
    out.emplace_back(fields[0], std::stod(fields[1]));
  }
  return out;
}

/// Per-class and averaged metrics as text.
inline std::string format_metrics(const MetricsReport& m, const ConfusionMatrix& cm) {
  std::ostringstream out;
  char line[200];
  out << "confusion (rows true, cols predicted: normal ponzi other_scam)\n";
  for (int r = 0; r < kNumClasses; ++r) {
    std::snprintf(line, sizeof line, "  %-11s %7zu %7zu %7zu\n", std::string(to_string(label_from_index(r))).c_str(),
                  cm.counts[r][0], cm.counts[r][1], cm.counts[r][2]);
    out << line;
  }
  out << "class        precision  recall      f1  support\n";
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& pc = m.per_class[c];
    std::snprintf(line, sizeof line, "%-11s %10.4f %7.4f %7.4f %8zu%s\n", std::string(to_string(label_from_index(c))).c_str(),
                  pc.precision, pc.recall, pc.f1, pc.support, (pc.precision_undefined || pc.recall_undefined) ? " *" : "");
    out << line;
  }
  std::snprintf(line, sizeof line, "macro       %10.4f %7.4f %7.4f\n", m.macro.precision, m.macro.recall, m.macro.f1);
  out << line;
  std::snprintf(line, sizeof line, "weighted    %10.4f %7.4f %7.4f\n", m.weighted.precision, m.weighted.recall, m.weighted.f1);
  out << line;
  std::snprintf(line, sizeof line, "accuracy    %10.4f\n", m.accuracy);
  out << line;
  return out.str();
}

}  // namespace scamlens::eval
