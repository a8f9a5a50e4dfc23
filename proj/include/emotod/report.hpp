#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emotod/corpus.hpp"
#include "emotod/metrics.hpp"

namespace emotod {

struct MetricColumn {
  std::string name;
  int decimals = 2;
  bool higher_is_better = true;
  bool marked = true;  // takes part in bold/significance marking
};

/// Per-seed values of one system, values[column][seed]. Seeds are paired by
/// position across rows.
struct ScoreRow {
  std::string system;
  std::string group;  // best values are marked within a group
  std::vector<std::vector<double>> values;
};

struct ScoreTable {
  std::string title;
  std::vector<MetricColumn> columns;
  std::vector<ScoreRow> rows;
};

struct Comparison {
  std::string group;
  std::size_t column = 0;
  std::string first;   // better mean
  std::string second;
  TTestResult test;
  bool significant = false;
  bool fallback = false;  // second vs third after an insignificant best vs second
};

struct MarkedCell {
  double value = 0.0;
  bool bold = false;
  bool star = false;
};

struct MarkedRow {
  std::string system;
  std::string group;
  std::vector<MarkedCell> cells;
};

struct MarkedTable {
  std::string title;
  std::vector<MetricColumn> columns;
  std::vector<MarkedRow> rows;
  std::vector<Comparison> comparisons;
};

/// Means over seeds; best per group and column in bold. The best value gets an
/// asterisk when its paired t-test against the second best has p < 0.05;
/// otherwise second and third best are compared the same way.
MarkedTable mark_table(const ScoreTable& table);

std::string format_value(double value, int decimals);
std::string format_cell(const MarkedCell& cell, int decimals);

/// Plain values joined by " / ".
std::string format_row_plain(const MarkedRow& row, const std::vector<MetricColumn>& columns);

/// Aligned text, one line per row, bold as **x** and significance as a trailing *.
std::string render_text(const MarkedTable& table);
std::string table_to_json(const MarkedTable& table);
MarkedTable table_from_json(const std::string& json_text);

std::vector<MetricColumn> emotion_columns();  // 7 classes, macro, weighted
std::vector<MetricColumn> task_columns();     // inform, success, jga, cbe, unique tri., bleu

/// Percent values in emotion_columns() order.
std::vector<double> emotion_row_values(const EmotionReport& report);

struct TaskScores {
  std::optional<double> inform;
  std::optional<double> success;
  std::optional<double> jga;
  double cbe = 0.0;
  std::size_t unique_trigrams = 0;
  std::optional<double> bleu;
};

/// Percent values in task_columns() order; undefined metrics become NaN.
std::vector<double> task_row_values(const TaskScores& scores);

std::string render_label_stats(const LabelStats& stats);
std::string label_stats_to_json(const LabelStats& stats);

MarkedTable rank_table(const RankReport& report);
std::string render_rank_report(const RankReport& report);
std::string rank_report_to_json(const RankReport& report);

}  // namespace emotod
