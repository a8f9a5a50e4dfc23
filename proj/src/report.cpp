#include "emotod/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace emotod {

using nlohmann::json;

namespace {

double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    sum += x;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_from(const json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string format_value(double value, int decimals) {
  if (std::isnan(value)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  if (s == "-0" || s.rfind("-0.", 0) == 0) {
    if (s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  }
  return s;
}

std::string format_cell(const MarkedCell& cell, int decimals) {
  std::string s = format_value(cell.value, decimals);
  if (cell.bold) s = "**" + s + "**";
  if (cell.star) s += "*";
  return s;
}

std::string format_row_plain(const MarkedRow& row, const std::vector<MetricColumn>& columns) {
  std::string out;
  for (std::size_t c = 0; c < row.cells.size() && c < columns.size(); ++c) {
    if (c) out += " / ";
    out += format_value(row.cells[c].value, columns[c].decimals);
  }
  return out;
}

MarkedTable mark_table(const ScoreTable& table) {
  MarkedTable out;
  out.title = table.title;
  out.columns = table.columns;
  for (const auto& row : table.rows) {
    if (row.values.size() != table.columns.size()) {
      throw LengthMismatch(row.values.size(), table.columns.size());
    }
    MarkedRow m;
    m.system = row.system;
    m.group = row.group;
    for (const auto& seeds : row.values) m.cells.push_back({mean_of(seeds), false, false});
    out.rows.push_back(std::move(m));
  }

  std::vector<std::string> groups;
  for (const auto& row : table.rows) {
    if (std::find(groups.begin(), groups.end(), row.group) == groups.end()) groups.push_back(row.group);
  }

  for (const auto& group : groups) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      if (table.rows[i].group == group) members.push_back(i);
    }
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      const auto& col = table.columns[c];
      if (!col.marked) continue;
      std::vector<std::size_t> ranked;
      for (std::size_t i : members) {
        if (!std::isnan(out.rows[i].cells[c].value)) ranked.push_back(i);
      }
      if (ranked.empty()) continue;
      std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
        const double va = out.rows[a].cells[c].value;
        const double vb = out.rows[b].cells[c].value;
        return col.higher_is_better ? va > vb : va < vb;
      });
      const std::string best_text = format_value(out.rows[ranked[0]].cells[c].value, col.decimals);
      for (std::size_t i : ranked) {
        if (format_value(out.rows[i].cells[c].value, col.decimals) == best_text) {
          out.rows[i].cells[c].bold = true;
        }
      }

      auto compare = [&](std::size_t hi, std::size_t lo, bool fallback) -> std::optional<bool> {
        const auto& a = table.rows[ranked[hi]].values[c];
        const auto& b = table.rows[ranked[lo]].values[c];
        if (a.size() != b.size() || a.size() < 2) return std::nullopt;
        if (std::any_of(a.begin(), a.end(), [](double x) { return std::isnan(x); }) ||
            std::any_of(b.begin(), b.end(), [](double x) { return std::isnan(x); })) {
          return std::nullopt;
        }
        Comparison cmp;
        cmp.group = group;
        cmp.column = c;
        cmp.first = table.rows[ranked[hi]].system;
        cmp.second = table.rows[ranked[lo]].system;
        cmp.test = paired_t_test(a, b);
        cmp.significant = cmp.test.p < kSignificanceLevel;
        cmp.fallback = fallback;
        out.comparisons.push_back(cmp);
        return cmp.significant;
      };

      if (ranked.size() < 2) continue;
      auto first = compare(0, 1, false);
      if (first && *first) {
        out.rows[ranked[0]].cells[c].star = true;
      } else if (first && ranked.size() >= 3) {
        auto second = compare(1, 2, true);
        if (second && *second) out.rows[ranked[1]].cells[c].star = true;
      }
    }
  }
  return out;
}

std::string render_text(const MarkedTable& table) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"Model"};
  for (const auto& c : table.columns) header.push_back(c.name);
  grid.push_back(header);
  for (const auto& row : table.rows) {
    std::vector<std::string> line{row.system};
    for (std::size_t c = 0; c < row.cells.size(); ++c) {
      line.push_back(format_cell(row.cells[c], table.columns[c].decimals));
    }
    grid.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::string out;
  if (!table.title.empty()) out += table.title + "\n";
  std::string prev_group = table.rows.empty() ? "" : table.rows.front().group;
  std::size_t total = 0;
  for (std::size_t w : width) total += w + 2;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    if (r == 1 || (r > 1 && table.rows[r - 1].group != prev_group)) {
      out += std::string(total - 2, '-') + "\n";
      if (r > 1) prev_group = table.rows[r - 1].group;
    }
    std::string line;
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      if (c) line += "  ";
      line += c == 0 ? pad_right(grid[r][c], width[c]) : pad_left(grid[r][c], width[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string table_to_json(const MarkedTable& table) {
  json j;
  j["title"] = table.title;
  j["columns"] = json::array();
  for (const auto& c : table.columns) {
    j["columns"].push_back({{"name", c.name},
                            {"decimals", c.decimals},
                            {"higher_is_better", c.higher_is_better},
                            {"marked", c.marked}});
  }
  j["rows"] = json::array();
  for (const auto& r : table.rows) {
    json cells = json::array();
    for (const auto& cell : r.cells) {
      cells.push_back({{"value", number_or_null(cell.value)}, {"bold", cell.bold}, {"star", cell.star}});
    }
    j["rows"].push_back({{"system", r.system}, {"group", r.group}, {"cells", cells}});
  }
  j["comparisons"] = json::array();
  for (const auto& c : table.comparisons) {
    j["comparisons"].push_back({{"group", c.group},
                                {"column", table.columns[c.column].name},
                                {"first", c.first},
                                {"second", c.second},
                                {"t", number_or_null(std::isinf(c.test.t) ? std::nan("") : c.test.t)},
                                {"p", c.test.p},
                                {"df", c.test.df},
                                {"degenerate", c.test.degenerate},
                                {"significant", c.significant},
                                {"fallback", c.fallback}});
  }
  return j.dump(2);
}

MarkedTable table_from_json(const std::string& json_text) {
  MarkedTable t;
  try {
    const json j = json::parse(json_text);
    t.title = j.value("title", "");
    for (const auto& c : j.at("columns")) {
      MetricColumn col;
      col.name = c.at("name").get<std::string>();
      col.decimals = c.value("decimals", 2);
      col.higher_is_better = c.value("higher_is_better", true);
      col.marked = c.value("marked", true);
      t.columns.push_back(col);
    }
    for (const auto& r : j.at("rows")) {
      MarkedRow row;
      row.system = r.at("system").get<std::string>();
      row.group = r.value("group", "");
      for (const auto& cell : r.at("cells")) {
        if (cell.is_object()) {
          row.cells.push_back({number_from(cell.at("value")), cell.value("bold", false),
                               cell.value("star", false)});
        } else {
          row.cells.push_back({number_from(cell), false, false});
        }
      }
      if (row.cells.size() != t.columns.size()) throw LengthMismatch(row.cells.size(), t.columns.size());
      t.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("table: ") + e.what());
  }
  return t;
}

std::vector<MetricColumn> emotion_columns() {
  return {{"Neut.", 1}, {"Fear.", 1}, {"Diss.", 1}, {"Apol.", 1}, {"Abus.", 1},
          {"Exci.", 1}, {"Sat.", 1},  {"Macro", 1}, {"Weigh.", 1}};
}

std::vector<MetricColumn> task_columns() {
  return {{"Inform", 2}, {"Success", 2}, {"JGA", 2}, {"CBE", 2}, {"Unique tri.", 1}, {"BLEU", 2}};
}

std::vector<double> emotion_row_values(const EmotionReport& report) {
  std::vector<double> v;
  for (Emotion e : kAllEmotions) v.push_back(100.0 * report.f1_of(e));
  v.push_back(100.0 * report.macro_f1_excl_neutral);
  v.push_back(100.0 * report.weighted_f1_excl_neutral);
  return v;
}

std::vector<double> task_row_values(const TaskScores& s) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto pct = [&](const std::optional<double>& x) { return x ? 100.0 * *x : nan; };
  return {pct(s.inform), pct(s.success), pct(s.jga), s.cbe, static_cast<double>(s.unique_trigrams),
          s.bleu ? *s.bleu : nan};
}

std::string render_label_stats(const LabelStats& stats) {
  std::vector<std::string> names{""};
  std::vector<std::string> counts{"Count"};
  std::vector<std::string> props{"%"};
  for (Emotion e : kAllEmotions) {
    names.emplace_back(canonical_name(e));
    const std::size_t n = stats.counts[emotion_id(e)];
    std::string c = std::to_string(n);
    for (int pos = static_cast<int>(c.size()) - 3; pos > 0; pos -= 3) c.insert(static_cast<std::size_t>(pos), ",");
    counts.push_back(c);
    props.push_back(format_value(100.0 * stats.proportions[emotion_id(e)], 1));
  }
  std::string out;
  for (const auto* line : {&names, &counts, &props}) {
    std::string s;
    for (std::size_t c = 0; c < line->size(); ++c) {
      std::size_t w = std::max({names[c].size(), counts[c].size(), props[c].size()});
      if (c) s += "  ";
      s += c == 0 ? pad_right((*line)[c], w) : pad_left((*line)[c], w);
    }
    out += s + "\n";
  }
  return out;
}

std::string label_stats_to_json(const LabelStats& stats) {
  json j;
  j["total"] = stats.total();
  for (Emotion e : kAllEmotions) {
    j["counts"][std::string(canonical_name(e))] = stats.counts[emotion_id(e)];
    j["proportions"][std::string(canonical_name(e))] = stats.proportions[emotion_id(e)];
  }
  return j.dump(2);
}

MarkedTable rank_table(const RankReport& report) {
  ScoreTable t;
  t.title = "Human ranking";
  t.columns = {{"#1", 2, true}, {"#2", 2, true}, {"#3", 2, true}, {"Mean Rank", 2, false},
               {"kappa", 2, true, false}};
  for (const auto& s : report.systems) {
    ScoreRow row;
    row.system = s.system;
    for (double d : s.distribution) row.values.push_back({d});
    row.values.push_back({s.mean_rank});
    row.values.push_back({s.kappa ? *s.kappa : std::numeric_limits<double>::quiet_NaN()});
    t.rows.push_back(std::move(row));
  }
  return mark_table(t);
}

std::string render_rank_report(const RankReport& report) { return render_text(rank_table(report)); }

std::string rank_report_to_json(const RankReport& report) {
  json j;
  j["records"] = report.records;
  j["examples"] = report.examples;
  j["raters"] = report.raters;
  j["kappa_examples"] = report.kappa_examples;
  j["systems"] = json::array();
  for (const auto& s : report.systems) {
    j["systems"].push_back({{"system", s.system},
                            {"counts", s.counts},
                            {"distribution", s.distribution},
                            {"mean_rank", s.mean_rank},
                            {"kappa", s.kappa ? json(*s.kappa) : json(nullptr)},
                            {"judgements", s.judgements}});
  }
  return j.dump(2);
}

}  // namespace emotod
