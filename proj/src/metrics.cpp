#include "emotod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include <boost/math/special_functions/beta.hpp>

#include "emotod/output_parser.hpp"
#include "emotod/text.hpp"

namespace emotod {
namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

using NGram = std::vector<std::string>;

std::map<NGram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<NGram, std::size_t> out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[NGram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- emotions

EmotionReport emotion_f1(const std::vector<Emotion>& preds, const std::vector<Emotion>& golds) {
  if (preds.size() != golds.size()) throw LengthMismatch(preds.size(), golds.size());
  std::array<std::size_t, kEmotionCount> tp{}, pred_count{};
  EmotionReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = emotion_id(preds[i]);
    const int g = emotion_id(golds[i]);
    ++pred_count[p];
    ++r.support[g];
    if (p == g) ++tp[p];
  }
  for (std::size_t c = 0; c < kEmotionCount; ++c) {
    r.precision[c] = safe_div(static_cast<double>(tp[c]), static_cast<double>(pred_count[c]));
    r.recall[c] = safe_div(static_cast<double>(tp[c]), static_cast<double>(r.support[c]));
    r.f1[c] = safe_div(2.0 * r.precision[c] * r.recall[c], r.precision[c] + r.recall[c]);
  }
  std::vector<double> values;
  std::vector<double> weights;
  for (Emotion e : kNonNeutralEmotions) {
    values.push_back(r.f1_of(e));
    weights.push_back(static_cast<double>(r.support[emotion_id(e)]));
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  r.macro_f1_excl_neutral = sum / static_cast<double>(kNonNeutralEmotions.size());
  r.weighted_f1_excl_neutral = weighted_average(values, weights);
  return r;
}

double weighted_average(const std::vector<double>& values, const std::vector<double>& weights) {
  if (values.size() != weights.size()) throw LengthMismatch(values.size(), weights.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += values[i] * weights[i];
    den += weights[i];
  }
  return safe_div(num, den);
}

// ---------------------------------------------------------------- task

std::optional<double> joint_goal_accuracy(const std::vector<BeliefState>& preds,
                                          const std::vector<BeliefState>& golds,
                                          const Normalizer& normalization) {
  if (preds.size() != golds.size()) throw LengthMismatch(preds.size(), golds.size());
  if (preds.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (normalize_belief(preds[i], normalization) == normalize_belief(golds[i], normalization)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::string requested_placeholder(const std::string& slot) {
  std::string s;
  for (char c : text::to_lower(slot)) {
    if (c != ' ' && c != '_') s.push_back(c);
  }
  if (s == "reference") return "ref";
  return s;
}

std::optional<InformSuccess> inform_success(const std::vector<TurnPrediction>& predictions,
                                            const std::map<std::string, Goal>& goals,
                                            const KnowledgeBase& kb) {
  if (predictions.empty()) return std::nullopt;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const TurnPrediction*>> by_dialogue;
  for (const auto& p : predictions) {
    auto [it, fresh] = by_dialogue.try_emplace(p.dialogue_id);
    if (fresh) order.push_back(p.dialogue_id);
    it->second.push_back(&p);
  }

  std::size_t informed = 0;
  std::size_t succeeded = 0;
  for (const auto& id : order) {
    auto goal_it = goals.find(id);
    if (goal_it == goals.end()) throw MissingGoal(id);
    const Goal& goal = goal_it->second;
    auto turns = by_dialogue[id];
    std::stable_sort(turns.begin(), turns.end(), [](const auto* a, const auto* b) {
      return a->turn_index < b->turn_index;
    });

    std::map<std::string, Entity> offered;
    std::set<std::string> provided;
    for (const auto* turn : turns) {
      const auto slots = placeholders_in(turn->parsed.response_delex);
      provided.insert(slots.begin(), slots.end());
      const auto domain = active_domain(turn->parsed, kb);
      if (!domain) continue;
      const std::string id_slot(identifier_slot(*domain));
      if (std::find(slots.begin(), slots.end(), id_slot) == slots.end()) continue;
      auto results = query(kb, turn->parsed.belief, *domain);
      if (results.empty()) {
        offered.erase(*domain);
      } else {
        offered.insert_or_assign(*domain, std::move(results.front()));
      }
    }

    bool inform = true;
    for (const auto& [domain, dg] : goal) {
      if (dg.constraints.empty() || !kb.has_domain(domain)) continue;
      auto it = offered.find(domain);
      if (it == offered.end() || !entity_matches(kb, it->second, dg.constraints)) {
        inform = false;
        break;
      }
    }
    bool success = inform;
    for (const auto& [domain, dg] : goal) {
      for (const auto& slot : dg.requested) {
        if (!provided.count(requested_placeholder(slot))) success = false;
      }
    }
    informed += inform ? 1 : 0;
    succeeded += success ? 1 : 0;
  }
  InformSuccess r;
  r.dialogues = order.size();
  r.inform = static_cast<double>(informed) / static_cast<double>(r.dialogues);
  r.success = static_cast<double>(succeeded) / static_cast<double>(r.dialogues);
  return r;
}

std::optional<double> corpus_bleu(const std::vector<std::string>& hyps,
                                  const std::vector<std::string>& refs) {
  if (hyps.size() != refs.size()) throw LengthMismatch(hyps.size(), refs.size());
  if (hyps.empty()) return std::nullopt;
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto h = text::metric_tokens(hyps[i]);
    const auto r = text::metric_tokens(refs[i]);
    hyp_len += h.size();
    ref_len += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto hc = ngram_counts(h, n);
      const auto rc = ngram_counts(r, n);
      for (const auto& [gram, count] : hc) {
        totals[n - 1] += count;
        auto it = rc.find(gram);
        if (it != rc.end()) matches[n - 1] += std::min(count, it->second);
      }
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (matches[n] == 0) return 0.0;
    log_sum += 0.25 * std::log(static_cast<double>(matches[n]) / static_cast<double>(totals[n]));
  }
  const double bp = hyp_len >= ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_sum);
}

double conditional_bigram_entropy(const std::vector<std::string>& texts) {
  std::map<std::pair<std::string, std::string>, std::size_t> joint;
  std::unordered_map<std::string, std::size_t> first;
  std::size_t total = 0;
  for (const auto& t : texts) {
    const auto tokens = text::metric_tokens(t);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      ++joint[{tokens[i], tokens[i + 1]}];
      ++first[tokens[i]];
      ++total;
    }
  }
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [pair, count] : joint) {
    const double p_joint = static_cast<double>(count) / static_cast<double>(total);
    const double p_cond = static_cast<double>(count) / static_cast<double>(first[pair.first]);
    h -= p_joint * std::log2(p_cond);
  }
  return h <= 0.0 ? 0.0 : h;
}

std::size_t unique_trigrams(const std::vector<std::string>& texts) {
  std::set<NGram> seen;
  for (const auto& t : texts) {
    for (auto& [gram, count] : ngram_counts(text::metric_tokens(t), 3)) seen.insert(gram);
  }
  return seen.size();
}

// ---------------------------------------------------------------- significance

double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return boost::math::ibeta(df / 2.0, 0.5, x);
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  const std::size_t n = a.size();
  if (n < 2) throw InvalidArgument("paired t-test needs at least 2 pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];

  TTestResult r;
  r.df = n - 1;
  const bool constant = std::all_of(d.begin(), d.end(), [&](double x) { return x == d[0]; });
  if (constant) {
    if (d[0] == 0.0) return r;
    r.t = d[0] > 0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.degenerate = true;
    return r;
  }
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = t_two_sided_p(r.t, static_cast<double>(r.df));
  return r;
}

// ---------------------------------------------------------------- agreement

std::optional<double> fleiss_kappa(const std::vector<std::vector<long>>& table, long raters) {
  if (raters < 2) throw InvalidArgument("fleiss kappa needs at least 2 raters");
  if (table.empty() || table.front().empty()) throw InvalidArgument("fleiss kappa on an empty table");
  const std::size_t k = table.front().size();
  std::vector<double> col(k, 0.0);
  double p_bar = 0.0;
  const double n = static_cast<double>(raters);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    if (row.size() != k) throw InvalidArgument("fleiss kappa rows differ in width");
    long sum = 0;
    double sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (row[j] < 0) throw InvalidArgument("negative count in fleiss table");
      sum += row[j];
      sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
      col[j] += static_cast<double>(row[j]);
    }
    if (sum != raters) throw RowSumMismatch(i, sum, raters);
    p_bar += (sq - n) / (n * (n - 1.0));
  }
  const double subjects = static_cast<double>(table.size());
  p_bar /= subjects;
  double p_e = 0.0;
  for (double c : col) {
    const double p = c / (subjects * n);
    p_e += p * p;
  }
  if (p_e == 1.0) return std::nullopt;
  return (p_bar - p_e) / (1.0 - p_e);
}

const SystemRanks* RankReport::find(const std::string& system) const {
  for (const auto& s : systems) {
    if (s.system == system) return &s;
  }
  return nullptr;
}

RankReport rank_summary(const std::vector<RankingRecord>& records) {
  std::set<std::string> systems;
  for (const auto& rec : records) {
    for (const auto& [sys, rank] : rec.ranks) systems.insert(sys);
  }
  std::set<std::pair<std::string, std::string>> keys;
  std::set<std::string> raters;
  std::map<std::string, std::vector<const RankingRecord*>> by_example;
  for (const auto& rec : records) {
    if (!keys.insert({rec.example_id, rec.rater_id}).second) {
      throw IncompleteRecord("duplicate ranking for example " + rec.example_id + " by rater " +
                             rec.rater_id);
    }
    for (const auto& sys : systems) {
      auto it = rec.ranks.find(sys);
      if (it == rec.ranks.end()) {
        throw IncompleteRecord("example " + rec.example_id + " rater " + rec.rater_id +
                               " has no rank for " + sys);
      }
      if (it->second < 1 || it->second > kRankLevels) {
        throw IncompleteRecord("example " + rec.example_id + " rater " + rec.rater_id +
                               " rank out of range for " + sys);
      }
    }
    raters.insert(rec.rater_id);
    by_example[rec.example_id].push_back(&rec);
  }

  RankReport report;
  report.records = records.size();
  report.examples = by_example.size();
  report.raters = raters.size();
  std::size_t full = 0;
  for (const auto& [ex, recs] : by_example) full = std::max(full, recs.size());
  for (const auto& [ex, recs] : by_example) {
    if (recs.size() == full && full >= 2) ++report.kappa_examples;
  }

  for (const auto& sys : systems) {
    SystemRanks s;
    s.system = sys;
    std::vector<std::vector<long>> table;
    for (const auto& [ex, recs] : by_example) {
      std::vector<long> row(kRankLevels, 0);
      for (const auto* rec : recs) {
        const int rank = rec->ranks.at(sys);
        ++s.counts[rank - 1];
        ++row[rank - 1];
      }
      if (recs.size() == full) table.push_back(std::move(row));
    }
    s.judgements = records.size();
    double weighted = 0.0;
    for (int r = 0; r < kRankLevels; ++r) {
      s.distribution[r] = 100.0 * safe_div(static_cast<double>(s.counts[r]),
                                           static_cast<double>(s.judgements));
      weighted += static_cast<double>(r + 1) * static_cast<double>(s.counts[r]);
    }
    s.mean_rank = safe_div(weighted, static_cast<double>(s.judgements));
    if (full >= 2 && !table.empty()) s.kappa = fleiss_kappa(table, static_cast<long>(full));
    report.systems.push_back(std::move(s));
  }
  return report;
}

double mean_rank_from_distribution(const std::array<double, kRankLevels>& percent) {
  double num = 0.0;
  double den = 0.0;
  for (int r = 0; r < kRankLevels; ++r) {
    num += static_cast<double>(r + 1) * percent[r];
    den += percent[r];
  }
  return safe_div(num, den);
}

}  // namespace emotod
