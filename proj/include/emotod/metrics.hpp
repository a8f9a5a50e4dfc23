#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emotod/dialogue.hpp"
#include "emotod/emotion.hpp"
#include "emotod/errors.hpp"
#include "emotod/generation.hpp"
#include "emotod/knowledge_base.hpp"
#include "emotod/normalize.hpp"

namespace emotod {

class MissingGoal : public Error {
 public:
  explicit MissingGoal(const std::string& dialogue_id)
      : Error("no goal for dialogue " + dialogue_id), dialogue_id_(dialogue_id) {}
  const std::string& dialogue_id() const { return dialogue_id_; }

 private:
  std::string dialogue_id_;
};

class IncompleteRecord : public Error {
 public:
  using Error::Error;
};

class RowSumMismatch : public Error {
 public:
  RowSumMismatch(std::size_t row, long sum, long raters)
      : Error("row " + std::to_string(row) + " sums to " + std::to_string(sum) + ", expected " +
              std::to_string(raters)) {}
};

// ---------------------------------------------------------------- emotions

struct EmotionReport {
  std::array<double, kEmotionCount> precision{};
  std::array<double, kEmotionCount> recall{};
  std::array<double, kEmotionCount> f1{};
  std::array<std::size_t, kEmotionCount> support{};  // gold counts
  double macro_f1_excl_neutral = 0.0;                // denominator fixed at 6
  double weighted_f1_excl_neutral = 0.0;             // weights = gold support

  double f1_of(Emotion e) const { return f1[emotion_id(e)]; }
};

EmotionReport emotion_f1(const std::vector<Emotion>& preds, const std::vector<Emotion>& golds);

/// Support-weighted mean; 0 when every weight is zero.
double weighted_average(const std::vector<double>& values, const std::vector<double>& weights);

// ---------------------------------------------------------------- task

/// Exact set match after normalize_belief. nullopt on empty input.
std::optional<double> joint_goal_accuracy(const std::vector<BeliefState>& preds,
                                          const std::vector<BeliefState>& golds,
                                          const Normalizer& normalization);

struct InformSuccess {
  double inform = 0.0;
  double success = 0.0;
  std::size_t dialogues = 0;
};

/// Turns are grouped by dialogue id in the order given. A response carrying
/// the domain's identifier placeholder offers the first entity the then
/// predicted belief retrieves. nullopt when there are no predictions.
std::optional<InformSuccess> inform_success(const std::vector<TurnPrediction>& predictions,
                                            const std::map<std::string, Goal>& goals,
                                            const KnowledgeBase& kb);

/// Requestable slot name as it appears in placeholders (reference -> ref).
std::string requested_placeholder(const std::string& slot);

/// Corpus BLEU-4 in [0, 100], no smoothing, lowercase whitespace tokens.
/// nullopt on an empty corpus.
std::optional<double> corpus_bleu(const std::vector<std::string>& hyps,
                                  const std::vector<std::string>& refs);

/// -sum p(a,b) log2 p(b|a) over bigrams pooled across texts, in bits.
double conditional_bigram_entropy(const std::vector<std::string>& texts);

std::size_t unique_trigrams(const std::vector<std::string>& texts);

// ---------------------------------------------------------------- significance

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
  bool degenerate = false;  // zero variance with nonzero mean difference
};

/// Two-sided paired t-test. Throws LengthMismatch, or InvalidArgument for n < 2.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Two-sided p for a t statistic with df degrees of freedom.
double t_two_sided_p(double t, double df);

inline constexpr double kSignificanceLevel = 0.05;

// ---------------------------------------------------------------- agreement

/// Subjects x categories count table. nullopt when expected agreement is 1.
/// Throws RowSumMismatch, or InvalidArgument for raters < 2 or an empty table.
std::optional<double> fleiss_kappa(const std::vector<std::vector<long>>& table, long raters);

struct RankingRecord {
  std::string example_id;
  std::string rater_id;
  std::map<std::string, int> ranks;  // system -> rank in {1,2,3}

  bool operator==(const RankingRecord&) const = default;
};

inline constexpr int kRankLevels = 3;

struct SystemRanks {
  std::string system;
  std::array<std::size_t, kRankLevels> counts{};
  std::array<double, kRankLevels> distribution{};  // percent
  double mean_rank = 0.0;
  std::optional<double> kappa;
  std::size_t judgements = 0;
};

struct RankReport {
  std::vector<SystemRanks> systems;  // sorted by system name
  std::size_t records = 0;
  std::size_t examples = 0;
  std::size_t raters = 0;
  std::size_t kappa_examples = 0;  // examples carrying the full rater set

  const SystemRanks* find(const std::string& system) const;
};

/// Distribution, mean rank and per-system Fleiss kappa. Kappa uses the
/// examples ranked by the largest rater count seen. Throws IncompleteRecord
/// when a record misses a system or holds a rank outside 1..3.
RankReport rank_summary(const std::vector<RankingRecord>& records);

/// Mean rank implied by a percent distribution over ranks 1..3.
double mean_rank_from_distribution(const std::array<double, kRankLevels>& percent);

}  // namespace emotod
