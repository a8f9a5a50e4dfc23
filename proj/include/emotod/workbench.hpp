#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "emotod/config.hpp"
#include "emotod/human_eval.hpp"
#include "emotod/metrics.hpp"
#include "emotod/refinement.hpp"
#include "emotod/report.hpp"

namespace emotod {

// ---------------------------------------------------------------- scoring

/// Gold turns of the corpus keyed by (dialogue id, turn index).
class GoldIndex {
 public:
  explicit GoldIndex(const DialogueCorpus& corpus);
  const Turn& at(const std::string& dialogue_id, std::size_t turn) const;
  std::map<std::string, Goal> goals() const;

 private:
  const DialogueCorpus& corpus_;
};

EmotionReport score_emotions(const std::vector<TurnPrediction>& predictions, const GoldIndex& gold);

/// JGA, inform/success, BLEU against gold delexicalized responses, CBE and
/// unique trigrams of the predicted delexicalized responses.
TaskScores score_task(const std::vector<TurnPrediction>& predictions, const GoldIndex& gold,
                      const KnowledgeBase& kb);

std::size_t diagnostic_count(const std::vector<TurnPrediction>& predictions);

// ---------------------------------------------------------------- commands

struct PrepareSummary {
  std::map<std::pair<Variant, Split>, std::size_t> counts;
};

/// Writes <out>/sequences/<variant>/<split>.txt (one sequence per line) and a
/// matching .index.jsonl. All splits when `split` is empty.
PrepareSummary cmd_prepare(const Config& config, std::optional<Split> split, std::ostream& log);

struct SeedResult {
  std::string seed_tag;
  EmotionReport emotions;
  TaskScores task;
  std::size_t turns = 0;
  std::size_t diagnostics = 0;
  std::size_t failures = 0;
};

struct SystemEvaluation {
  std::string system;  // e.g. PREV-llama
  Variant variant = Variant::prev;
  std::vector<SeedResult> seeds;
};

struct EvaluationReport {
  std::vector<SystemEvaluation> systems;
  MarkedTable emotion_table;  // systems with an emotion segment
  MarkedTable task_table;
};

std::string system_label(Variant variant, const std::string& group);

/// Builds marked tables from per-seed results.
EvaluationReport assemble_report(std::vector<SystemEvaluation> systems, const std::string& group);
std::string evaluation_report_to_json(const EvaluationReport& report);
std::string render_evaluation_report(const EvaluationReport& report);

/// Runs every configured variant once per seed tag, writing prediction files,
/// run manifests and the report under <out>.
EvaluationReport cmd_evaluate(const Config& config, std::ostream& log);

struct RefineSummary {
  std::size_t turns = 0;
  std::size_t prepended = 0;
  std::size_t filtered_too_similar = 0;
  std::size_t neutral_skipped = 0;
  std::size_t empty_snippet = 0;
  std::size_t backend_error = 0;
  TaskScores before;
  TaskScores after;
};

RefineSummary summarize_refinement(const std::vector<RefinedPrediction>& refined,
                                   const GoldIndex& gold, const KnowledgeBase& kb);
std::string refine_summary_to_json(const RefineSummary& summary);

/// Refines <out>/predictions/<variant>/<seed>.jsonl into <out>/refined/.
RefineSummary cmd_refine(const Config& config, std::ostream& log);

/// Renders whatever is available: label statistics of the configured corpus,
/// the saved evaluation report, stored rankings, and a reference table file.
void cmd_report(const Config& config, const std::optional<std::filesystem::path>& reference,
                std::ostream& out);

/// Reference tables: {"label_stats": {...}, "emotion": table, "task": table, "ranking": table}.
std::string render_reference_tables(const std::string& json_text);

EvalSample cmd_sample_eval(const Config& config, std::ostream& log);

/// Blocks serving the annotation endpoints.
int cmd_serve_eval(const Config& config, std::ostream& log);

}  // namespace emotod
