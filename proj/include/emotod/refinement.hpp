#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emotod/dialogue.hpp"
#include "emotod/emotion.hpp"
#include "emotod/generation.hpp"

namespace emotod {

/// Unit-cost edit distance over UTF-8 code points.
std::size_t levenshtein_distance(std::string_view a, std::string_view b);

/// 1 - distance / max(len a, len b), in code points; two empty strings give 1.
double levenshtein_ratio(std::string_view a, std::string_view b);

/// Snippets at or above this similarity to the response are discarded.
inline constexpr double kSnippetSimilarityThreshold = 0.5;

class NeutralEmotion : public Error {
 public:
  NeutralEmotion() : Error("refinement prompts are only built for non-neutral emotions") {}
};

struct Exemplar {
  Emotion emotion = Emotion::neutral;
  std::string context;  // rendered with <|user|>/<|system|> tags, one turn per line
  std::string emotion_full_name;
  std::string original_response;
  std::string thought;
  std::string snippet;
};

struct ExemplarSet {
  std::string instruction;
  std::vector<Exemplar> exemplars;  // one per non-neutral emotion, ordered by id
};

/// Fixture layout: {"instruction": "...", "exemplars": [{"emotion_id", "context":
/// [[speaker, text], ...], "original_response", "thought", "snippet"}, ...]}.
/// Requires exactly one exemplar per non-neutral emotion.
ExemplarSet load_exemplars(const std::filesystem::path& path);
ExemplarSet parse_exemplars(std::string_view json_text);

/// The exemplar fixture shipped with the library.
const ExemplarSet& default_exemplars();

/// "<|user|> ..." / "<|system|> ..." lines.
std::string render_refine_context(const std::vector<Utterance>& history);

/// Instruction, the exemplars, then the query block ending with
/// "Add before the original response:". Throws NeutralEmotion.
std::string build_refine_prompt(std::string_view context, Emotion emotion,
                                std::string_view response_delex, const ExemplarSet& exemplars);

enum class FilterReason { none, neutral_emotion, too_similar, empty_snippet, backend_error };

std::string_view filter_reason_name(FilterReason reason);
FilterReason filter_reason_from_name(std::string_view name);

struct RefinedPrediction {
  TurnPrediction base;
  std::optional<std::string> snippet;
  std::string response_refined;      // delexicalized
  std::string response_refined_lex;  // snippet + lexicalized base response
  FilterReason filtered_reason = FilterReason::none;
  std::optional<double> similarity;
  std::string diagnostic;
};

/// First line of the generation, whitespace and surrounding quotes stripped.
std::string clean_snippet(std::string_view raw);

/// One sampling attempt per non-neutral turn. Neutral turns never reach the
/// backend; backend failures pass the response through unchanged.
RefinedPrediction refine_turn(GenerationBackend& backend, const TurnPrediction& prediction,
                              const ExemplarSet& exemplars,
                              const GenParams& params = GenParams::refinement());

std::vector<RefinedPrediction> refine_all(GenerationBackend& backend,
                                          const std::vector<TurnPrediction>& predictions,
                                          const ExemplarSet& exemplars, const GenParams& params,
                                          std::size_t parallelism = 1);

std::string refined_to_json(const RefinedPrediction& refined);
RefinedPrediction refined_from_json(std::string_view line);

}  // namespace emotod
