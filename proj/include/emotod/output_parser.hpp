#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "emotod/dialogue.hpp"
#include "emotod/normalize.hpp"
#include "emotod/sequencer.hpp"

namespace emotod {

enum class ParseIssueKind { missing_segment, malformed_entry, unknown_emotion, truncated_output };

std::string_view issue_kind_name(ParseIssueKind kind);

struct ParseIssue {
  ParseIssueKind kind;
  SegmentTag segment;
  std::string detail;

  bool operator==(const ParseIssue&) const = default;
};

/// Structured prediction recovered from generated text. Always fully
/// populated: a segment that cannot be read keeps its default (empty belief,
/// neutral emotion, empty acts, empty response) and adds a ParseIssue.
struct ParsedTurn {
  BeliefState belief;
  Emotion emotion = Emotion::neutral;
  DialogueActSet acts;
  std::string response_delex;
  std::vector<ParseIssue> diagnostics;

  bool well_formed() const { return diagnostics.empty(); }
};

/// Accepts a full training sequence or a continuation of an inference prompt
/// (text starting right after "<|belief|>"). Never throws.
ParsedTurn parse_generation(std::string_view text, Variant variant);

/// Apply the shared value canon to every entry. Idempotent, order-insensitive.
/// Entries whose keys collide after normalization keep the smallest value.
BeliefState normalize_belief(const BeliefState& raw, const Normalizer& normalization);

}  // namespace emotod
