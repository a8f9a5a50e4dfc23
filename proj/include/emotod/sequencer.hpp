#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "emotod/dialogue.hpp"
#include "emotod/normalize.hpp"

namespace emotod {

enum class Variant { simple, emo, prev };

std::string_view variant_name(Variant v);   // "simple" | "emo" | "prev"
Variant variant_from_name(std::string_view name);  // throws InvalidArgument
bool has_emotion_segment(Variant v);

namespace tokens {
inline constexpr std::string_view kContext = "<|context|>";
inline constexpr std::string_view kEndOfContext = "<|endofcontext|>";
inline constexpr std::string_view kUser = "<|user|>";
inline constexpr std::string_view kSystem = "<|system|>";
inline constexpr std::string_view kBelief = "<|belief|>";
inline constexpr std::string_view kEndOfBelief = "<|endofbelief|>";
inline constexpr std::string_view kEmotion = "<|emotion|>";
inline constexpr std::string_view kEndOfEmotion = "<|endofemotion|>";
inline constexpr std::string_view kAction = "<|action|>";
inline constexpr std::string_view kEndOfAction = "<|endofaction|>";
inline constexpr std::string_view kResponse = "<|response|>";
inline constexpr std::string_view kEndOfResponse = "<|endofresponse|>";
inline constexpr std::string_view kFeel = "<|feel|>";
inline constexpr std::string_view kEndOfFeel = "<|endoffeel|>";
}  // namespace tokens

enum class SegmentTag { context, belief, emotion, action, response };

std::string_view segment_name(SegmentTag tag);

/// Byte range [begin, end) of a segment's content inside the sequence text.
struct SegmentSpan {
  SegmentTag tag;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const SegmentSpan&) const = default;
};

struct SerializedSequence {
  std::string text;
  std::vector<SegmentSpan> segments;
  Variant variant = Variant::emo;

  std::string_view content(SegmentTag tag) const;
};

/// "domain slot value" triples joined by ", ", in lexicographic order.
std::string render_belief(const BeliefState& belief);
/// "domain act slot" triples joined by ", ", in lexicographic order.
std::string render_acts(const DialogueActSet& acts);

/// [C_t, B_t, (E_t,) A_t, S_t] for one gold turn. PREV annotates every prior
/// user utterance with its gold emotion.
SerializedSequence build_training_sequence(const Dialogue& dialogue, std::size_t turn_index,
                                           Variant variant);

/// Context-only prompt ending at "<|endofcontext|> <|belief|>". The history must
/// end with a user utterance. For PREV, prior_emotions annotates every user
/// utterance except the last and its length must match (ArityError otherwise);
/// other variants ignore it.
std::string build_inference_prompt(const std::vector<Utterance>& history,
                                   const std::vector<Emotion>& prior_emotions, Variant variant);

struct DelexResult {
  std::string text;
  std::vector<std::string> unmatched;  // placeholders whose value never occurred
};

/// Replace surface values by bracketed placeholders. Matching is
/// case-insensitive on whole words, longest value first, and never rewrites
/// text inside an existing [placeholder].
DelexResult delexicalize(std::string_view utterance,
                         const std::map<std::string, std::string>& bindings);
DelexResult delexicalize(std::string_view utterance,
                         const std::map<std::string, std::string>& bindings,
                         const Normalizer& normalization);

}  // namespace emotod
