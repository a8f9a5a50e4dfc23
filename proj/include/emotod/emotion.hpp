#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace emotod {

/// The seven EmoWOZ user emotions. Numeric values are the dataset ids.
enum class Emotion : std::uint8_t {
  neutral = 0,
  fearful = 1,
  dissatisfied = 2,
  apologetic = 3,
  abusive = 4,
  excited = 5,
  satisfied = 6,
};

inline constexpr std::size_t kEmotionCount = 7;

inline constexpr std::array<Emotion, kEmotionCount> kAllEmotions = {
    Emotion::neutral,  Emotion::fearful, Emotion::dissatisfied,
    Emotion::apologetic, Emotion::abusive, Emotion::excited,
    Emotion::satisfied,
};

inline constexpr std::array<Emotion, kEmotionCount - 1> kNonNeutralEmotions = {
    Emotion::fearful, Emotion::dissatisfied, Emotion::apologetic,
    Emotion::abusive, Emotion::excited,      Emotion::satisfied,
};

constexpr int emotion_id(Emotion e) { return static_cast<int>(e); }

std::optional<Emotion> emotion_from_id(int id);

/// Single-word label used inside serialized sequences ("dissatisfied").
std::string_view canonical_name(Emotion e);

/// Compound display label ("dissatisfied, disliking").
std::string_view full_name(Emotion e);

/// Case-insensitive match against canonical names; surrounding whitespace ignored.
std::optional<Emotion> emotion_from_name(std::string_view name);

}  // namespace emotod
