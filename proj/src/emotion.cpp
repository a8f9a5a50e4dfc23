#include "emotod/emotion.hpp"

#include "emotod/text.hpp"

namespace emotod {
namespace {

constexpr std::array<std::string_view, kEmotionCount> kCanonical = {
    "neutral", "fearful", "dissatisfied", "apologetic", "abusive", "excited", "satisfied",
};

constexpr std::array<std::string_view, kEmotionCount> kFull = {
    "neutral",
    "fearful, sad, disappointed",
    "dissatisfied, disliking",
    "apologetic",
    "abusive",
    "excited, happy, anticipating",
    "satisfied, liking, appreciative",
};

}  // namespace

std::optional<Emotion> emotion_from_id(int id) {
  if (id < 0 || id >= static_cast<int>(kEmotionCount)) return std::nullopt;
  return static_cast<Emotion>(id);
}

std::string_view canonical_name(Emotion e) { return kCanonical[emotion_id(e)]; }

std::string_view full_name(Emotion e) { return kFull[emotion_id(e)]; }

std::optional<Emotion> emotion_from_name(std::string_view name) {
  const std::string folded = text::to_lower(text::trim(name));
  for (std::size_t i = 0; i < kEmotionCount; ++i) {
    if (folded == kCanonical[i]) return static_cast<Emotion>(i);
  }
  return std::nullopt;
}

}  // namespace emotod
