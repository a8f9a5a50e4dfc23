#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "emotod/dialogue.hpp"
#include "emotod/normalize.hpp"

namespace emotod {

enum class Split { train, validation, test };

std::string_view split_name(Split split);
Split split_from_name(std::string_view name);  // throws InvalidArgument

inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::validation,
                                                    Split::test};

/// An immutable set of dialogues in file order, indexed by id.
class DialogueCorpus {
 public:
  DialogueCorpus() = default;
  explicit DialogueCorpus(std::vector<Dialogue> dialogues, std::string checksum = {});

  const std::vector<Dialogue>& dialogues() const { return dialogues_; }
  const Dialogue* find(std::string_view id) const;
  std::size_t size() const { return dialogues_.size(); }
  std::size_t user_turn_count() const;

  /// Checksum of the source bytes (or of the serialized dialogues when built in memory).
  const std::string& checksum() const { return checksum_; }

  /// Concatenate corpora in argument order; duplicate ids are a SchemaError.
  static DialogueCorpus merge(const std::vector<DialogueCorpus>& parts);

 private:
  std::vector<Dialogue> dialogues_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::string checksum_;
};

/// Corpus directory layout:
///   splits.json          {"train": [ids...], "validation": [...], "test": [...]}
///   train.json, validation.json, test.json   arrays of dialogue records
///   normalization.json   optional value canon (see Normalizer)
///
/// Dialogue record:
///   {"dialogue_id": "...",
///    "goal": {"<domain>": {"constraints": {...}, "requested": [...], "booking": {...}}},
///    "turns": [{"user": "...", "emotion_id": 0..6 | [ids...],
///               "belief": [[domain, slot, value], ...],
///               "acts": [[domain, act, slot], ...],
///               "response_lex": "...", "response_delex": "..."}]}
///
/// A list-valued emotion_id holds several annotator labels and resolves by
/// majority, ties toward the lower id.
DialogueCorpus load_corpus(const std::filesystem::path& dir, Split split);
DialogueCorpus load_corpus(const std::filesystem::path& dir, Split split,
                           const Normalizer& normalization);

/// All splits, train then validation then test.
DialogueCorpus load_full_corpus(const std::filesystem::path& dir);

/// The directory's normalization.json, or the default canon when absent.
Normalizer load_normalizer(const std::filesystem::path& dir);

/// Parse one dialogue record. Exposed for tools that build corpora in memory.
Dialogue parse_dialogue_record(const std::string& json_text, const Normalizer& normalization);

/// Inverse of parse_dialogue_record.
std::string dialogue_to_json(const Dialogue& dialogue);

/// Write a corpus directory in the layout above. Splits absent from the map
/// get empty files.
void write_corpus(const std::filesystem::path& dir,
                  const std::map<Split, std::vector<Dialogue>>& splits);

struct LabelStats {
  std::array<std::size_t, kEmotionCount> counts{};
  std::array<double, kEmotionCount> proportions{};

  std::size_t total() const;
  std::size_t count(Emotion e) const { return counts[emotion_id(e)]; }
  double proportion(Emotion e) const { return proportions[emotion_id(e)]; }
};

/// Counts and proportions of user-turn emotions. All-zero for an empty corpus.
LabelStats label_stats(const DialogueCorpus& corpus);
LabelStats label_stats(const std::vector<Dialogue>& dialogues);

}  // namespace emotod
