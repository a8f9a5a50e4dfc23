#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "emotod/corpus.hpp"
#include "emotod/errors.hpp"
#include "emotod/metrics.hpp"

namespace emotod {

class InsufficientExamples : public Error {
 public:
  explicit InsufficientExamples(Emotion category)
      : Error("no candidates for category " + std::string(canonical_name(category))),
        category_(category) {}
  InsufficientExamples(const std::string& message, Emotion category)
      : Error(message), category_(category) {}
  Emotion category() const { return category_; }

 private:
  Emotion category_;
};

struct EvalResponse {
  std::string system;  // never served to raters
  std::string text;
};

struct EvalExample {
  std::string example_id;  // "<dialogue_id>#<turn>"
  std::string dialogue_id;
  std::size_t turn_index = 0;
  std::vector<Utterance> context;
  Emotion gold_emotion = Emotion::neutral;
  std::vector<EvalResponse> responses;  // shuffled
  std::uint64_t shuffle_seed = 0;
};

/// Responses of one system keyed by (dialogue id, turn).
using SystemResponses = std::map<std::pair<std::string, std::size_t>, std::string>;

struct SystemPredictions {
  std::string name;
  SystemResponses responses;
};

/// Reads a prediction or refined-prediction file; refined files contribute
/// their refined response, plain files the delexicalized response.
SystemPredictions read_system_predictions(const std::string& name,
                                          const std::filesystem::path& path);

struct CategoryQuota {
  Emotion category = Emotion::neutral;
  std::size_t available = 0;
  std::size_t planned = 0;  // equal share before redistribution
  std::size_t drawn = 0;
};

struct SampleManifest {
  std::uint64_t seed = 0;
  std::size_t n_total = 0;
  std::vector<std::string> systems;
  std::vector<CategoryQuota> quotas;  // non-neutral categories by id
  std::vector<std::string> example_ids;
};

struct EvalSample {
  std::vector<EvalExample> examples;
  SampleManifest manifest;
};

/// Stratified draw over the six non-neutral gold categories. Equal shares,
/// remainder to the lowest ids; a category short of its share gives the
/// deficit to the others one at a time in id order. Requires exactly three
/// systems covering identical keys.
EvalSample sample_human_eval(const DialogueCorpus& corpus,
                             const std::vector<SystemPredictions>& systems, std::size_t n_total,
                             std::uint64_t seed);

/// Uniform integer in [0, bound) by rejection; identical on every platform.
std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t bound);

template <typename T>
void portable_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[bounded_uniform(rng, i)]);
  }
}

std::string eval_examples_to_json(const std::vector<EvalExample>& examples);
std::vector<EvalExample> eval_examples_from_json(const std::string& json_text);
std::string sample_manifest_to_json(const SampleManifest& manifest);

/// Payload served to raters: context, gold emotion and responses by index,
/// with no system names.
std::string rater_view_json(const EvalExample& example);

enum class AddResult { accepted, duplicate };

/// Append-only JSON-lines log of rankings, replayed on open. Writes are
/// serialized; readers take immutable snapshots.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path path);

  AddResult add(const RankingRecord& record);
  std::shared_ptr<const std::vector<RankingRecord>> snapshot() const;
  bool contains(const std::string& example_id, const std::string& rater_id) const;
  std::size_t size() const { return snapshot()->size(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex write_mu_;
  mutable std::mutex snap_mu_;
  std::shared_ptr<const std::vector<RankingRecord>> records_;
};

std::string ranking_to_json(const RankingRecord& record);
RankingRecord ranking_from_json(const std::string& line);

}  // namespace emotod
