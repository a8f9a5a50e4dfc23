#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emotod/corpus.hpp"
#include "emotod/errors.hpp"
#include "emotod/knowledge_base.hpp"
#include "emotod/output_parser.hpp"
#include "emotod/sequencer.hpp"

namespace emotod {

enum class DecodeMode { greedy, sample };

struct GenParams {
  DecodeMode mode = DecodeMode::greedy;
  double temperature = 1.0;  // ignored in greedy mode
  std::size_t max_new_tokens = 256;
  std::optional<std::size_t> no_repeat_ngram;
  std::vector<std::string> stop_sequences;

  /// Greedy with no 10-gram repetition, stopping after the response segment.
  static GenParams pipeline();
  /// Sampling at temperature 0.9 for snippet prompting.
  static GenParams refinement();
};

enum class Capability { no_repeat_ngram, stop_sequences, sampling };

class BackendError : public Error {
 public:
  BackendError(std::string message, bool retryable)
      : Error(std::move(message)), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

class BackendUnavailable : public BackendError {
 public:
  explicit BackendUnavailable(std::string message) : BackendError(std::move(message), true) {}
};

class BackendRejected : public BackendError {
 public:
  explicit BackendRejected(std::string message) : BackendError(std::move(message), false) {}
};

class BackendTimeout : public BackendError {
 public:
  explicit BackendTimeout(std::string message) : BackendError(std::move(message), true) {}
};

/// Text-generation capability. Implementations must tolerate concurrent
/// callers unless max_concurrency() says otherwise.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  /// Raw continuation for the prompt. May echo the prompt; generate() strips it.
  virtual std::string complete(std::string_view prompt, const GenParams& params) = 0;
  virtual bool supports(Capability capability) const = 0;
  virtual bool deterministic() const = 0;
  virtual std::string identity() const = 0;
  /// Upper bound on in-flight calls; nullopt means unbounded.
  virtual std::optional<std::size_t> max_concurrency() const { return std::nullopt; }
};

/// Continuation only, truncated after the earliest stop sequence (kept).
std::string generate(GenerationBackend& backend, std::string_view prompt, const GenParams& params);

/// Cut `raw` right after the earliest occurrence of any stop sequence.
std::string truncate_at_stop(std::string_view raw, const std::vector<std::string>& stops);

/// Stable replay key for a prompt.
std::string prompt_key(std::string_view prompt);

/// Deterministic table lookup keyed by prompt_key(prompt). Unknown prompts
/// are rejected.
class ReplayBackend : public GenerationBackend {
 public:
  ReplayBackend() = default;
  explicit ReplayBackend(std::map<std::string, std::string> table, std::string name = "replay");
  ReplayBackend(ReplayBackend&& other) noexcept
      : table_(std::move(other.table_)),
        name_(std::move(other.name_)),
        conflicts_(other.conflicts_),
        calls_(other.calls_.load()) {}

  /// A prompt added twice with a different continuation keeps the last one
  /// and counts as a conflict.
  void add(std::string_view prompt, std::string continuation);
  /// JSON object {prompt_key: continuation}.
  static ReplayBackend from_file(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::string complete(std::string_view prompt, const GenParams& params) override;
  bool supports(Capability) const override { return true; }
  bool deterministic() const override { return true; }
  std::string identity() const override { return name_; }

  std::size_t size() const { return table_.size(); }
  std::size_t calls() const { return calls_.load(); }
  std::size_t conflicts() const { return conflicts_; }

 private:
  std::map<std::string, std::string> table_;
  std::string name_ = "replay";
  std::size_t conflicts_ = 0;
  std::atomic<std::size_t> calls_{0};
};

/// Replay table that answers every gold-context prompt of the corpus with
/// the gold continuation (belief, emotion, acts, delexicalized response).
ReplayBackend make_gold_replay(const DialogueCorpus& corpus, Variant variant);

/// Wraps a callable; deterministic by declaration. Counts calls.
class ScriptedBackend : public GenerationBackend {
 public:
  using Script = std::function<std::string(std::string_view prompt, const GenParams& params)>;

  explicit ScriptedBackend(Script script, std::string name = "scripted",
                           std::optional<std::size_t> max_concurrency = std::nullopt);

  std::string complete(std::string_view prompt, const GenParams& params) override;
  bool supports(Capability) const override { return true; }
  bool deterministic() const override { return true; }
  std::string identity() const override { return name_; }
  std::optional<std::size_t> max_concurrency() const override { return max_concurrency_; }

  std::size_t calls() const { return calls_.load(); }
  std::vector<std::string> prompts() const;

 private:
  Script script_;
  std::string name_;
  std::optional<std::size_t> max_concurrency_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

struct WireBackendOptions {
  std::string base_url = "http://127.0.0.1:8000";  // scheme://host[:port]
  std::string path = "/v1/completions";
  std::string model = "default";
  std::chrono::seconds timeout{120};
  bool supports_no_repeat_ngram = false;
  std::optional<std::size_t> max_concurrency;
};

/// Completions-style HTTP client. Request body:
///   {"model", "prompt", "max_tokens", "temperature", "stop"[, "no_repeat_ngram_size"]}
/// Greedy decoding is sent as temperature 0. Reads choices[0].text.
class WireBackend : public GenerationBackend {
 public:
  explicit WireBackend(WireBackendOptions options);

  std::string complete(std::string_view prompt, const GenParams& params) override;
  bool supports(Capability capability) const override;
  bool deterministic() const override { return false; }
  std::string identity() const override;
  std::optional<std::size_t> max_concurrency() const override { return options_.max_concurrency; }

  /// Request body for the given prompt (exposed for inspection and tests).
  std::string request_body(std::string_view prompt, const GenParams& params) const;

 private:
  WireBackendOptions options_;
};

enum class ContextMode { gold, predicted };

std::string_view context_mode_name(ContextMode mode);
ContextMode context_mode_from_name(std::string_view name);

struct RunConfig {
  Variant variant = Variant::prev;
  ContextMode context_mode = ContextMode::gold;
  GenParams gen = GenParams::pipeline();
  std::size_t parallelism = 1;
  std::string seed_tag = "seed0";
  std::size_t max_retries = 2;             // for retryable backend errors
  double max_failure_rate = 0.0;           // fraction of dialogues allowed to fail
};

struct TurnPrediction {
  std::string dialogue_id;
  std::size_t turn_index = 0;
  ParsedTurn parsed;
  std::string response_lex;
  std::string raw_generation;
  Variant variant = Variant::emo;
  std::string seed_tag;
  std::vector<Utterance> context;  // history the prompt was built from
  std::vector<Emotion> prior_emotions;  // emotions threaded into a PREV prompt
  std::string prompt;
};

/// Entity-bearing domain the turn is about: first predicted act domain known
/// to the KB, else the first belief domain known to it.
std::optional<std::string> active_domain(const ParsedTurn& parsed, const KnowledgeBase& kb);

struct DialogueFailure {
  std::string dialogue_id;
  std::size_t turn_index = 0;
  std::string message;
};

struct PredictionSet {
  RunConfig config;
  std::string backend_identity;
  std::string corpus_checksum;
  std::vector<TurnPrediction> turns;  // corpus order, then turn order
  std::vector<DialogueFailure> failures;
  std::vector<std::string> warnings;
};

class DialogueRunError : public Error {
 public:
  DialogueRunError(std::string dialogue_id, std::size_t turn, const std::string& cause)
      : Error("dialogue " + dialogue_id + " turn " + std::to_string(turn) + ": " + cause),
        dialogue_id_(std::move(dialogue_id)),
        turn_(turn) {}
  const std::string& dialogue_id() const { return dialogue_id_; }
  std::size_t turn() const { return turn_; }

 private:
  std::string dialogue_id_;
  std::size_t turn_;
};

class RunFailed : public Error {
 public:
  using Error::Error;
};

/// Sequential per-turn inference over one dialogue. PREV prompts always carry
/// the emotions predicted for earlier turns.
std::vector<TurnPrediction> run_dialogue(GenerationBackend& backend, const Dialogue& dialogue,
                                         const KnowledgeBase& kb, const RunConfig& config);

/// Dialogues run with bounded parallelism; results are collected in corpus order.
PredictionSet run_corpus(GenerationBackend& backend, const DialogueCorpus& corpus,
                         const KnowledgeBase& kb, const RunConfig& config);

// Prediction files: one JSON record per turn.
std::string prediction_to_json(const TurnPrediction& prediction);
TurnPrediction prediction_from_json(std::string_view line);
void write_predictions(const std::filesystem::path& path, const PredictionSet& set);
std::vector<TurnPrediction> read_predictions(const std::filesystem::path& path);

/// Config echo, corpus checksum, backend identity, warnings and failures.
std::string run_manifest_json(const PredictionSet& set);

}  // namespace emotod
