#include "emotod/generation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "emotod/text.hpp"

namespace emotod {

using nlohmann::json;

GenParams GenParams::pipeline() {
  GenParams p;
  p.mode = DecodeMode::greedy;
  p.no_repeat_ngram = 10;
  p.max_new_tokens = 256;
  p.stop_sequences = {std::string(tokens::kEndOfResponse)};
  return p;
}

GenParams GenParams::refinement() {
  GenParams p;
  p.mode = DecodeMode::sample;
  p.temperature = 0.9;
  p.max_new_tokens = 64;
  return p;
}

std::string truncate_at_stop(std::string_view raw, const std::vector<std::string>& stops) {
  std::size_t cut = std::string_view::npos;
  for (const auto& stop : stops) {
    if (stop.empty()) continue;
    const std::size_t pos = raw.find(stop);
    if (pos != std::string_view::npos) cut = std::min(cut, pos + stop.size());
  }
  return std::string(cut == std::string_view::npos ? raw : raw.substr(0, cut));
}

std::string generate(GenerationBackend& backend, std::string_view prompt, const GenParams& params) {
  if (prompt.empty()) throw InvalidArgument("generation prompt must be non-empty");
  std::string raw = backend.complete(prompt, params);
  std::string_view continuation = raw;
  if (continuation.substr(0, prompt.size()) == prompt) continuation.remove_prefix(prompt.size());
  return truncate_at_stop(continuation, params.stop_sequences);
}

std::string prompt_key(std::string_view prompt) { return text::hex64(text::fnv1a64(prompt)); }

// ---------------------------------------------------------------------------
// Mock backends

ReplayBackend::ReplayBackend(std::map<std::string, std::string> table, std::string name)
    : table_(std::move(table)), name_(std::move(name)) {}

void ReplayBackend::add(std::string_view prompt, std::string continuation) {
  auto [it, fresh] = table_.try_emplace(prompt_key(prompt), continuation);
  if (!fresh && it->second != continuation) {
    ++conflicts_;
    it->second = std::move(continuation);
  }
}

ReplayBackend ReplayBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open replay table " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw SchemaError(path.string() + ": expected {key: continuation}");
  std::map<std::string, std::string> table;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) throw SchemaError(path.string() + ": continuations must be strings");
    table.emplace(key, value.get<std::string>());
  }
  return ReplayBackend(std::move(table), "replay:" + path.filename().string());
}

void ReplayBackend::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path.string());
  out << json(table_).dump(1) << "\n";
}

std::string ReplayBackend::complete(std::string_view prompt, const GenParams&) {
  ++calls_;
  auto it = table_.find(prompt_key(prompt));
  if (it == table_.end()) {
    throw BackendRejected("replay table has no entry for prompt " + prompt_key(prompt));
  }
  return it->second;
}

ReplayBackend make_gold_replay(const DialogueCorpus& corpus, Variant variant) {
  ReplayBackend backend({}, std::string("gold-replay:") + std::string(variant_name(variant)));
  for (const auto& d : corpus.dialogues()) {
    std::vector<Emotion> prior;
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const std::string prompt = build_inference_prompt(gold_history(d, t), prior, variant);
      const SerializedSequence seq = build_training_sequence(d, t, variant);
      backend.add(prompt, seq.text.substr(prompt.size()));
      prior.push_back(d.turns[t].user_emotion);
    }
  }
  return backend;
}

ScriptedBackend::ScriptedBackend(Script script, std::string name,
                                 std::optional<std::size_t> max_concurrency)
    : script_(std::move(script)), name_(std::move(name)), max_concurrency_(max_concurrency) {}

std::string ScriptedBackend::complete(std::string_view prompt, const GenParams& params) {
  ++calls_;
  {
    std::lock_guard<std::mutex> lock(mu_);
    prompts_.emplace_back(prompt);
  }
  return script_(prompt, params);
}

std::vector<std::string> ScriptedBackend::prompts() const {
  std::lock_guard<std::mutex> lock(mu_);
  return prompts_;
}

// ---------------------------------------------------------------------------
// Inference loops

std::string_view context_mode_name(ContextMode mode) {
  return mode == ContextMode::gold ? "gold" : "predicted";
}

ContextMode context_mode_from_name(std::string_view name) {
  if (name == "gold") return ContextMode::gold;
  if (name == "predicted") return ContextMode::predicted;
  throw InvalidArgument("unknown context mode: " + std::string(name));
}

std::optional<std::string> active_domain(const ParsedTurn& parsed, const KnowledgeBase& kb) {
  for (const auto& act : parsed.acts) {
    if (kb.has_domain(act.domain)) return act.domain;
  }
  for (const auto& domain : parsed.belief.domains()) {
    if (kb.has_domain(domain)) return domain;
  }
  return std::nullopt;
}

namespace {

std::string generate_with_retries(GenerationBackend& backend, const std::string& prompt,
                                  const RunConfig& config) {
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      return generate(backend, prompt, config.gen);
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= config.max_retries) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(100 << std::min<std::size_t>(attempt, 5)));
    }
  }
}

}  // namespace

std::vector<TurnPrediction> run_dialogue(GenerationBackend& backend, const Dialogue& dialogue,
                                         const KnowledgeBase& kb, const RunConfig& config) {
  std::vector<TurnPrediction> out;
  out.reserve(dialogue.turns.size());
  std::vector<Utterance> history;
  std::vector<Emotion> predicted_emotions;

  for (const Turn& turn : dialogue.turns) {
    history.push_back({Speaker::user, turn.user_utterance});
    TurnPrediction pred;
    pred.dialogue_id = dialogue.id;
    pred.turn_index = turn.index;
    pred.variant = config.variant;
    pred.seed_tag = config.seed_tag;
    pred.context = history;
    if (config.variant == Variant::prev) pred.prior_emotions = predicted_emotions;
    try {
      pred.prompt = build_inference_prompt(history, predicted_emotions, config.variant);
      pred.raw_generation = generate_with_retries(backend, pred.prompt, config);
    } catch (const std::exception& e) {
      throw DialogueRunError(dialogue.id, turn.index, e.what());
    }
    pred.parsed = parse_generation(pred.raw_generation, config.variant);

    std::map<std::string, std::string> extras{
        {"ref", booking_reference(dialogue.id, turn.index)}};
    std::optional<Entity> entity;
    if (auto domain = active_domain(pred.parsed, kb)) {
      auto results = query(kb, pred.parsed.belief, *domain);
      extras["choice"] = std::to_string(results.size());
      if (!results.empty()) entity = std::move(results.front());
    }
    pred.response_lex =
        lexicalize(pred.parsed.response_delex, entity ? &*entity : nullptr, pred.parsed.belief,
                   extras)
            .text;

    history.push_back({Speaker::system, config.context_mode == ContextMode::gold
                                            ? turn.system_response_lex
                                            : pred.response_lex});
    predicted_emotions.push_back(pred.parsed.emotion);
    out.push_back(std::move(pred));
  }
  return out;
}

PredictionSet run_corpus(GenerationBackend& backend, const DialogueCorpus& corpus,
                         const KnowledgeBase& kb, const RunConfig& config) {
  PredictionSet set;
  set.config = config;
  set.backend_identity = backend.identity();
  set.corpus_checksum = corpus.checksum();
  if (config.gen.no_repeat_ngram && !backend.supports(Capability::no_repeat_ngram)) {
    set.warnings.push_back("backend " + backend.identity() +
                           " does not support no_repeat_ngram; constraint not applied");
  }

  const auto& dialogues = corpus.dialogues();
  std::vector<std::vector<TurnPrediction>> results(dialogues.size());
  std::vector<std::optional<DialogueFailure>> failures(dialogues.size());

  std::size_t workers = std::max<std::size_t>(1, config.parallelism);
  if (auto cap = backend.max_concurrency()) workers = std::min(workers, std::max<std::size_t>(1, *cap));
  workers = std::min(workers, std::max<std::size_t>(1, dialogues.size()));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < dialogues.size(); i = next++) {
      try {
        results[i] = run_dialogue(backend, dialogues[i], kb, config);
      } catch (const DialogueRunError& e) {
        failures[i] = DialogueFailure{e.dialogue_id(), e.turn(), e.what()};
      } catch (const std::exception& e) {
        failures[i] = DialogueFailure{dialogues[i].id, 0, e.what()};
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    if (failures[i]) {
      set.failures.push_back(*failures[i]);
      continue;
    }
    for (auto& p : results[i]) set.turns.push_back(std::move(p));
  }
  if (!dialogues.empty() && !set.failures.empty()) {
    const double rate =
        static_cast<double>(set.failures.size()) / static_cast<double>(dialogues.size());
    if (rate > config.max_failure_rate) {
      throw RunFailed(std::to_string(set.failures.size()) + " of " +
                      std::to_string(dialogues.size()) + " dialogues failed; first: " +
                      set.failures.front().message);
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json belief_json(const BeliefState& b) {
  json out = json::array();
  for (const auto& e : b.entries()) out.push_back({e.domain, e.slot, e.value});
  return out;
}

json acts_json(const DialogueActSet& acts) {
  json out = json::array();
  for (const auto& a : acts) out.push_back({a.domain, a.act, a.slot});
  return out;
}

std::optional<SegmentTag> segment_from_name(std::string_view n) {
  for (SegmentTag t : {SegmentTag::context, SegmentTag::belief, SegmentTag::emotion,
                       SegmentTag::action, SegmentTag::response}) {
    if (segment_name(t) == n) return t;
  }
  return std::nullopt;
}

std::optional<ParseIssueKind> issue_kind_from_name(std::string_view n) {
  for (ParseIssueKind k : {ParseIssueKind::missing_segment, ParseIssueKind::malformed_entry,
                           ParseIssueKind::unknown_emotion, ParseIssueKind::truncated_output}) {
    if (issue_kind_name(k) == n) return k;
  }
  return std::nullopt;
}

json gen_params_json(const GenParams& g) {
  json j = {{"mode", g.mode == DecodeMode::greedy ? "greedy" : "sample"},
            {"temperature", g.temperature},
            {"max_new_tokens", g.max_new_tokens},
            {"stop_sequences", g.stop_sequences}};
  j["no_repeat_ngram"] = g.no_repeat_ngram ? json(*g.no_repeat_ngram) : json(nullptr);
  return j;
}

}  // namespace

std::string prediction_to_json(const TurnPrediction& p) {
  json diagnostics = json::array();
  for (const auto& d : p.parsed.diagnostics) {
    diagnostics.push_back({{"kind", issue_kind_name(d.kind)},
                           {"segment", segment_name(d.segment)},
                           {"detail", d.detail}});
  }
  json context = json::array();
  for (const auto& u : p.context) {
    context.push_back({u.speaker == Speaker::user ? "user" : "system", u.text});
  }
  json prior = json::array();
  for (Emotion e : p.prior_emotions) prior.push_back(emotion_id(e));
  json rec = {{"dialogue_id", p.dialogue_id},
              {"turn_index", p.turn_index},
              {"raw", p.raw_generation},
              {"belief", belief_json(p.parsed.belief)},
              {"emotion_id", emotion_id(p.parsed.emotion)},
              {"acts", acts_json(p.parsed.acts)},
              {"response_delex", p.parsed.response_delex},
              {"response_lex", p.response_lex},
              {"diagnostics", diagnostics},
              {"variant", variant_name(p.variant)},
              {"seed_tag", p.seed_tag},
              {"context", context},
              {"prior_emotion_ids", prior}};
  return rec.dump();
}

TurnPrediction prediction_from_json(std::string_view line) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("prediction record: ") + e.what());
  }
  try {
    TurnPrediction p;
    p.dialogue_id = rec.at("dialogue_id").get<std::string>();
    p.turn_index = rec.at("turn_index").get<std::size_t>();
    p.raw_generation = rec.value("raw", "");
    for (const auto& e : rec.at("belief")) {
      p.parsed.belief.insert(e.at(0).get<std::string>(), e.at(1).get<std::string>(),
                             e.at(2).get<std::string>());
    }
    auto emo = emotion_from_id(rec.at("emotion_id").get<int>());
    if (!emo) throw SchemaError("prediction record: emotion_id out of range");
    p.parsed.emotion = *emo;
    for (const auto& a : rec.at("acts")) {
      p.parsed.acts.insert(
          {a.at(0).get<std::string>(), a.at(1).get<std::string>(), a.at(2).get<std::string>()});
    }
    p.parsed.response_delex = rec.at("response_delex").get<std::string>();
    p.response_lex = rec.value("response_lex", "");
    for (const auto& d : rec.value("diagnostics", json::array())) {
      auto kind = issue_kind_from_name(d.at("kind").get<std::string>());
      auto seg = segment_from_name(d.at("segment").get<std::string>());
      if (!kind || !seg) throw SchemaError("prediction record: unknown diagnostic");
      p.parsed.diagnostics.push_back({*kind, *seg, d.value("detail", "")});
    }
    p.variant = variant_from_name(rec.at("variant").get<std::string>());
    p.seed_tag = rec.value("seed_tag", "");
    for (const auto& u : rec.value("context", json::array())) {
      p.context.push_back({u.at(0).get<std::string>() == "user" ? Speaker::user : Speaker::system,
                           u.at(1).get<std::string>()});
    }
    for (const auto& id : rec.value("prior_emotion_ids", json::array())) {
      auto e = emotion_from_id(id.get<int>());
      if (!e) throw SchemaError("prediction record: prior emotion out of range");
      p.prior_emotions.push_back(*e);
    }
    return p;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("prediction record: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("prediction record: ") + e.what());
  }
}

void write_predictions(const std::filesystem::path& path, const PredictionSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path.string());
  for (const auto& p : set.turns) out << prediction_to_json(p) << "\n";
}

std::vector<TurnPrediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open predictions " + path.string());
  std::vector<TurnPrediction> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    out.push_back(prediction_from_json(line));
  }
  return out;
}

std::string run_manifest_json(const PredictionSet& set) {
  json failures = json::array();
  for (const auto& f : set.failures) {
    failures.push_back(
        {{"dialogue_id", f.dialogue_id}, {"turn_index", f.turn_index}, {"message", f.message}});
  }
  const RunConfig& c = set.config;
  json manifest = {
      {"config",
       {{"variant", variant_name(c.variant)},
        {"context_mode", context_mode_name(c.context_mode)},
        {"gen", gen_params_json(c.gen)},
        {"parallelism", c.parallelism},
        {"seed_tag", c.seed_tag},
        {"max_retries", c.max_retries},
        {"max_failure_rate", c.max_failure_rate}}},
      {"corpus_checksum", set.corpus_checksum},
      {"backend", set.backend_identity},
      {"turns", set.turns.size()},
      {"warnings", set.warnings},
      {"failures", failures}};
  return manifest.dump(2);
}

}  // namespace emotod
