#include "emotod/refinement.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "emotod/text.hpp"

namespace emotod {

using nlohmann::json;

namespace {

#include "emotod/default_exemplars.inc"

constexpr std::string_view kSeparator = "------------";
constexpr std::string_view kAddBefore = "Add before the original response:";

}  // namespace

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
  const std::u32string s = text::decode_utf8(a);
  const std::u32string t = text::decode_utf8(b);
  if (s.empty()) return t.size();
  if (t.empty()) return s.size();
  std::vector<std::size_t> prev(t.size() + 1);
  std::vector<std::size_t> cur(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[t.size()];
}

double levenshtein_ratio(std::string_view a, std::string_view b) {
  const std::size_t la = text::decode_utf8(a).size();
  const std::size_t lb = text::decode_utf8(b).size();
  const std::size_t longest = std::max(la, lb);
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein_distance(a, b)) / static_cast<double>(longest);
}

ExemplarSet parse_exemplars(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("exemplar fixture: ") + e.what());
  }
  ExemplarSet set;
  try {
    set.instruction = doc.at("instruction").get<std::string>();
    for (const auto& rec : doc.at("exemplars")) {
      Exemplar ex;
      auto e = emotion_from_id(rec.at("emotion_id").get<int>());
      if (!e || *e == Emotion::neutral) {
        throw SchemaError("exemplar fixture: emotion_id must name a non-neutral emotion");
      }
      ex.emotion = *e;
      std::vector<Utterance> history;
      for (const auto& u : rec.at("context")) {
        const std::string who = u.at(0).get<std::string>();
        history.push_back({who == "user" ? Speaker::user : Speaker::system,
                           u.at(1).get<std::string>()});
      }
      ex.context = render_refine_context(history);
      ex.emotion_full_name = std::string(full_name(ex.emotion));
      ex.original_response = rec.at("original_response").get<std::string>();
      ex.thought = rec.at("thought").get<std::string>();
      ex.snippet = rec.at("snippet").get<std::string>();
      set.exemplars.push_back(std::move(ex));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("exemplar fixture: ") + e.what());
  }
  std::sort(set.exemplars.begin(), set.exemplars.end(),
            [](const Exemplar& a, const Exemplar& b) { return a.emotion < b.emotion; });
  bool complete = set.exemplars.size() == kNonNeutralEmotions.size();
  for (std::size_t i = 0; complete && i < set.exemplars.size(); ++i) {
    complete = set.exemplars[i].emotion == kNonNeutralEmotions[i];
  }
  if (!complete) throw SchemaError("exemplar fixture: need exactly one exemplar per non-neutral emotion");
  return set;
}

ExemplarSet load_exemplars(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open exemplar fixture " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_exemplars(buf.str());
}

const ExemplarSet& default_exemplars() {
  static const ExemplarSet set = parse_exemplars(kDefaultExemplarsJson);
  return set;
}

std::string render_refine_context(const std::vector<Utterance>& history) {
  std::string out;
  for (const auto& u : history) {
    if (!out.empty()) out.push_back('\n');
    out.append(u.speaker == Speaker::user ? "<|user|> " : "<|system|> ");
    out.append(u.text);
  }
  return out;
}

std::string build_refine_prompt(std::string_view context, Emotion emotion,
                                std::string_view response_delex, const ExemplarSet& exemplars) {
  if (emotion == Emotion::neutral) throw NeutralEmotion();
  std::ostringstream p;
  p << "Instruction:\n" << exemplars.instruction << "\n" << kSeparator << "\n";
  for (const auto& ex : exemplars.exemplars) {
    p << "Context:\n"
      << ex.context << "\n\n"
      << "User is feeling:\n"
      << ex.emotion_full_name << "\n\n"
      << "Original Response:\n"
      << "<|system|> " << ex.original_response << "\n\n"
      << "Thought:\n"
      << ex.thought << "\n\n"
      << kAddBefore << "\n"
      << ex.snippet << "\n"
      << kSeparator << "\n";
  }
  p << "Context:\n"
    << context << "\n\n"
    << "User is feeling:\n"
    << full_name(emotion) << "\n\n"
    << "Original Response:\n"
    << "<|system|> " << response_delex << "\n\n"
    << kAddBefore;
  return p.str();
}

std::string_view filter_reason_name(FilterReason reason) {
  switch (reason) {
    case FilterReason::none:
      return "none";
    case FilterReason::neutral_emotion:
      return "neutral_emotion";
    case FilterReason::too_similar:
      return "too_similar";
    case FilterReason::empty_snippet:
      return "empty_snippet";
    case FilterReason::backend_error:
      return "backend_error";
  }
  return "none";
}

FilterReason filter_reason_from_name(std::string_view name) {
  for (FilterReason r : {FilterReason::none, FilterReason::neutral_emotion, FilterReason::too_similar,
                         FilterReason::empty_snippet, FilterReason::backend_error}) {
    if (filter_reason_name(r) == name) return r;
  }
  throw SchemaError("unknown filter reason: " + std::string(name));
}

std::string clean_snippet(std::string_view raw) {
  std::string_view s = text::trim(raw);
  s = s.substr(0, s.find('\n'));
  s = text::trim(s);
  static const std::vector<std::string_view> kQuotes = {"\"", "'", "\xE2\x80\x9C", "\xE2\x80\x9D",
                                                         "\xE2\x80\x98", "\xE2\x80\x99"};
  bool stripped = true;
  while (stripped && !s.empty()) {
    stripped = false;
    for (auto q : kQuotes) {
      if (s.size() >= q.size() && s.substr(0, q.size()) == q) {
        s.remove_prefix(q.size());
        stripped = true;
      }
      if (s.size() >= q.size() && s.substr(s.size() - q.size()) == q) {
        s.remove_suffix(q.size());
        stripped = true;
      }
    }
    s = text::trim(s);
  }
  return std::string(s);
}

namespace {

RefinedPrediction pass_through(const TurnPrediction& p, FilterReason reason) {
  RefinedPrediction r;
  r.base = p;
  r.response_refined = p.parsed.response_delex;
  r.response_refined_lex = p.response_lex;
  r.filtered_reason = reason;
  return r;
}

std::string prepend(const std::string& snippet, const std::string& response) {
  return response.empty() ? snippet : snippet + " " + response;
}

}  // namespace

RefinedPrediction refine_turn(GenerationBackend& backend, const TurnPrediction& prediction,
                              const ExemplarSet& exemplars, const GenParams& params) {
  if (prediction.parsed.emotion == Emotion::neutral) {
    return pass_through(prediction, FilterReason::neutral_emotion);
  }
  const std::string prompt =
      build_refine_prompt(render_refine_context(prediction.context), prediction.parsed.emotion,
                          prediction.parsed.response_delex, exemplars);
  std::string raw;
  try {
    raw = generate(backend, prompt, params);
  } catch (const std::exception& e) {
    RefinedPrediction r = pass_through(prediction, FilterReason::backend_error);
    r.diagnostic = e.what();
    return r;
  }

  const std::string snippet = clean_snippet(raw);
  if (snippet.empty()) {
    RefinedPrediction r = pass_through(prediction, FilterReason::empty_snippet);
    r.snippet = snippet;
    return r;
  }
  const double similarity = levenshtein_ratio(snippet, prediction.parsed.response_delex);
  if (similarity >= kSnippetSimilarityThreshold) {
    RefinedPrediction r = pass_through(prediction, FilterReason::too_similar);
    r.snippet = snippet;
    r.similarity = similarity;
    return r;
  }
  RefinedPrediction r;
  r.base = prediction;
  r.snippet = snippet;
  r.similarity = similarity;
  r.response_refined = prepend(snippet, prediction.parsed.response_delex);
  r.response_refined_lex = prepend(snippet, prediction.response_lex);
  r.filtered_reason = FilterReason::none;
  return r;
}

std::vector<RefinedPrediction> refine_all(GenerationBackend& backend,
                                          const std::vector<TurnPrediction>& predictions,
                                          const ExemplarSet& exemplars, const GenParams& params,
                                          std::size_t parallelism) {
  std::vector<RefinedPrediction> out(predictions.size());
  std::size_t workers = std::max<std::size_t>(1, parallelism);
  if (auto cap = backend.max_concurrency()) workers = std::min(workers, std::max<std::size_t>(1, *cap));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < predictions.size(); i = next++) {
      out[i] = refine_turn(backend, predictions[i], exemplars, params);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

std::string refined_to_json(const RefinedPrediction& r) {
  json rec = json::parse(prediction_to_json(r.base));
  rec["snippet"] = r.snippet ? json(*r.snippet) : json(nullptr);
  rec["filtered_reason"] = filter_reason_name(r.filtered_reason);
  rec["response_refined"] = r.response_refined;
  rec["response_refined_lex"] = r.response_refined_lex;
  rec["similarity"] = r.similarity ? json(*r.similarity) : json(nullptr);
  if (!r.diagnostic.empty()) rec["refine_diagnostic"] = r.diagnostic;
  return rec.dump();
}

RefinedPrediction refined_from_json(std::string_view line) {
  RefinedPrediction r;
  r.base = prediction_from_json(line);
  const json rec = json::parse(line);
  try {
    if (rec.contains("snippet") && rec["snippet"].is_string()) {
      r.snippet = rec["snippet"].get<std::string>();
    }
    r.filtered_reason = filter_reason_from_name(rec.at("filtered_reason").get<std::string>());
    r.response_refined = rec.at("response_refined").get<std::string>();
    r.response_refined_lex = rec.value("response_refined_lex", "");
    if (rec.contains("similarity") && rec["similarity"].is_number()) {
      r.similarity = rec["similarity"].get<double>();
    }
    r.diagnostic = rec.value("refine_diagnostic", "");
  } catch (const json::exception& e) {
    throw SchemaError(std::string("refined prediction record: ") + e.what());
  }
  return r;
}

}  // namespace emotod
