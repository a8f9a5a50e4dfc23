#include "emotod/human_eval.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "emotod/refinement.hpp"
#include "emotod/text.hpp"

namespace emotod {

using nlohmann::json;

std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("bounded_uniform needs a positive bound");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % bound;
  }
}

SystemPredictions read_system_predictions(const std::string& name,
                                          const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open predictions " + path.string());
  SystemPredictions out;
  out.name = name;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded()) throw SchemaError(path.string() + ": malformed record");
    std::string response;
    std::pair<std::string, std::size_t> key;
    if (rec.contains("response_refined")) {
      const RefinedPrediction r = refined_from_json(line);
      key = {r.base.dialogue_id, r.base.turn_index};
      response = r.response_refined;
    } else {
      const TurnPrediction p = prediction_from_json(line);
      key = {p.dialogue_id, p.turn_index};
      response = p.parsed.response_delex;
    }
    if (!out.responses.emplace(key, std::move(response)).second) {
      throw SchemaError(path.string() + ": duplicate turn " + key.first + "#" +
                        std::to_string(key.second));
    }
  }
  return out;
}

EvalSample sample_human_eval(const DialogueCorpus& corpus,
                             const std::vector<SystemPredictions>& systems, std::size_t n_total,
                             std::uint64_t seed) {
  if (systems.size() != 3) throw InvalidArgument("human evaluation compares exactly 3 systems");
  for (std::size_t s = 1; s < systems.size(); ++s) {
    const auto& a = systems[0].responses;
    const auto& b = systems[s].responses;
    const bool same = a.size() == b.size() &&
                      std::equal(a.begin(), a.end(), b.begin(),
                                 [](const auto& x, const auto& y) { return x.first == y.first; });
    if (!same) {
      throw InvalidArgument("systems " + systems[0].name + " and " + systems[s].name +
                            " cover different turns");
    }
  }

  std::map<Emotion, std::vector<std::pair<std::string, std::size_t>>> candidates;
  for (const auto& [key, response] : systems[0].responses) {
    const Dialogue* d = corpus.find(key.first);
    if (!d || key.second >= d->turns.size()) {
      throw SchemaError("prediction for unknown turn " + key.first + "#" + std::to_string(key.second));
    }
    const Emotion gold = d->turns[key.second].user_emotion;
    if (gold != Emotion::neutral) candidates[gold].push_back(key);
  }

  EvalSample sample;
  sample.manifest.seed = seed;
  sample.manifest.n_total = n_total;
  for (const auto& s : systems) sample.manifest.systems.push_back(s.name);

  const std::size_t k = kNonNeutralEmotions.size();
  auto& quotas = sample.manifest.quotas;
  for (std::size_t i = 0; i < k; ++i) {
    CategoryQuota q;
    q.category = kNonNeutralEmotions[i];
    q.available = candidates[q.category].size();
    if (q.available == 0) throw InsufficientExamples(q.category);
    q.planned = n_total / k + (i < n_total % k ? 1 : 0);
    q.drawn = std::min(q.planned, q.available);
    quotas.push_back(q);
  }
  std::size_t deficit = 0;
  for (const auto& q : quotas) deficit += q.planned - q.drawn;
  while (deficit > 0) {
    bool moved = false;
    for (auto& q : quotas) {
      if (deficit > 0 && q.drawn < q.available) {
        ++q.drawn;
        --deficit;
        moved = true;
      }
    }
    if (!moved) {
      throw InsufficientExamples("only " + std::to_string(n_total - deficit) +
                                     " non-neutral candidates for a sample of " +
                                     std::to_string(n_total),
                                 quotas.back().category);
    }
  }

  std::vector<std::pair<std::string, std::size_t>> chosen;
  for (const auto& q : quotas) {
    auto pool = candidates[q.category];
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(emotion_id(q.category))));
    portable_shuffle(pool, rng);
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(q.drawn));
  }
  std::mt19937_64 order_rng(seed);
  portable_shuffle(chosen, order_rng);

  for (const auto& key : chosen) {
    const Dialogue& d = *corpus.find(key.first);
    EvalExample ex;
    ex.dialogue_id = key.first;
    ex.turn_index = key.second;
    ex.example_id = key.first + "#" + std::to_string(key.second);
    ex.context = gold_history(d, key.second);
    ex.gold_emotion = d.turns[key.second].user_emotion;
    ex.shuffle_seed = text::fnv1a64(ex.example_id, seed);
    for (const auto& s : systems) ex.responses.push_back({s.name, s.responses.at(key)});
    std::mt19937_64 rng(ex.shuffle_seed);
    portable_shuffle(ex.responses, rng);
    sample.manifest.example_ids.push_back(ex.example_id);
    sample.examples.push_back(std::move(ex));
  }
  return sample;
}

namespace {

json utterances_json(const std::vector<Utterance>& context) {
  json out = json::array();
  for (const auto& u : context) {
    out.push_back({{"speaker", u.speaker == Speaker::user ? "user" : "system"}, {"text", u.text}});
  }
  return out;
}

json emotion_json(Emotion e) {
  return {{"id", emotion_id(e)}, {"name", canonical_name(e)}, {"full_name", full_name(e)}};
}

}  // namespace

std::string eval_examples_to_json(const std::vector<EvalExample>& examples) {
  json out = json::array();
  for (const auto& ex : examples) {
    json responses = json::array();
    for (const auto& r : ex.responses) responses.push_back({{"system", r.system}, {"text", r.text}});
    out.push_back({{"example_id", ex.example_id},
                   {"dialogue_id", ex.dialogue_id},
                   {"turn_index", ex.turn_index},
                   {"context", utterances_json(ex.context)},
                   {"gold_emotion_id", emotion_id(ex.gold_emotion)},
                   {"responses", responses},
                   {"shuffle_seed", ex.shuffle_seed}});
  }
  return out.dump(2);
}

std::vector<EvalExample> eval_examples_from_json(const std::string& json_text) {
  std::vector<EvalExample> out;
  try {
    const json doc = json::parse(json_text);
    for (const auto& rec : doc) {
      EvalExample ex;
      ex.example_id = rec.at("example_id").get<std::string>();
      ex.dialogue_id = rec.at("dialogue_id").get<std::string>();
      ex.turn_index = rec.at("turn_index").get<std::size_t>();
      for (const auto& u : rec.at("context")) {
        ex.context.push_back({u.at("speaker").get<std::string>() == "user" ? Speaker::user : Speaker::system,
                              u.at("text").get<std::string>()});
      }
      auto e = emotion_from_id(rec.at("gold_emotion_id").get<int>());
      if (!e || *e == Emotion::neutral) throw SchemaError("example " + ex.example_id + ": bad gold emotion");
      ex.gold_emotion = *e;
      for (const auto& r : rec.at("responses")) {
        ex.responses.push_back({r.at("system").get<std::string>(), r.at("text").get<std::string>()});
      }
      if (ex.responses.size() != 3) throw SchemaError("example " + ex.example_id + ": need 3 responses");
      ex.shuffle_seed = rec.at("shuffle_seed").get<std::uint64_t>();
      out.push_back(std::move(ex));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("evaluation examples: ") + e.what());
  }
  return out;
}

std::string sample_manifest_to_json(const SampleManifest& m) {
  json quotas = json::array();
  json shortfalls = json::array();
  for (const auto& q : m.quotas) {
    quotas.push_back({{"category", canonical_name(q.category)},
                      {"available", q.available},
                      {"planned", q.planned},
                      {"drawn", q.drawn}});
    if (q.available < q.planned) {
      shortfalls.push_back({{"category", canonical_name(q.category)},
                            {"available", q.available},
                            {"planned", q.planned}});
    }
  }
  return json{{"seed", m.seed},
              {"n_total", m.n_total},
              {"systems", m.systems},
              {"quotas", quotas},
              {"shortfalls", shortfalls},
              {"example_ids", m.example_ids}}
      .dump(2);
}

std::string rater_view_json(const EvalExample& ex) {
  json responses = json::array();
  for (std::size_t i = 0; i < ex.responses.size(); ++i) {
    responses.push_back({{"index", i}, {"text", ex.responses[i].text}});
  }
  return json{{"example_id", ex.example_id},
              {"context", utterances_json(ex.context)},
              {"gold_emotion", emotion_json(ex.gold_emotion)},
              {"responses", responses}}
      .dump();
}

std::string ranking_to_json(const RankingRecord& r) {
  return json{{"example_id", r.example_id}, {"rater_id", r.rater_id}, {"ranks", r.ranks}}.dump();
}

RankingRecord ranking_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    RankingRecord r;
    r.example_id = j.at("example_id").get<std::string>();
    r.rater_id = j.at("rater_id").get<std::string>();
    r.ranks = j.at("ranks").get<std::map<std::string, int>>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("ranking record: ") + e.what());
  }
}

AnnotationStore::AnnotationStore(std::filesystem::path path) : path_(std::move(path)) {
  auto records = std::make_shared<std::vector<RankingRecord>>();
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (text::trim(lines[i]).empty()) continue;
      RankingRecord r;
      try {
        r = ranking_from_json(lines[i]);
      } catch (const SchemaError&) {
        // a torn final line from an interrupted write was never acknowledged
        if (i + 1 == lines.size()) break;
        throw SchemaError(path_.string() + ": corrupt ranking at line " + std::to_string(i + 1));
      }
      if (!seen.insert({r.example_id, r.rater_id}).second) {
        throw SchemaError(path_.string() + ": duplicate ranking at line " + std::to_string(i + 1));
      }
      records->push_back(std::move(r));
    }
  } else if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  records_ = std::move(records);
}

std::shared_ptr<const std::vector<RankingRecord>> AnnotationStore::snapshot() const {
  std::lock_guard<std::mutex> lock(snap_mu_);
  return records_;
}

bool AnnotationStore::contains(const std::string& example_id, const std::string& rater_id) const {
  const auto snap = snapshot();
  return std::any_of(snap->begin(), snap->end(), [&](const RankingRecord& r) {
    return r.example_id == example_id && r.rater_id == rater_id;
  });
}

AddResult AnnotationStore::add(const RankingRecord& record) {
  std::lock_guard<std::mutex> lock(write_mu_);
  if (contains(record.example_id, record.rater_id)) return AddResult::duplicate;
  {
    std::ofstream out(path_, std::ios::app);
    out << ranking_to_json(record) << '\n';
    out.flush();
    if (!out) throw Error("cannot append to " + path_.string());
  }
  auto next = std::make_shared<std::vector<RankingRecord>>(*snapshot());
  next->push_back(record);
  std::lock_guard<std::mutex> snap_lock(snap_mu_);
  records_ = std::move(next);
  return AddResult::accepted;
}

}  // namespace emotod
