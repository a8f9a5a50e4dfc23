#include "emotod/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "emotod/errors.hpp"
#include "emotod/text.hpp"

namespace emotod {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(const std::string& bytes, const std::string& what) {
  try {
    return json::parse(bytes);
  } catch (const json::exception& e) {
    throw SchemaError(what + ": " + e.what());
  }
}

std::string clean_utterance(const json& v, const std::string& where) {
  if (!v.is_string()) throw SchemaError(where + ": expected a string");
  std::string s = text::collapse_whitespace(v.get<std::string>());
  if (s.find("<|") != std::string::npos) {
    throw SchemaError(where + ": text contains a reserved '<|' marker");
  }
  return s;
}

std::string clean_token(const json& v, const Normalizer& norm, const std::string& where) {
  if (!v.is_string()) throw SchemaError(where + ": expected a string");
  std::string s = norm.key(v.get<std::string>());
  if (s.empty()) throw SchemaError(where + ": empty name");
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      throw SchemaError(where + ": '" + s + "' must be a single token");
    }
  }
  return s;
}

std::string clean_value(const json& v, const Normalizer& norm, const std::string& where) {
  std::string raw;
  if (v.is_string()) {
    raw = v.get<std::string>();
  } else if (v.is_number()) {
    raw = v.dump();
  } else {
    throw SchemaError(where + ": expected a string value");
  }
  std::string s = norm.value(raw);
  if (s.empty()) throw SchemaError(where + ": value is empty after normalization");
  if (s.find("<|") != std::string::npos) {
    throw SchemaError(where + ": value contains a reserved '<|' marker");
  }
  return s;
}

void check_placeholders(const std::string& delex, const Normalizer& norm,
                        const std::string& where) {
  std::size_t pos = 0;
  while ((pos = delex.find('[', pos)) != std::string::npos) {
    const std::size_t close = delex.find(']', pos);
    if (close == std::string::npos) break;
    const std::string name = delex.substr(pos + 1, close - pos - 1);
    const bool looks_like_slot =
        !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
          return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        });
    if (looks_like_slot && !norm.placeholders().count(name)) {
      throw SchemaError(where + ": undeclared placeholder [" + name + "]");
    }
    pos = close + 1;
  }
}

Emotion resolve_emotion(const json& v, const std::string& dialogue_id, std::size_t turn) {
  auto from_int = [&](const json& x) {
    if (!x.is_number_integer()) {
      throw SchemaError(dialogue_id + " turn " + std::to_string(turn) +
                        ": emotion_id must be an integer");
    }
    auto e = emotion_from_id(x.get<int>());
    if (!e) {
      throw SchemaError(dialogue_id + " turn " + std::to_string(turn) +
                        ": emotion_id out of range 0-6");
    }
    return *e;
  };
  if (v.is_null()) throw MissingAnnotation(dialogue_id, turn);
  if (!v.is_array()) return from_int(v);
  if (v.empty()) throw MissingAnnotation(dialogue_id, turn);
  std::array<int, kEmotionCount> votes{};
  for (const auto& x : v) ++votes[emotion_id(from_int(x))];
  // max_element returns the first maximum, i.e. the lower id on ties.
  return static_cast<Emotion>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

Goal parse_goal(const json& g, const Normalizer& norm, const std::string& where) {
  if (!g.is_object()) throw SchemaError(where + ": goal must be an object");
  Goal goal;
  for (const auto& [domain_raw, spec] : g.items()) {
    const std::string domain = clean_token(domain_raw, norm, where + " goal");
    if (!spec.is_object()) throw SchemaError(where + ": goal." + domain + " must be an object");
    DomainGoal dg;
    if (auto it = spec.find("constraints"); it != spec.end()) {
      if (!it->is_object()) throw SchemaError(where + ": goal constraints must be an object");
      for (const auto& [slot, value] : it->items()) {
        dg.constraints[clean_token(slot, norm, where + " goal")] =
            clean_value(value, norm, where + " goal." + domain + "." + slot);
      }
    }
    if (auto it = spec.find("requested"); it != spec.end()) {
      if (!it->is_array()) throw SchemaError(where + ": goal requested must be an array");
      for (const auto& slot : *it) dg.requested.insert(clean_token(slot, norm, where + " goal"));
    }
    if (auto it = spec.find("booking"); it != spec.end()) {
      if (!it->is_object()) throw SchemaError(where + ": goal booking must be an object");
      for (const auto& [slot, value] : it->items()) {
        dg.booking[clean_token(slot, norm, where + " goal")] =
            clean_value(value, norm, where + " goal." + domain + "." + slot);
      }
    }
    goal.emplace(domain, std::move(dg));
  }
  if (goal.empty()) throw SchemaError(where + ": goal names no domain");
  return goal;
}

const json& require(const json& obj, const char* field, const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw SchemaError(where + ": missing '" + field + "' (task annotations are required)");
  }
  return *it;
}

Dialogue parse_dialogue(const json& rec, const Normalizer& norm) {
  if (!rec.is_object()) throw SchemaError("dialogue record must be an object");
  const json& id = require(rec, "dialogue_id", "dialogue record");
  if (!id.is_string() || id.get<std::string>().empty()) {
    throw SchemaError("dialogue_id must be a non-empty string");
  }
  Dialogue d;
  d.id = id.get<std::string>();
  d.goal = parse_goal(require(rec, "goal", d.id), norm, d.id);

  const json& turns = require(rec, "turns", d.id);
  if (!turns.is_array()) throw SchemaError(d.id + ": turns must be an array");
  d.turns.reserve(turns.size());
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const json& t = turns[i];
    const std::string where = d.id + " turn " + std::to_string(i);
    if (!t.is_object()) throw SchemaError(where + ": turn must be an object");
    Turn turn;
    turn.index = i;
    turn.user_utterance = clean_utterance(require(t, "user", where), where + " user");
    auto emo = t.find("emotion_id");
    if (emo == t.end()) throw MissingAnnotation(d.id, i);
    turn.user_emotion = resolve_emotion(*emo, d.id, i);

    const json& belief = require(t, "belief", where);
    if (!belief.is_array()) throw SchemaError(where + ": belief must be an array");
    for (const auto& e : belief) {
      if (!e.is_array() || e.size() != 3) {
        throw SchemaError(where + ": belief entries are [domain, slot, value]");
      }
      std::string domain = clean_token(e[0], norm, where + " belief");
      std::string slot = clean_token(e[1], norm, where + " belief");
      std::string value = clean_value(e[2], norm, where + " belief");
      if (!turn.belief.insert(domain, slot, value)) {
        throw SchemaError(where + ": duplicate belief slot " + domain + " " + slot);
      }
    }

    const json& acts = require(t, "acts", where);
    if (!acts.is_array()) throw SchemaError(where + ": acts must be an array");
    for (const auto& a : acts) {
      if (!a.is_array() || a.size() != 3) {
        throw SchemaError(where + ": act entries are [domain, act, slot]");
      }
      turn.acts.insert({clean_token(a[0], norm, where + " acts"),
                        clean_token(a[1], norm, where + " acts"),
                        clean_token(a[2], norm, where + " acts")});
    }

    turn.system_response_lex =
        clean_utterance(require(t, "response_lex", where), where + " response_lex");
    turn.system_response_delex =
        clean_utterance(require(t, "response_delex", where), where + " response_delex");
    check_placeholders(turn.system_response_delex, norm, where);
    d.turns.push_back(std::move(turn));
  }
  return d;
}

std::vector<std::string> manifest_ids(const std::filesystem::path& dir, Split split) {
  const auto path = dir / "splits.json";
  const json manifest = parse_json(read_file(path), path.string());
  const auto it = manifest.find(std::string(split_name(split)));
  if (!manifest.is_object() || it == manifest.end() || !it->is_array()) {
    throw SchemaError(path.string() + ": no id list for split " + std::string(split_name(split)));
  }
  std::vector<std::string> ids;
  for (const auto& id : *it) {
    if (!id.is_string()) throw SchemaError(path.string() + ": ids must be strings");
    ids.push_back(id.get<std::string>());
  }
  return ids;
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
  }
  return "train";
}

Split split_from_name(std::string_view name) {
  for (Split s : kAllSplits) {
    if (split_name(s) == name) return s;
  }
  throw InvalidArgument("unknown split: " + std::string(name));
}

DialogueCorpus::DialogueCorpus(std::vector<Dialogue> dialogues, std::string checksum)
    : dialogues_(std::move(dialogues)), checksum_(std::move(checksum)) {
  for (std::size_t i = 0; i < dialogues_.size(); ++i) {
    if (!by_id_.emplace(dialogues_[i].id, i).second) {
      throw SchemaError("duplicate dialogue id " + dialogues_[i].id);
    }
  }
  if (checksum_.empty()) {
    std::uint64_t h = text::fnv1a64("");
    for (const auto& d : dialogues_) h = text::fnv1a64(dialogue_to_json(d), h);
    checksum_ = text::hex64(h);
  }
}

const Dialogue* DialogueCorpus::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &dialogues_[it->second];
}

std::size_t DialogueCorpus::user_turn_count() const {
  std::size_t n = 0;
  for (const auto& d : dialogues_) n += d.turns.size();
  return n;
}

DialogueCorpus DialogueCorpus::merge(const std::vector<DialogueCorpus>& parts) {
  std::vector<Dialogue> all;
  std::uint64_t h = text::fnv1a64("");
  for (const auto& p : parts) {
    all.insert(all.end(), p.dialogues().begin(), p.dialogues().end());
    h = text::fnv1a64(p.checksum(), h);
  }
  return DialogueCorpus(std::move(all), text::hex64(h));
}

Normalizer load_normalizer(const std::filesystem::path& dir) {
  const auto path = dir / "normalization.json";
  if (std::filesystem::exists(path)) return Normalizer::from_file(path);
  return Normalizer{};
}

DialogueCorpus load_corpus(const std::filesystem::path& dir, Split split) {
  return load_corpus(dir, split, load_normalizer(dir));
}

DialogueCorpus load_corpus(const std::filesystem::path& dir, Split split,
                           const Normalizer& normalization) {
  if (!std::filesystem::is_directory(dir)) {
    throw SchemaError("corpus directory not found: " + dir.string());
  }
  const auto path = dir / (std::string(split_name(split)) + ".json");
  const std::string bytes = read_file(path);
  const json doc = parse_json(bytes, path.string());
  if (!doc.is_array()) throw SchemaError(path.string() + ": expected an array of dialogues");

  std::vector<Dialogue> dialogues;
  dialogues.reserve(doc.size());
  for (const auto& rec : doc) dialogues.push_back(parse_dialogue(rec, normalization));

  const std::vector<std::string> ids = manifest_ids(dir, split);
  std::set<std::string> listed(ids.begin(), ids.end());
  std::set<std::string> present;
  for (const auto& d : dialogues) present.insert(d.id);
  if (listed != present || ids.size() != dialogues.size()) {
    throw SchemaError(path.string() + ": dialogue ids disagree with splits.json");
  }
  return DialogueCorpus(std::move(dialogues), text::hex64(text::fnv1a64(bytes)));
}

DialogueCorpus load_full_corpus(const std::filesystem::path& dir) {
  const Normalizer norm = load_normalizer(dir);
  std::vector<DialogueCorpus> parts;
  for (Split s : kAllSplits) parts.push_back(load_corpus(dir, s, norm));
  return DialogueCorpus::merge(parts);
}

Dialogue parse_dialogue_record(const std::string& json_text, const Normalizer& normalization) {
  return parse_dialogue(parse_json(json_text, "dialogue record"), normalization);
}

std::string dialogue_to_json(const Dialogue& d) {
  json goal = json::object();
  for (const auto& [domain, dg] : d.goal) {
    goal[domain] = {{"constraints", dg.constraints},
                    {"requested", dg.requested},
                    {"booking", dg.booking}};
  }
  json turns = json::array();
  for (const auto& t : d.turns) {
    json belief = json::array();
    for (const auto& e : t.belief.entries()) belief.push_back({e.domain, e.slot, e.value});
    json acts = json::array();
    for (const auto& a : t.acts) acts.push_back({a.domain, a.act, a.slot});
    turns.push_back({{"user", t.user_utterance},
                     {"emotion_id", emotion_id(t.user_emotion)},
                     {"belief", belief},
                     {"acts", acts},
                     {"response_lex", t.system_response_lex},
                     {"response_delex", t.system_response_delex}});
  }
  json rec = {{"dialogue_id", d.id}, {"goal", goal}, {"turns", turns}};
  return rec.dump();
}

void write_corpus(const std::filesystem::path& dir,
                  const std::map<Split, std::vector<Dialogue>>& splits) {
  std::filesystem::create_directories(dir);
  json manifest = json::object();
  for (Split s : kAllSplits) {
    const std::string name(split_name(s));
    json ids = json::array();
    std::ofstream out(dir / (name + ".json"), std::ios::binary);
    if (!out) throw SchemaError("cannot write " + (dir / (name + ".json")).string());
    out << "[";
    if (auto it = splits.find(s); it != splits.end()) {
      for (std::size_t i = 0; i < it->second.size(); ++i) {
        if (i) out << ",\n";
        out << dialogue_to_json(it->second[i]);
        ids.push_back(it->second[i].id);
      }
    }
    out << "]\n";
    manifest[name] = ids;
  }
  std::ofstream(dir / "splits.json") << manifest.dump(1) << "\n";
}

std::size_t LabelStats::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

LabelStats label_stats(const std::vector<Dialogue>& dialogues) {
  LabelStats stats;
  for (const auto& d : dialogues) {
    for (const auto& t : d.turns) ++stats.counts[emotion_id(t.user_emotion)];
  }
  const std::size_t total = stats.total();
  if (total > 0) {
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
      stats.proportions[i] = static_cast<double>(stats.counts[i]) / static_cast<double>(total);
    }
  }
  return stats;
}

LabelStats label_stats(const DialogueCorpus& corpus) { return label_stats(corpus.dialogues()); }

}  // namespace emotod
