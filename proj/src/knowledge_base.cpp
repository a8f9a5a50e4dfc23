#include "emotod/knowledge_base.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "emotod/errors.hpp"
#include "emotod/text.hpp"

namespace emotod {
namespace {

std::optional<int> parse_minutes(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 >= s.size()) return std::nullopt;
  int h = 0;
  int m = 0;
  for (char c : s.substr(0, colon)) {
    if (c < '0' || c > '9') return std::nullopt;
    h = h * 10 + (c - '0');
  }
  for (char c : s.substr(colon + 1)) {
    if (c < '0' || c > '9') return std::nullopt;
    m = m * 10 + (c - '0');
  }
  if (h > 47 || m > 59) return std::nullopt;
  return h * 60 + m;
}

bool slot_matches(const std::string& domain, const std::string& slot,
                  const std::string& entity_value, const std::string& wanted) {
  if (wanted == kDontCare) return true;
  if (domain == "train" && (slot == "leaveat" || slot == "arriveby")) {
    const auto have = parse_minutes(entity_value);
    const auto want = parse_minutes(wanted);
    if (have && want) return slot == "leaveat" ? *have >= *want : *have <= *want;
  }
  return entity_value == wanted;
}

bool is_placeholder_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

const std::string* Entity::get(const std::string& slot) const {
  auto it = attributes.find(slot);
  return it == attributes.end() ? nullptr : &it->second;
}

const std::string& Entity::id() const {
  static const std::string empty;
  const std::string* v = get(std::string(identifier_slot(domain)));
  return v ? *v : empty;
}

std::string_view identifier_slot(std::string_view domain) {
  return domain == "train" ? "trainid" : "name";
}

void KnowledgeBase::add_entity(const std::string& domain_raw,
                               const std::map<std::string, std::string>& attributes) {
  const std::string domain = normalization_.key(domain_raw);
  Entity e;
  e.domain = domain;
  for (const auto& [slot, value] : attributes) {
    const std::string key = normalization_.key(slot);
    e.attributes[key] = normalization_.value(value);
    e.display[key] = text::collapse_whitespace(value);
  }
  const std::string& id = e.id();
  if (id.empty()) {
    throw SchemaError(domain + " entity lacks identifier '" +
                      std::string(identifier_slot(domain)) + "'");
  }
  auto& ids = ids_[domain];
  if (ids.count(id)) throw SchemaError("duplicate " + domain + " entity '" + id + "'");
  auto& table = tables_[domain];
  ids.emplace(id, table.size());
  for (const auto& [slot, value] : e.attributes) ++attribute_counts_[domain][slot];
  table.push_back(std::move(e));
}

const std::vector<Entity>& KnowledgeBase::table(const std::string& domain) const {
  auto it = tables_.find(domain);
  if (it == tables_.end()) throw UnknownDomain(domain);
  return it->second;
}

std::vector<std::string> KnowledgeBase::domains() const {
  std::vector<std::string> out;
  for (const auto& [d, t] : tables_) out.push_back(d);
  return out;
}

bool KnowledgeBase::has_attribute(const std::string& domain, const std::string& slot) const {
  auto it = attribute_counts_.find(domain);
  return it != attribute_counts_.end() && it->second.count(slot) > 0;
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& dir) {
  const auto norm_path = dir / "normalization.json";
  return load_knowledge_base(
      dir, std::filesystem::exists(norm_path) ? Normalizer::from_file(norm_path) : Normalizer{});
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& dir,
                                  const Normalizer& normalization) {
  if (!std::filesystem::is_directory(dir)) {
    throw SchemaError("knowledge base directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        entry.path().filename() != "normalization.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  KnowledgeBase kb(normalization);
  for (const auto& path : files) {
    const std::string domain = path.stem().string();
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw SchemaError(path.string() + ": expected an array of entities");
    for (const auto& rec : doc) {
      if (!rec.is_object()) throw SchemaError(path.string() + ": entity must be an object");
      std::map<std::string, std::string> attrs;
      for (const auto& [slot, value] : rec.items()) {
        if (value.is_string()) {
          attrs[slot] = value.get<std::string>();
        } else if (value.is_number() || value.is_boolean()) {
          attrs[slot] = value.dump();
        } else if (!value.is_null()) {
          // Nested structures (e.g. location coordinates) are not queryable.
          continue;
        }
      }
      try {
        kb.add_entity(domain, attrs);
      } catch (const SchemaError& e) {
        throw SchemaError(path.string() + ": " + e.what());
      }
    }
  }
  return kb;
}

bool entity_matches(const KnowledgeBase& kb, const Entity& entity,
                    const std::map<std::string, std::string>& constraints) {
  const Normalizer& norm = kb.normalization();
  for (const auto& [slot_raw, value_raw] : constraints) {
    const std::string slot = norm.key(slot_raw);
    if (!kb.has_attribute(entity.domain, slot)) continue;
    const std::string wanted = norm.value(value_raw);
    if (wanted == kDontCare) continue;
    const std::string* have = entity.get(slot);
    if (!have || !slot_matches(entity.domain, slot, *have, wanted)) return false;
  }
  return true;
}

std::vector<Entity> query(const KnowledgeBase& kb, const BeliefState& belief,
                          const std::string& domain) {
  const auto& table = kb.table(domain);
  std::map<std::string, std::string> constraints;
  for (const auto& e : belief.entries_for(domain)) constraints.emplace(e.slot, e.value);
  std::vector<Entity> out;
  for (const auto& entity : table) {
    if (entity_matches(kb, entity, constraints)) out.push_back(entity);
  }
  return out;
}

std::vector<std::string> placeholders_in(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = text.find('[', pos)) != std::string_view::npos) {
    std::size_t j = pos + 1;
    while (j < text.size() && is_placeholder_char(text[j])) ++j;
    if (j < text.size() && text[j] == ']' && j > pos + 1) {
      out.emplace_back(text.substr(pos + 1, j - pos - 1));
      pos = j + 1;
    } else {
      ++pos;
    }
  }
  return out;
}

LexicalizeResult lexicalize(std::string_view response_delex, const Entity* entity,
                            const BeliefState& belief,
                            const std::map<std::string, std::string>& extras) {
  auto resolve = [&](const std::string& slot) -> const std::string* {
    if (auto it = extras.find(slot); it != extras.end()) return &it->second;
    if (entity) {
      if (auto it = entity->display.find(slot); it != entity->display.end()) return &it->second;
      if (const std::string* v = entity->get(slot)) return v;
      if (const std::string* v = belief.find(entity->domain, slot)) return v;
    }
    for (const auto& domain : belief.domains()) {
      if (const std::string* v = belief.find(domain, slot)) return v;
    }
    return nullptr;
  };

  LexicalizeResult result;
  std::set<std::string> unresolved_seen;
  std::size_t i = 0;
  while (i < response_delex.size()) {
    if (response_delex[i] == '[') {
      std::size_t j = i + 1;
      while (j < response_delex.size() && is_placeholder_char(response_delex[j])) ++j;
      if (j < response_delex.size() && response_delex[j] == ']' && j > i + 1) {
        const std::string slot(response_delex.substr(i + 1, j - i - 1));
        if (const std::string* v = resolve(slot)) {
          result.text.append(*v);
        } else {
          result.text.append(response_delex.substr(i, j - i + 1));
          if (unresolved_seen.insert(slot).second) result.unresolved.push_back(slot);
        }
        i = j + 1;
        continue;
      }
    }
    result.text.push_back(response_delex[i++]);
  }
  return result;
}

std::string booking_reference(std::string_view dialogue_id, std::size_t turn_index) {
  static constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::uint64_t h = text::fnv1a64(dialogue_id);
  h = text::fnv1a64("#" + std::to_string(turn_index), h);
  std::string ref;
  for (int k = 0; k < 8; ++k) {
    ref.push_back(kAlphabet[h % kAlphabet.size()]);
    h /= kAlphabet.size();
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ULL;
  }
  return ref;
}

}  // namespace emotod
