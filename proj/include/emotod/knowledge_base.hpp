#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emotod/dialogue.hpp"
#include "emotod/normalize.hpp"

namespace emotod {

struct Entity {
  std::string domain;
  std::map<std::string, std::string> attributes;  // canonical values, used for matching
  std::map<std::string, std::string> display;     // surface values for lexicalization

  const std::string* get(const std::string& slot) const;
  /// Value of the domain's identifier attribute ("name", or "trainid" for train).
  const std::string& id() const;

  bool operator==(const Entity&) const = default;
};

/// Identifier attribute for a domain.
std::string_view identifier_slot(std::string_view domain);

/// Per-domain entity tables. Immutable after construction; values are
/// stored in the shared canon.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(Normalizer normalization) : normalization_(std::move(normalization)) {}

  /// Normalizes attributes and appends; SchemaError on missing or duplicate identifier.
  void add_entity(const std::string& domain, const std::map<std::string, std::string>& attributes);

  bool has_domain(const std::string& domain) const { return tables_.count(domain) > 0; }
  const std::vector<Entity>& table(const std::string& domain) const;  // throws UnknownDomain
  std::vector<std::string> domains() const;
  const Normalizer& normalization() const { return normalization_; }

  /// Whether any entity of the domain carries this attribute.
  bool has_attribute(const std::string& domain, const std::string& slot) const;

 private:
  std::map<std::string, std::vector<Entity>> tables_;
  std::map<std::string, std::map<std::string, std::size_t>> ids_;
  std::map<std::string, std::map<std::string, std::size_t>> attribute_counts_;
  Normalizer normalization_;
};

/// One `<domain>.json` file (array of attribute objects) per domain.
KnowledgeBase load_knowledge_base(const std::filesystem::path& dir);
KnowledgeBase load_knowledge_base(const std::filesystem::path& dir, const Normalizer& normalization);

/// Entities of `domain` matching every belief constraint of that domain, in
/// table order. "dontcare" matches anything; train leaveat/arriveby compare
/// as times (departure at or after, arrival at or before). Slots that no
/// entity of the table carries (booking details such as people or stay)
/// do not constrain the result.
std::vector<Entity> query(const KnowledgeBase& kb, const BeliefState& belief,
                          const std::string& domain);

/// Whether one entity satisfies the given (slot, value) constraints under
/// the same matching rules as query().
bool entity_matches(const KnowledgeBase& kb, const Entity& entity,
                    const std::map<std::string, std::string>& constraints);

struct LexicalizeResult {
  std::string text;
  std::vector<std::string> unresolved;

  bool operator==(const LexicalizeResult&) const = default;
};

/// Fill [slot] placeholders from extras, then entity attributes (surface
/// form when known), then belief
/// values (entity domain first). Unresolved placeholders stay verbatim.
LexicalizeResult lexicalize(std::string_view response_delex, const Entity* entity,
                            const BeliefState& belief,
                            const std::map<std::string, std::string>& extras);

/// Deterministic stand-in for a booking reference: 8 uppercase alphanumerics
/// derived from the dialogue id and turn.
std::string booking_reference(std::string_view dialogue_id, std::size_t turn_index);

/// Names inside [..] placeholders, in order of appearance.
std::vector<std::string> placeholders_in(std::string_view text);

}  // namespace emotod
