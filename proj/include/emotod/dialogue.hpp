#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "emotod/emotion.hpp"

namespace emotod {

struct BeliefEntry {
  std::string domain;
  std::string slot;
  std::string value;

  auto operator<=>(const BeliefEntry&) const = default;
};

/// Accumulated (domain, slot, value) user constraints. At most one value
/// per (domain, slot); iteration is in lexicographic order.
class BeliefState {
 public:
  using Key = std::pair<std::string, std::string>;

  BeliefState() = default;

  /// Returns false (and leaves the state unchanged) if (domain, slot) is taken.
  bool insert(std::string domain, std::string slot, std::string value);
  void set(std::string domain, std::string slot, std::string value);

  const std::string* find(const std::string& domain, const std::string& slot) const;
  std::vector<BeliefEntry> entries() const;
  std::vector<BeliefEntry> entries_for(const std::string& domain) const;
  std::set<std::string> domains() const;

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  bool operator==(const BeliefState&) const = default;

 private:
  std::map<Key, std::string> values_;
};

struct DialogueAct {
  std::string domain;
  std::string act;
  std::string slot;  // "none" when the act carries no slot

  auto operator<=>(const DialogueAct&) const = default;
};

using DialogueActSet = std::set<DialogueAct>;

struct Turn {
  std::size_t index = 0;
  std::string user_utterance;
  Emotion user_emotion = Emotion::neutral;
  BeliefState belief;
  DialogueActSet acts;
  std::string system_response_lex;
  std::string system_response_delex;

  bool operator==(const Turn&) const = default;
};

struct DomainGoal {
  std::map<std::string, std::string> constraints;  // informable slot -> value
  std::set<std::string> requested;                 // requestable slot names
  std::map<std::string, std::string> booking;

  bool operator==(const DomainGoal&) const = default;
};

using Goal = std::map<std::string, DomainGoal>;

struct Dialogue {
  std::string id;
  Goal goal;
  std::vector<Turn> turns;

  bool operator==(const Dialogue&) const = default;
};

enum class Speaker { user, system };

struct Utterance {
  Speaker speaker;
  std::string text;

  bool operator==(const Utterance&) const = default;
};

/// Gold history C_t = [U_0, S_0, ..., U_t] for the given turn.
std::vector<Utterance> gold_history(const Dialogue& dialogue, std::size_t turn_index);

}  // namespace emotod
