#include "emotod/dialogue.hpp"

#include "emotod/errors.hpp"

namespace emotod {

bool BeliefState::insert(std::string domain, std::string slot, std::string value) {
  return values_.emplace(Key{std::move(domain), std::move(slot)}, std::move(value)).second;
}

void BeliefState::set(std::string domain, std::string slot, std::string value) {
  values_[Key{std::move(domain), std::move(slot)}] = std::move(value);
}

const std::string* BeliefState::find(const std::string& domain, const std::string& slot) const {
  auto it = values_.find(Key{domain, slot});
  return it == values_.end() ? nullptr : &it->second;
}

std::vector<BeliefEntry> BeliefState::entries() const {
  std::vector<BeliefEntry> out;
  out.reserve(values_.size());
  for (const auto& [key, value] : values_) out.push_back({key.first, key.second, value});
  return out;
}

std::vector<BeliefEntry> BeliefState::entries_for(const std::string& domain) const {
  std::vector<BeliefEntry> out;
  for (auto it = values_.lower_bound(Key{domain, ""});
       it != values_.end() && it->first.first == domain; ++it) {
    out.push_back({it->first.first, it->first.second, it->second});
  }
  return out;
}

std::set<std::string> BeliefState::domains() const {
  std::set<std::string> out;
  for (const auto& [key, value] : values_) out.insert(key.first);
  return out;
}

std::vector<Utterance> gold_history(const Dialogue& dialogue, std::size_t turn_index) {
  if (turn_index >= dialogue.turns.size()) {
    throw IndexError("turn index " + std::to_string(turn_index) + " out of range for " +
                          dialogue.id);
  }
  std::vector<Utterance> history;
  history.reserve(2 * turn_index + 1);
  for (std::size_t i = 0; i < turn_index; ++i) {
    history.push_back({Speaker::user, dialogue.turns[i].user_utterance});
    history.push_back({Speaker::system, dialogue.turns[i].system_response_lex});
  }
  history.push_back({Speaker::user, dialogue.turns[turn_index].user_utterance});
  return history;
}

}  // namespace emotod
