#include "emotod/sequencer.hpp"

#include <algorithm>
#include <cctype>

#include "emotod/errors.hpp"
#include "emotod/text.hpp"

namespace emotod {
namespace {

// Appends space-separated pieces and records content spans.
class SequenceWriter {
 public:
  void token(std::string_view tok) { piece(tok); }

  void content(SegmentTag tag, std::string_view body) {
    const std::size_t begin = text_.size() + (text_.empty() ? 0 : 1);
    if (body.empty()) {
      spans_.push_back({tag, text_.size(), text_.size()});
      return;
    }
    piece(body);
    spans_.push_back({tag, begin, text_.size()});
  }

  // Context is built piecewise; open/close mark its span.
  void open_span() { span_begin_ = text_.size() + 1; }
  void close_span(SegmentTag tag) {
    spans_.push_back({tag, std::min(span_begin_, text_.size()), text_.size()});
  }

  void piece(std::string_view s) {
    if (!text_.empty()) text_.push_back(' ');
    text_.append(s);
  }

  std::string take_text() { return std::move(text_); }
  std::vector<SegmentSpan> take_spans() { return std::move(spans_); }

 private:
  std::string text_;
  std::vector<SegmentSpan> spans_;
  std::size_t span_begin_ = 0;
};

void write_context(SequenceWriter& w, const std::vector<Utterance>& history,
                   const std::vector<Emotion>& prior_emotions, Variant variant) {
  w.token(tokens::kContext);
  w.open_span();
  std::size_t user_seen = 0;
  std::size_t user_total = 0;
  for (const auto& u : history) user_total += u.speaker == Speaker::user;
  for (const auto& u : history) {
    if (u.speaker == Speaker::user) {
      w.token(tokens::kUser);
      if (!u.text.empty()) w.piece(u.text);
      const bool prior = user_seen + 1 < user_total;
      if (variant == Variant::prev && prior) {
        w.token(tokens::kFeel);
        w.piece(canonical_name(prior_emotions[user_seen]));
        w.token(tokens::kEndOfFeel);
      }
      ++user_seen;
    } else {
      w.token(tokens::kSystem);
      if (!u.text.empty()) w.piece(u.text);
    }
  }
  w.close_span(SegmentTag::context);
  w.token(tokens::kEndOfContext);
}

void check_history(const std::vector<Utterance>& history,
                   const std::vector<Emotion>& prior_emotions, Variant variant) {
  if (history.empty() || history.back().speaker != Speaker::user) {
    throw InvalidArgument("inference history must end with a user utterance");
  }
  if (variant != Variant::prev) return;
  std::size_t users = 0;
  for (const auto& u : history) users += u.speaker == Speaker::user;
  if (prior_emotions.size() != users - 1) {
    throw ArityError("PREV prompt needs " + std::to_string(users - 1) +
                     " prior emotions, got " + std::to_string(prior_emotions.size()));
  }
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::simple:
      return "simple";
    case Variant::emo:
      return "emo";
    case Variant::prev:
      return "prev";
  }
  return "emo";
}

Variant variant_from_name(std::string_view name) {
  const std::string n = text::to_lower(name);
  if (n == "simple") return Variant::simple;
  if (n == "emo") return Variant::emo;
  if (n == "prev") return Variant::prev;
  throw InvalidArgument("unknown variant: " + std::string(name));
}

bool has_emotion_segment(Variant v) { return v != Variant::simple; }

std::string_view segment_name(SegmentTag tag) {
  switch (tag) {
    case SegmentTag::context:
      return "context";
    case SegmentTag::belief:
      return "belief";
    case SegmentTag::emotion:
      return "emotion";
    case SegmentTag::action:
      return "action";
    case SegmentTag::response:
      return "response";
  }
  return "context";
}

std::string_view SerializedSequence::content(SegmentTag tag) const {
  for (const auto& s : segments) {
    if (s.tag == tag) return std::string_view(text).substr(s.begin, s.end - s.begin);
  }
  return {};
}

std::string render_belief(const BeliefState& belief) {
  std::vector<std::string> parts;
  for (const auto& e : belief.entries()) parts.push_back(e.domain + " " + e.slot + " " + e.value);
  return text::join(parts, ", ");
}

std::string render_acts(const DialogueActSet& acts) {
  std::vector<std::string> parts;
  for (const auto& a : acts) parts.push_back(a.domain + " " + a.act + " " + a.slot);
  return text::join(parts, ", ");
}

SerializedSequence build_training_sequence(const Dialogue& dialogue, std::size_t turn_index,
                                           Variant variant) {
  if (turn_index >= dialogue.turns.size()) {
    throw IndexError("turn index " + std::to_string(turn_index) + " out of range for dialogue " +
                     dialogue.id);
  }
  const Turn& turn = dialogue.turns[turn_index];
  std::vector<Emotion> prior;
  prior.reserve(turn_index);
  for (std::size_t i = 0; i < turn_index; ++i) prior.push_back(dialogue.turns[i].user_emotion);

  SequenceWriter w;
  write_context(w, gold_history(dialogue, turn_index), prior, variant);
  w.token(tokens::kBelief);
  w.content(SegmentTag::belief, render_belief(turn.belief));
  w.token(tokens::kEndOfBelief);
  if (has_emotion_segment(variant)) {
    w.token(tokens::kEmotion);
    w.content(SegmentTag::emotion, canonical_name(turn.user_emotion));
    w.token(tokens::kEndOfEmotion);
  }
  w.token(tokens::kAction);
  w.content(SegmentTag::action, render_acts(turn.acts));
  w.token(tokens::kEndOfAction);
  w.token(tokens::kResponse);
  w.content(SegmentTag::response, turn.system_response_delex);
  w.token(tokens::kEndOfResponse);

  SerializedSequence seq;
  seq.text = w.take_text();
  seq.segments = w.take_spans();
  seq.variant = variant;
  return seq;
}

std::string build_inference_prompt(const std::vector<Utterance>& history,
                                   const std::vector<Emotion>& prior_emotions, Variant variant) {
  check_history(history, prior_emotions, variant);
  SequenceWriter w;
  write_context(w, history, prior_emotions, variant);
  w.token(tokens::kBelief);
  return w.take_text();
}

DelexResult delexicalize(std::string_view utterance,
                         const std::map<std::string, std::string>& bindings) {
  return delexicalize(utterance, bindings, Normalizer{});
}

DelexResult delexicalize(std::string_view utterance,
                         const std::map<std::string, std::string>& bindings,
                         const Normalizer& normalization) {
  struct Candidate {
    std::string surface;
    const std::string* placeholder;
  };
  std::vector<Candidate> candidates;
  for (const auto& [placeholder, value] : bindings) {
    const std::string raw = text::collapse_whitespace(value);
    if (raw.empty()) continue;
    candidates.push_back({raw, &placeholder});
    const std::string canon = normalization.value(value);
    if (!canon.empty() && canon != text::to_lower(raw)) candidates.push_back({canon, &placeholder});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.surface.size() > b.surface.size();
                   });

  std::map<std::string, bool> used;
  for (const auto& [placeholder, value] : bindings) used[placeholder] = false;

  std::string out;
  out.reserve(utterance.size());
  std::size_t i = 0;
  while (i < utterance.size()) {
    if (utterance[i] == '[') {
      const std::size_t close = utterance.find(']', i);
      if (close != std::string_view::npos) {
        out.append(utterance.substr(i, close - i + 1));
        i = close + 1;
        continue;
      }
    }
    const bool after_word = i > 0 && is_word_char(utterance[i - 1]);
    bool matched = false;
    {
      for (const auto& c : candidates) {
        if (after_word && is_word_char(c.surface.front())) continue;
        if (!text::starts_with_icase(utterance, i, c.surface)) continue;
        const std::size_t end = i + c.surface.size();
        if (end < utterance.size() && is_word_char(utterance[end]) &&
            is_word_char(c.surface.back())) {
          continue;
        }
        out.push_back('[');
        out.append(*c.placeholder);
        out.push_back(']');
        used[*c.placeholder] = true;
        i = end;
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(utterance[i++]);
  }

  DelexResult result;
  result.text = std::move(out);
  for (const auto& [placeholder, hit] : used) {
    if (!hit) result.unmatched.push_back(placeholder);
  }
  return result;
}

}  // namespace emotod
