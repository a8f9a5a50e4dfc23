#include "emotod/output_parser.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "emotod/text.hpp"

namespace emotod {
namespace {

struct SegmentDelims {
  SegmentTag tag;
  std::string_view open;
  std::string_view close;
};

constexpr std::array<SegmentDelims, 4> kSegments = {{
    {SegmentTag::belief, tokens::kBelief, tokens::kEndOfBelief},
    {SegmentTag::emotion, tokens::kEmotion, tokens::kEndOfEmotion},
    {SegmentTag::action, tokens::kAction, tokens::kEndOfAction},
    {SegmentTag::response, tokens::kResponse, tokens::kEndOfResponse},
}};

constexpr std::size_t npos = std::string_view::npos;

// Earliest opening delimiter of any segment after `index` in kSegments.
std::size_t next_open(std::string_view text, std::size_t from, std::size_t index,
                      bool with_emotion) {
  std::size_t best = npos;
  for (std::size_t k = index + 1; k < kSegments.size(); ++k) {
    if (!with_emotion && kSegments[k].tag == SegmentTag::emotion) continue;
    best = std::min(best, text.find(kSegments[k].open, from));
  }
  return best;
}

void parse_belief(std::string_view content, ParsedTurn& out) {
  const std::string_view body = text::trim(content);
  if (body.empty()) return;
  for (const std::string& piece : text::split(body, ",")) {
    const auto toks = text::split_whitespace(piece);
    if (toks.size() < 3) {
      out.diagnostics.push_back({ParseIssueKind::malformed_entry, SegmentTag::belief,
                                 "expected 'domain slot value', got '" +
                                     std::string(text::trim(piece)) + "'"});
      continue;
    }
    std::vector<std::string> rest(toks.begin() + 2, toks.end());
    if (!out.belief.insert(toks[0], toks[1], text::join(rest, " "))) {
      out.diagnostics.push_back({ParseIssueKind::malformed_entry, SegmentTag::belief,
                                 "duplicate slot '" + toks[0] + " " + toks[1] + "'"});
    }
  }
}

void parse_acts(std::string_view content, ParsedTurn& out) {
  const std::string_view body = text::trim(content);
  if (body.empty()) return;
  for (const std::string& piece : text::split(body, ",")) {
    const auto toks = text::split_whitespace(piece);
    if (toks.size() != 3) {
      out.diagnostics.push_back({ParseIssueKind::malformed_entry, SegmentTag::action,
                                 "expected 'domain act slot', got '" +
                                     std::string(text::trim(piece)) + "'"});
      continue;
    }
    out.acts.insert({toks[0], toks[1], toks[2]});
  }
}

void parse_emotion(std::string_view content, ParsedTurn& out) {
  const std::string_view body = text::trim(content);
  if (auto e = emotion_from_name(body)) {
    out.emotion = *e;
    return;
  }
  out.emotion = Emotion::neutral;
  out.diagnostics.push_back({ParseIssueKind::unknown_emotion, SegmentTag::emotion,
                             body.empty() ? "empty emotion" : "'" + std::string(body) + "'"});
}

}  // namespace

std::string_view issue_kind_name(ParseIssueKind kind) {
  switch (kind) {
    case ParseIssueKind::missing_segment:
      return "MissingSegment";
    case ParseIssueKind::malformed_entry:
      return "MalformedEntry";
    case ParseIssueKind::unknown_emotion:
      return "UnknownEmotion";
    case ParseIssueKind::truncated_output:
      return "TruncatedOutput";
  }
  return "MissingSegment";
}

ParsedTurn parse_generation(std::string_view text, Variant variant) {
  ParsedTurn out;
  const bool with_emotion = has_emotion_segment(variant);

  std::size_t cursor = 0;
  if (const auto ctx_end = text.find(tokens::kEndOfContext); ctx_end != npos) {
    cursor = ctx_end + tokens::kEndOfContext.size();
  }

  bool first = true;
  for (std::size_t k = 0; k < kSegments.size(); ++k) {
    const SegmentDelims& seg = kSegments[k];
    if (seg.tag == SegmentTag::emotion && !with_emotion) continue;

    std::size_t begin = npos;
    std::size_t end = npos;
    bool truncated = false;

    const std::size_t open = text.find(seg.open, cursor);
    if (open != npos) {
      begin = open + seg.open.size();
      const std::size_t close = text.find(seg.close, begin);
      const std::size_t following = next_open(text, begin, k, with_emotion);
      if (close != npos && (following == npos || close < following)) {
        end = close;
        cursor = close + seg.close.size();
      } else {
        truncated = true;
        end = following == npos ? text.size() : following;
        cursor = end;
      }
    } else if (first) {
      // Continuation of a prompt that already ended with the opening delimiter.
      const std::size_t close = text.find(seg.close, cursor);
      const std::size_t following = next_open(text, cursor, k, with_emotion);
      if (close != npos && (following == npos || close < following)) {
        begin = cursor;
        end = close;
        cursor = close + seg.close.size();
      } else if (following != npos &&
                 !text::trim(text.substr(cursor, following - cursor)).empty()) {
        begin = cursor;
        end = following;
        cursor = following;
        truncated = true;
      }
    }
    first = false;

    if (begin == npos) {
      out.diagnostics.push_back({ParseIssueKind::missing_segment, seg.tag,
                                 std::string(segment_name(seg.tag)) + " segment not found"});
      continue;
    }
    if (truncated) {
      out.diagnostics.push_back({ParseIssueKind::truncated_output, seg.tag,
                                 "no " + std::string(seg.close) + " delimiter"});
    }

    const std::string_view content = text.substr(begin, end - begin);
    switch (seg.tag) {
      case SegmentTag::belief:
        parse_belief(content, out);
        break;
      case SegmentTag::emotion:
        parse_emotion(content, out);
        break;
      case SegmentTag::action:
        parse_acts(content, out);
        break;
      case SegmentTag::response:
        out.response_delex = std::string(text::trim(content));
        break;
      case SegmentTag::context:
        break;
    }
  }
  return out;
}

BeliefState normalize_belief(const BeliefState& raw, const Normalizer& normalization) {
  std::map<BeliefState::Key, std::string> canon;
  for (const auto& e : raw.entries()) {
    BeliefState::Key key{normalization.key(e.domain), normalization.key(e.slot)};
    std::string value = normalization.value(e.value);
    auto [it, inserted] = canon.emplace(std::move(key), value);
    if (!inserted && value < it->second) it->second = std::move(value);
  }
  BeliefState out;
  for (auto& [key, value] : canon) out.insert(key.first, key.second, std::move(value));
  return out;
}

}  // namespace emotod
