#include "qponder/tagparse.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace qponder::tagparse {

std::string_view issue_name(FormatIssue code) {
  switch (code) {
    case FormatIssue::MissingThinkOpen: return "MissingThinkOpen";
    case FormatIssue::MissingThinkClose: return "MissingThinkClose";
    case FormatIssue::MissingAnswerOpen: return "MissingAnswerOpen";
    case FormatIssue::MissingAnswerClose: return "MissingAnswerClose";
    case FormatIssue::DuplicateBlock: return "DuplicateBlock";
    case FormatIssue::AnswerBeforeThink: return "AnswerBeforeThink";
    case FormatIssue::NonNumericAnswer: return "NonNumericAnswer";
    case FormatIssue::ScoreOutOfRange: return "ScoreOutOfRange";
    case FormatIssue::TrailingGarbage: return "TrailingGarbage";
  }
  return "Unknown";
}

TagInReasoning::TagInReasoning(std::string_view tag)
    : RenderError("reasoning text contains tag literal " + std::string(tag)) {}

RenderScoreOutOfRange::RenderScoreOutOfRange(double score)
    : RenderError("score " + std::to_string(score) + " outside [0, 100]") {}

namespace {

struct TagScan {
  std::size_t count = 0;
  std::size_t first = std::string_view::npos;
};

TagScan scan_tag(std::string_view text, std::string_view tag) {
  TagScan s;
  std::size_t pos = 0;
  while ((pos = text.find(tag, pos)) != std::string_view::npos) {
    if (s.count == 0) s.first = pos;
    ++s.count;
    pos += tag.size();
  }
  return s;
}

bool whitespace_only(std::string_view s) {
  for (unsigned char c : s)
    if (!std::isspace(c)) return false;
  return true;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// digits ['.' digits] | '.' digits, with no sign and no exponent.
bool is_plain_decimal(std::string_view s) {
  std::size_t i = 0, before = 0, after = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    ++i;
    ++before;
  }
  if (i == s.size()) return before > 0;
  if (s[i] != '.') return false;
  ++i;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    ++i;
    ++after;
  }
  return i == s.size() && after > 0;
}

}  // namespace

ParseResult parse_output(std::string_view text) {
  ParseResult res;
  auto fail = [&](FormatIssue code, std::string detail) {
    res.diagnoses.push_back({code, std::move(detail)});
  };

  const TagScan to = scan_tag(text, kThinkOpen);
  const TagScan tc = scan_tag(text, kThinkClose);
  const TagScan ao = scan_tag(text, kAnswerOpen);
  const TagScan ac = scan_tag(text, kAnswerClose);

  if (to.count == 0) fail(FormatIssue::MissingThinkOpen, "no <think> tag");
  if (tc.count == 0) fail(FormatIssue::MissingThinkClose, "no </think> tag");
  if (ao.count == 0) fail(FormatIssue::MissingAnswerOpen, "no <answer> tag");
  if (ac.count == 0) fail(FormatIssue::MissingAnswerClose, "no </answer> tag");
  if (!res.diagnoses.empty()) return res;

  const std::array<std::pair<std::string_view, std::size_t>, 4> counts{{
      {kThinkOpen, to.count},
      {kThinkClose, tc.count},
      {kAnswerOpen, ao.count},
      {kAnswerClose, ac.count},
  }};
  for (const auto& [tag, n] : counts) {
    if (n > 1) {
      fail(FormatIssue::DuplicateBlock,
           std::string(tag) + " appears " + std::to_string(n) + " times");
      return res;
    }
  }

  // Exactly one of each tag exists; enforce <think> … </think> <answer> …
  // </answer> ordering.
  if (tc.first < to.first) {
    fail(FormatIssue::MissingThinkClose, "</think> precedes <think>");
    return res;
  }
  if (ac.first < ao.first) {
    fail(FormatIssue::MissingAnswerClose, "</answer> precedes <answer>");
    return res;
  }
  if (ao.first < tc.first) {
    fail(FormatIssue::AnswerBeforeThink,
         "<answer> opens before the think block closes");
    return res;
  }

  const std::string_view prefix = text.substr(0, to.first);
  const std::string_view middle = text.substr(
      tc.first + kThinkClose.size(), ao.first - tc.first - kThinkClose.size());
  const std::string_view suffix = text.substr(ac.first + kAnswerClose.size());
  if (!whitespace_only(prefix))
    fail(FormatIssue::TrailingGarbage, "text before <think>");
  if (!whitespace_only(middle))
    fail(FormatIssue::TrailingGarbage, "text between blocks");
  if (!whitespace_only(suffix))
    fail(FormatIssue::TrailingGarbage, "text after </answer>");

  const std::string_view reasoning = text.substr(
      to.first + kThinkOpen.size(), tc.first - to.first - kThinkOpen.size());
  const std::string_view body = trim(text.substr(
      ao.first + kAnswerOpen.size(), ac.first - ao.first - kAnswerOpen.size()));

  double score = 0.0;
  bool numeric = is_plain_decimal(body);
  if (numeric) {
    const auto [ptr, ec] =
        std::from_chars(body.data(), body.data() + body.size(), score);
    if (ec == std::errc::result_out_of_range) {
      // Grammar-valid but astronomically large; still just an out-of-range
      // score.
      fail(FormatIssue::ScoreOutOfRange, "answer value overflows");
      return res;
    }
    numeric = ec == std::errc() && ptr == body.data() + body.size();
  }
  if (!numeric) {
    fail(FormatIssue::NonNumericAnswer,
         "answer body is not a plain decimal: \"" + std::string(body) + "\"");
    return res;
  }
  if (score > 100.0) {
    fail(FormatIssue::ScoreOutOfRange,
         "score " + std::string(body) + " exceeds 100");
    return res;
  }
  if (!res.diagnoses.empty()) return res;

  StructuredOutput out;
  out.reasoning = std::string(reasoning);
  out.score = score;
  out.compliant = true;
  out.raw = std::string(text);
  res.output = std::move(out);
  return res;
}

std::string render_output(std::string_view reasoning, double score) {
  for (std::string_view tag :
       {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (reasoning.find(tag) != std::string_view::npos)
      throw TagInReasoning(tag);
  }
  if (!std::isfinite(score) || score < 0.0 || score > 100.0)
    throw RenderScoreOutOfRange(score);

  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", score);
  std::string out;
  out.reserve(reasoning.size() + 48);
  out.append(kThinkOpen);
  out.append(reasoning);
  out.append(kThinkClose);
  out.append(kAnswerOpen);
  out.append(buf);
  out.append(kAnswerClose);
  return out;
}

}  // namespace qponder::tagparse
