#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qponder::tagparse {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

struct StructuredOutput {
  std::string reasoning;  // think block body, verbatim
  double score = 0.0;     // answer block value, in [0, 100]
  bool compliant = false;
  std::string raw;
};

enum class FormatIssue {
  MissingThinkOpen,
  MissingThinkClose,
  MissingAnswerOpen,
  MissingAnswerClose,
  DuplicateBlock,
  AnswerBeforeThink,
  NonNumericAnswer,
  ScoreOutOfRange,
  TrailingGarbage,
};

std::string_view issue_name(FormatIssue code);

struct FormatDiagnosis {
  FormatIssue code;
  std::string detail;
};

// Total result: exactly one of `output` / non-empty `diagnoses` is active.
struct ParseResult {
  std::optional<StructuredOutput> output;
  std::vector<FormatDiagnosis> diagnoses;

  bool ok() const { return output.has_value(); }
};

// Strict grammar: optional whitespace, one think block, optional whitespace,
// one answer block, optional whitespace, end of input. The answer body is an
// unsigned decimal (digits, optionally '.' digits, or '.' digits) in
// [0, 100] after trimming. Never throws; every failure is diagnosed.
ParseResult parse_output(std::string_view text);

class RenderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TagInReasoning : public RenderError {
 public:
  explicit TagInReasoning(std::string_view tag);
};

class RenderScoreOutOfRange : public RenderError {
 public:
  explicit RenderScoreOutOfRange(double score);
};

// Canonical two-block form with the score printed to 4 decimal places;
// parse_output(render_output(r, s)) always succeeds.
std::string render_output(std::string_view reasoning, double score);

}  // namespace qponder::tagparse
