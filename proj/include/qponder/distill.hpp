#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qponder/core.hpp"

namespace qponder::distill {

// Quality bands over the normalized MOS range, worst first. Low MOS means a
// heavily degraded image.
enum class Severity { Extreme, Severe, Noticeable, Moderate, Slight };

std::string_view severity_name(Severity s);

// Equal fifths of [0, 1], left-closed: [0, 0.2) -> Extreme, ...,
// [0.8, 1.0] -> Slight. Throws std::domain_error outside [0, 1].
Severity severity_of(double mos);

class MissingDistortionType : public std::runtime_error {
 public:
  explicit MissingDistortionType(const std::string& id);
};

// "{Severity}_{DistortionType}", e.g. "Severe_Blur". The type's first
// letter is capitalized; the rest is kept verbatim.
std::string enrich_tag(const core::Sample& sample);

struct FilterRule {
  double gamma = 0.8;  // retained fraction, in (0, 1)
  enum class TieBreak { ByIndex } tie_break = TieBreak::ByIndex;

  void validate() const;
};

class MissingPrediction : public std::runtime_error {
 public:
  explicit MissingPrediction(const std::string& id);
};

class EmptyDataset : public std::runtime_error {
 public:
  EmptyDataset();
};

// Keeps the floor(gamma*N) samples with the smallest |predicted - 100*mos|,
// ranked with stable index tie-break; original order is preserved in the
// output. Exact multiples of 1/N in gamma*N keep exactly gamma*N samples.
core::Dataset filter_refined(const core::Dataset& ds, const FilterRule& rule);

struct QualityReport {
  double plcc = 0.0;
  double srcc = 0.0;
};

// PLCC/SRCC of predicted_score against rescaled MOS.
QualityReport quality_report(const core::Dataset& ds);

struct DistillPromptSpec {
  std::string system_text;
  std::string low_level_note;
  std::vector<std::string> low_level_criteria;   // exactly 8
  std::string high_level_note;
  std::string special_rule;
  std::vector<std::string> high_level_criteria;  // exactly 6
  std::string output_format_text;
  std::string hint;  // contains the {distortion_tags} placeholder

  void validate() const;
};

DistillPromptSpec load_prompt_spec(const std::filesystem::path& path);

// Deterministic concatenation of all sections; the hint sentence appears
// iff a tag is supplied, with the placeholder substituted.
std::string render_distill_prompt(const DistillPromptSpec& spec,
                                  std::optional<std::string_view> tag);

}  // namespace qponder::distill
