#include "qponder/distill.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "qponder/metrics.hpp"

namespace qponder::distill {

using nlohmann::json;

std::string_view severity_name(Severity s) {
  switch (s) {
    case Severity::Extreme: return "Extreme";
    case Severity::Severe: return "Severe";
    case Severity::Noticeable: return "Noticeable";
    case Severity::Moderate: return "Moderate";
    case Severity::Slight: return "Slight";
  }
  return "Unknown";
}

Severity severity_of(double mos) {
  if (!(mos >= 0.0 && mos <= 1.0))
    throw std::domain_error("severity_of: mos outside [0, 1]");
  // floor(mos*5) lands each boundary in its right-hand bin; 1.0 clamps into
  // the last bin.
  int bin = static_cast<int>(std::floor(mos * 5.0));
  if (bin > 4) bin = 4;
  return static_cast<Severity>(bin);
}

MissingDistortionType::MissingDistortionType(const std::string& id)
    : std::runtime_error("sample \"" + id + "\" has no distortion_type") {}

std::string enrich_tag(const core::Sample& sample) {
  if (!sample.distortion_type || sample.distortion_type->empty())
    throw MissingDistortionType(sample.id);
  std::string type = *sample.distortion_type;
  type[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(type[0])));
  return std::string(severity_name(severity_of(sample.mos))) + "_" + type;
}

void FilterRule::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("filter: gamma must lie in (0, 1)");
}

MissingPrediction::MissingPrediction(const std::string& id)
    : std::runtime_error("sample \"" + id + "\" has no predicted_score") {}

EmptyDataset::EmptyDataset() : std::runtime_error("dataset is empty") {}

core::Dataset filter_refined(const core::Dataset& ds, const FilterRule& rule) {
  rule.validate();
  if (ds.empty()) throw EmptyDataset();

  const std::size_t n = ds.size();
  std::vector<double> err(n);
  for (std::size_t i = 0; i < n; ++i) {
    const core::Sample& s = ds.samples[i];
    if (!s.predicted_score) throw MissingPrediction(s.id);
    err[i] = std::abs(*s.predicted_score - core::rescale_score(s.mos));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // stable_sort on error alone = ascending error with index tie-break
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return err[a] < err[b]; });

  // The epsilon absorbs cases like 0.7*10 landing at 6.999999...; an exact
  // integer gamma*N must keep exactly that many.
  const auto keep =
      static_cast<std::size_t>(std::floor(rule.gamma * double(n) + 1e-9));

  std::vector<bool> kept(n, false);
  for (std::size_t r = 0; r < keep; ++r) kept[order[r]] = true;

  core::Dataset out;
  out.scale = ds.scale;
  out.provenance = ds.provenance;
  out.samples.reserve(keep);
  for (std::size_t i = 0; i < n; ++i)
    if (kept[i]) out.samples.push_back(ds.samples[i]);
  return out;
}

QualityReport quality_report(const core::Dataset& ds) {
  std::vector<double> pred, truth;
  pred.reserve(ds.size());
  truth.reserve(ds.size());
  for (const core::Sample& s : ds.samples) {
    if (!s.predicted_score) throw MissingPrediction(s.id);
    pred.push_back(*s.predicted_score);
    truth.push_back(core::rescale_score(s.mos));
  }
  return {metrics::plcc(pred, truth), metrics::srcc(pred, truth)};
}

void DistillPromptSpec::validate() const {
  if (low_level_criteria.size() != 8)
    throw std::invalid_argument("prompt spec: expected 8 low-level criteria");
  if (high_level_criteria.size() != 6)
    throw std::invalid_argument("prompt spec: expected 6 high-level criteria");
  if (system_text.empty() || output_format_text.empty())
    throw std::invalid_argument("prompt spec: missing system or format text");
  if (hint.find("{distortion_tags}") == std::string::npos)
    throw std::invalid_argument(
        "prompt spec: hint lacks the {distortion_tags} placeholder");
}

DistillPromptSpec load_prompt_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open prompt template: " + path.string());
  json j = json::parse(in);
  DistillPromptSpec spec;
  spec.system_text = j.at("system").get<std::string>();
  spec.low_level_note = j.at("low_level").at("note").get<std::string>();
  spec.low_level_criteria =
      j.at("low_level").at("criteria").get<std::vector<std::string>>();
  spec.high_level_note = j.at("high_level").at("note").get<std::string>();
  spec.special_rule = j.at("high_level").at("special_rule").get<std::string>();
  spec.high_level_criteria =
      j.at("high_level").at("criteria").get<std::vector<std::string>>();
  spec.output_format_text = j.at("output_format").get<std::string>();
  spec.hint = j.at("hint").get<std::string>();
  spec.validate();
  return spec;
}

std::string render_distill_prompt(const DistillPromptSpec& spec,
                                  std::optional<std::string_view> tag) {
  std::string out;
  out.reserve(2048);
  out += spec.system_text;
  out += "\n\nLow-Level Attribute Analysis\nNote: ";
  out += spec.low_level_note;
  out += "\n";
  for (std::size_t i = 0; i < spec.low_level_criteria.size(); ++i) {
    out += std::to_string(i + 1);
    out += ". ";
    out += spec.low_level_criteria[i];
    out += "\n";
  }
  out += "\nHigh-Level Attribute Analysis\nNote: ";
  out += spec.high_level_note;
  out += "\nSpecial rule: ";
  out += spec.special_rule;
  out += "\n";
  for (std::size_t i = 0; i < spec.high_level_criteria.size(); ++i) {
    out += std::to_string(i + 1);
    out += ". ";
    out += spec.high_level_criteria[i];
    out += "\n";
  }
  out += "\nComprehensive Evaluation and Output Format\n";
  out += spec.output_format_text;
  if (tag) {
    std::string hint = spec.hint;
    const std::string placeholder = "{distortion_tags}";
    std::size_t pos;
    while ((pos = hint.find(placeholder)) != std::string::npos)
      hint.replace(pos, placeholder.size(), *tag);
    out += "\n\n";
    out += hint;
  }
  return out;
}

}  // namespace qponder::distill
