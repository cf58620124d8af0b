#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qponder/core.hpp"

namespace qponder::judge {

struct JudgePromptSpec {
  std::string system_text;
  std::string context_template;  // holds {student_answer} and {distortion_tag}
  std::string task_completeness;
  std::string task_accuracy;
  std::string task_reasonableness;
  std::string output_format_text;  // names the three XML verdict tags

  void validate() const;
};

JudgePromptSpec load_judge_spec(const std::filesystem::path& path);

// The user-role message: context with both placeholders substituted, the
// three rubric tasks, and the output-format section.
std::string render_user_prompt(const JudgePromptSpec& spec,
                               std::string_view student_answer,
                               std::string_view distortion_tag);

// Full prompt (system text + user message), for display and tests.
std::string render_judge_prompt(const JudgePromptSpec& spec,
                                std::string_view student_answer,
                                std::string_view distortion_tag);

struct VerdictBounds {
  int lo = 0;  // strict rubric mode uses 1..5
  int hi = 5;
};

struct JudgeVerdict {
  int completeness = 0;
  int accuracy = 0;
  int reasonableness = 0;
  std::string raw;
};

class VerdictParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingDimension : public VerdictParseError {
 public:
  explicit MissingDimension(const std::string& name);
};

class NonIntegerScore : public VerdictParseError {
 public:
  NonIntegerScore(const std::string& name, const std::string& body);
};

class OutOfBoundsScore : public VerdictParseError {
 public:
  OutOfBoundsScore(const std::string& name, long value, VerdictBounds bounds);
};

// Pulls the first <Completeness>/<Accuracy>/<Reasonableness> integers out of
// the response; prose around the tags is tolerated.
JudgeVerdict parse_verdict(const std::string& text, VerdictBounds bounds = {});

struct JudgeClientConfig {
  std::string endpoint;  // http(s)://host[:port]/path
  std::string model_name = "stub-judge";
  double temperature = 0.0;
  int timeout_ms = 30000;
  int max_parallel = 4;
  int max_retries = 3;
  int base_backoff_ms = 50;

  void validate() const;
};

void to_json(nlohmann::json& j, const JudgeClientConfig& c);
void from_json(const nlohmann::json& j, JudgeClientConfig& c);

// Retryable failure (connection refused, timeout, 429, 5xx).
class TransientJudgeError : public std::runtime_error {
 public:
  TransientJudgeError(const std::string& what, bool connection);
  bool connection_failure() const { return connection_; }

 private:
  bool connection_;
};

// Non-retryable failure (4xx other than 429, malformed response body).
class PermanentJudgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class JudgeUnreachable : public std::runtime_error {
 public:
  JudgeUnreachable();
};

class JudgeTransport {
 public:
  virtual ~JudgeTransport() = default;
  // Returns the judge's raw completion text for one record.
  virtual std::string complete(const std::string& record_id,
                               const std::string& system_text,
                               const std::string& user_text) = 0;
};

// Chat-completion shaped HTTP client: POST {model, messages, temperature},
// answer read from choices[0].message.content. A bearer token is taken from
// the QPONDER_JUDGE_TOKEN environment variable and is never echoed to logs
// or errors.
class HttpJudgeTransport final : public JudgeTransport {
 public:
  explicit HttpJudgeTransport(JudgeClientConfig cfg);
  std::string complete(const std::string& record_id,
                       const std::string& system_text,
                       const std::string& user_text) override;

 private:
  JudgeClientConfig cfg_;
  std::string token_;
};

// Offline stand-in: serves <dir>/<record-id>.txt verbatim.
class StubJudgeTransport final : public JudgeTransport {
 public:
  explicit StubJudgeTransport(std::filesystem::path dir);
  std::string complete(const std::string& record_id,
                       const std::string& system_text,
                       const std::string& user_text) override;

 private:
  std::filesystem::path dir_;
};

struct EvalRecord {
  std::string id;
  std::string dataset = "default";
  double mos = 0.0;
  std::string distortion_type;
  std::string reasoning;
};

struct DimMeans {
  double completeness = 0.0;
  double accuracy = 0.0;
  double reasonableness = 0.0;

  double dims_mean() const {
    return (completeness + accuracy + reasonableness) / 3.0;
  }
};

struct RecordFailure {
  std::string id;
  std::string reason;
  bool connection = false;
};

struct AggregateReport {
  std::map<std::string, DimMeans> per_dataset;
  std::map<std::string, std::size_t> per_dataset_count;
  std::size_t evaluated = 0;
  std::optional<DimMeans> pooled;     // all verdicts weighted equally
  std::optional<double> pooled_avg;   // dims mean of the pooled means
  std::optional<double> macro_avg;    // mean over datasets of their dims means
  std::vector<RecordFailure> failures;
};

// Scores every record against the judge with bounded parallelism and
// exponential-backoff retries on transient failures. Failed records are
// reported, never averaged. Throws JudgeUnreachable only when no record
// succeeded and every failure was connection-class.
AggregateReport evaluate_corpus(const std::vector<EvalRecord>& records,
                                const JudgePromptSpec& spec,
                                const JudgeClientConfig& cfg,
                                VerdictBounds bounds, JudgeTransport& transport,
                                std::uint64_t seed);

nlohmann::json report_to_json(const AggregateReport& report);

}  // namespace qponder::judge
