#include "qponder/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "qponder/distill.hpp"

namespace qponder::judge {

namespace {

using nlohmann::json;

void replace_all(std::string& text, std::string_view needle,
                 std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
}

}  // namespace

void JudgePromptSpec::validate() const {
  if (system_text.empty()) throw std::invalid_argument("empty judge system text");
  if (context_template.find("{student_answer}") == std::string::npos)
    throw std::invalid_argument("context template lacks {student_answer}");
  if (context_template.find("{distortion_tag}") == std::string::npos)
    throw std::invalid_argument("context template lacks {distortion_tag}");
  if (task_completeness.empty() || task_accuracy.empty() ||
      task_reasonableness.empty())
    throw std::invalid_argument("judge rubric task is empty");
  for (const char* tag : {"<Completeness>", "<Accuracy>", "<Reasonableness>"}) {
    if (output_format_text.find(tag) == std::string::npos)
      throw std::invalid_argument(std::string("output format lacks ") + tag);
  }
}

JudgePromptSpec load_judge_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j = json::parse(in);
  JudgePromptSpec spec;
  spec.system_text = j.at("system").get<std::string>();
  spec.context_template = j.at("context").get<std::string>();
  const json& tasks = j.at("tasks");
  spec.task_completeness = tasks.at("completeness").get<std::string>();
  spec.task_accuracy = tasks.at("accuracy").get<std::string>();
  spec.task_reasonableness = tasks.at("reasonableness").get<std::string>();
  spec.output_format_text = j.at("output_format").get<std::string>();
  spec.validate();
  return spec;
}

std::string render_user_prompt(const JudgePromptSpec& spec,
                               std::string_view student_answer,
                               std::string_view distortion_tag) {
  std::string context = spec.context_template;
  replace_all(context, "{student_answer}", student_answer);
  replace_all(context, "{distortion_tag}", distortion_tag);
  std::string out;
  out.reserve(context.size() + spec.task_completeness.size() +
              spec.task_accuracy.size() + spec.task_reasonableness.size() +
              spec.output_format_text.size() + 64);
  out += context;
  out += "\n\nTasks:\n1. ";
  out += spec.task_completeness;
  out += "\n2. ";
  out += spec.task_accuracy;
  out += "\n3. ";
  out += spec.task_reasonableness;
  out += "\n\n";
  out += spec.output_format_text;
  return out;
}

std::string render_judge_prompt(const JudgePromptSpec& spec,
                                std::string_view student_answer,
                                std::string_view distortion_tag) {
  return spec.system_text + "\n\n" +
         render_user_prompt(spec, student_answer, distortion_tag);
}

MissingDimension::MissingDimension(const std::string& name)
    : VerdictParseError("verdict is missing <" + name + ">...</" + name +
                        ">") {}

NonIntegerScore::NonIntegerScore(const std::string& name,
                                 const std::string& body)
    : VerdictParseError("verdict <" + name + "> is not an integer: \"" + body +
                        "\"") {}

OutOfBoundsScore::OutOfBoundsScore(const std::string& name, long value,
                                   VerdictBounds bounds)
    : VerdictParseError("verdict <" + name + "> = " + std::to_string(value) +
                        " outside [" + std::to_string(bounds.lo) + ", " +
                        std::to_string(bounds.hi) + "]") {}

namespace {

int extract_dimension(const std::string& text, const std::string& name,
                      VerdictBounds bounds) {
  const std::string open = "<" + name + ">";
  const std::string close = "</" + name + ">";
  const std::size_t at = text.find(open);
  if (at == std::string::npos) throw MissingDimension(name);
  const std::size_t body_at = at + open.size();
  const std::size_t end = text.find(close, body_at);
  if (end == std::string::npos) throw MissingDimension(name);
  const std::string body = text.substr(body_at, end - body_at);

  // First maximal numeric-looking run that contains a digit. Prose such as
  // "score: 4 (good)" is fine; "4.5" is rejected as non-integer.
  std::size_t i = 0;
  while (i < body.size()) {
    const auto numeric = [](char c) {
      return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
    };
    if (!numeric(body[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    bool has_digit = false;
    while (j < body.size() && numeric(body[j])) {
      if (body[j] >= '0' && body[j] <= '9') has_digit = true;
      ++j;
    }
    if (!has_digit) {
      i = j;
      continue;
    }
    const std::string token = body.substr(i, j - i);
    if (token.find('.') != std::string::npos)
      throw NonIntegerScore(name, token);
    long value = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (*first == '+') ++first;  // from_chars rejects a leading plus
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) throw NonIntegerScore(name, token);
    if (value < bounds.lo || value > bounds.hi)
      throw OutOfBoundsScore(name, value, bounds);
    return static_cast<int>(value);
  }
  throw NonIntegerScore(name, body);
}

}  // namespace

JudgeVerdict parse_verdict(const std::string& text, VerdictBounds bounds) {
  if (bounds.lo > bounds.hi) throw std::invalid_argument("inverted bounds");
  JudgeVerdict v;
  v.completeness = extract_dimension(text, "Completeness", bounds);
  v.accuracy = extract_dimension(text, "Accuracy", bounds);
  v.reasonableness = extract_dimension(text, "Reasonableness", bounds);
  v.raw = text;
  return v;
}

void JudgeClientConfig::validate() const {
  if (temperature < 0.0 || !std::isfinite(temperature))
    throw std::invalid_argument("temperature must be finite and >= 0");
  if (timeout_ms <= 0) throw std::invalid_argument("timeout_ms must be > 0");
  if (max_parallel < 1) throw std::invalid_argument("max_parallel must be >= 1");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (base_backoff_ms < 0)
    throw std::invalid_argument("base_backoff_ms must be >= 0");
}

void to_json(json& j, const JudgeClientConfig& c) {
  j = json{{"endpoint", c.endpoint},
           {"model_name", c.model_name},
           {"temperature", c.temperature},
           {"timeout_ms", c.timeout_ms},
           {"max_parallel", c.max_parallel},
           {"max_retries", c.max_retries},
           {"base_backoff_ms", c.base_backoff_ms}};
}

void from_json(const json& j, JudgeClientConfig& c) {
  if (j.contains("endpoint")) j.at("endpoint").get_to(c.endpoint);
  if (j.contains("model_name")) j.at("model_name").get_to(c.model_name);
  if (j.contains("temperature")) j.at("temperature").get_to(c.temperature);
  if (j.contains("timeout_ms")) j.at("timeout_ms").get_to(c.timeout_ms);
  if (j.contains("max_parallel")) j.at("max_parallel").get_to(c.max_parallel);
  if (j.contains("max_retries")) j.at("max_retries").get_to(c.max_retries);
  if (j.contains("base_backoff_ms"))
    j.at("base_backoff_ms").get_to(c.base_backoff_ms);
  c.validate();
}

TransientJudgeError::TransientJudgeError(const std::string& what,
                                         bool connection)
    : std::runtime_error(what), connection_(connection) {}

JudgeUnreachable::JudgeUnreachable()
    : std::runtime_error(
          "judge endpoint unreachable: every request failed at the "
          "connection level") {}

HttpJudgeTransport::HttpJudgeTransport(JudgeClientConfig cfg)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.endpoint.empty())
    throw std::invalid_argument("judge endpoint is empty");
  if (const char* tok = std::getenv("QPONDER_JUDGE_TOKEN")) token_ = tok;
}

std::string HttpJudgeTransport::complete(const std::string& record_id,
                                         const std::string& system_text,
                                         const std::string& user_text) {
  // Split endpoint into origin + path; httplib clients bind to an origin.
  std::string origin = cfg_.endpoint;
  std::string path = "/";
  const std::size_t scheme = origin.find("://");
  const std::size_t slash =
      origin.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash != std::string::npos) {
    path = origin.substr(slash);
    origin.resize(slash);
  }

  httplib::Client client(origin);
  client.set_connection_timeout(0, cfg_.timeout_ms * 1000LL);
  client.set_read_timeout(0, cfg_.timeout_ms * 1000LL);
  client.set_write_timeout(0, cfg_.timeout_ms * 1000LL);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  const json body{{"model", cfg_.model_name},
                  {"messages",
                   json::array({json{{"role", "system"}, {"content", system_text}},
                                json{{"role", "user"}, {"content", user_text}}})},
                  {"temperature", cfg_.temperature}};

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    // Error text stays at transport level; no headers, no token material.
    throw TransientJudgeError(
        "record " + record_id + ": connection failed (" +
            httplib::to_string(res.error()) + ")",
        /*connection=*/true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransientJudgeError(
        "record " + record_id + ": HTTP " + std::to_string(res->status),
        /*connection=*/false);
  }
  if (res->status != 200) {
    throw PermanentJudgeError("record " + record_id + ": HTTP " +
                              std::to_string(res->status));
  }
  const json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded())
    throw PermanentJudgeError("record " + record_id +
                              ": response body is not JSON");
  if (!reply.contains("choices") || !reply["choices"].is_array() ||
      reply["choices"].empty() ||
      !reply["choices"][0].contains("message") ||
      !reply["choices"][0]["message"].contains("content") ||
      !reply["choices"][0]["message"]["content"].is_string()) {
    throw PermanentJudgeError("record " + record_id +
                              ": response lacks choices[0].message.content");
  }
  return reply["choices"][0]["message"]["content"].get<std::string>();
}

StubJudgeTransport::StubJudgeTransport(std::filesystem::path dir)
    : dir_(std::move(dir)) {}

std::string StubJudgeTransport::complete(const std::string& record_id,
                                         const std::string& /*system_text*/,
                                         const std::string& /*user_text*/) {
  const std::filesystem::path file = dir_ / (record_id + ".txt");
  std::ifstream in(file);
  if (!in)
    throw PermanentJudgeError("record " + record_id + ": no stub reply at " +
                              file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

struct RecordOutcome {
  bool ok = false;
  JudgeVerdict verdict;
  RecordFailure failure;
};

RecordOutcome judge_one(const EvalRecord& rec, std::size_t index,
                        const JudgePromptSpec& spec,
                        const JudgeClientConfig& cfg, VerdictBounds bounds,
                        JudgeTransport& transport, std::uint64_t seed) {
  RecordOutcome out;
  core::SeededRng jitter(seed, core::streams::backoff(index));
  std::string tag;
  try {
    core::Sample probe;
    probe.id = rec.id;
    probe.mos = rec.mos;
    probe.distortion_type = rec.distortion_type;
    tag = distill::enrich_tag(probe);
  } catch (const std::exception& e) {
    out.failure = {rec.id, e.what(), false};
    return out;
  }
  const std::string user = render_user_prompt(spec, rec.reasoning, tag);

  for (int attempt = 0;; ++attempt) {
    try {
      const std::string reply = transport.complete(rec.id, spec.system_text, user);
      out.verdict = parse_verdict(reply, bounds);
      out.ok = true;
      return out;
    } catch (const TransientJudgeError& e) {
      if (attempt >= cfg.max_retries) {
        out.failure = {rec.id, e.what(), e.connection_failure()};
        return out;
      }
      const double scale = static_cast<double>(cfg.base_backoff_ms) *
                           static_cast<double>(1u << std::min(attempt, 20));
      const auto wait = std::chrono::duration<double, std::milli>(
          jitter.next_range(0.0, scale));
      std::this_thread::sleep_for(wait);
    } catch (const std::exception& e) {
      out.failure = {rec.id, e.what(), false};
      return out;
    }
  }
}

}  // namespace

AggregateReport evaluate_corpus(const std::vector<EvalRecord>& records,
                                const JudgePromptSpec& spec,
                                const JudgeClientConfig& cfg,
                                VerdictBounds bounds, JudgeTransport& transport,
                                std::uint64_t seed) {
  spec.validate();
  cfg.validate();
  if (bounds.lo > bounds.hi) throw std::invalid_argument("inverted bounds");

  std::vector<RecordOutcome> outcomes(records.size());
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::min<std::size_t>(
      std::max(1, cfg.max_parallel), std::max<std::size_t>(records.size(), 1));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= records.size()) return;
        outcomes[i] =
            judge_one(records[i], i, spec, cfg, bounds, transport, seed);
      }
    });
  }
  for (auto& t : pool) t.join();

  AggregateReport report;
  struct Sums {
    double c = 0, a = 0, r = 0;
    std::size_t n = 0;
  };
  std::map<std::string, Sums> by_dataset;
  Sums pooled;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RecordOutcome& oc = outcomes[i];
    if (!oc.ok) {
      report.failures.push_back(oc.failure);
      continue;
    }
    Sums& s = by_dataset[records[i].dataset];
    s.c += oc.verdict.completeness;
    s.a += oc.verdict.accuracy;
    s.r += oc.verdict.reasonableness;
    s.n += 1;
    pooled.c += oc.verdict.completeness;
    pooled.a += oc.verdict.accuracy;
    pooled.r += oc.verdict.reasonableness;
    pooled.n += 1;
  }
  report.evaluated = pooled.n;
  if (pooled.n == 0) {
    const bool all_connection =
        !report.failures.empty() &&
        std::all_of(report.failures.begin(), report.failures.end(),
                    [](const RecordFailure& f) { return f.connection; });
    if (all_connection) throw JudgeUnreachable();
    return report;
  }

  double macro_sum = 0.0;
  for (const auto& [name, s] : by_dataset) {
    const double n = static_cast<double>(s.n);
    DimMeans m{s.c / n, s.a / n, s.r / n};
    report.per_dataset[name] = m;
    report.per_dataset_count[name] = s.n;
    macro_sum += m.dims_mean();
  }
  const double n = static_cast<double>(pooled.n);
  report.pooled = DimMeans{pooled.c / n, pooled.a / n, pooled.r / n};
  report.pooled_avg = report.pooled->dims_mean();
  report.macro_avg = macro_sum / static_cast<double>(by_dataset.size());
  return report;
}

nlohmann::json report_to_json(const AggregateReport& report) {
  json datasets = json::object();
  for (const auto& [name, m] : report.per_dataset) {
    datasets[name] = {{"completeness", m.completeness},
                      {"accuracy", m.accuracy},
                      {"reasonableness", m.reasonableness},
                      {"avg", m.dims_mean()},
                      {"count", report.per_dataset_count.at(name)}};
  }
  json failures = json::array();
  for (const RecordFailure& f : report.failures) {
    failures.push_back(
        {{"id", f.id}, {"reason", f.reason}, {"connection", f.connection}});
  }
  json j{{"evaluated", report.evaluated},
         {"per_dataset", datasets},
         {"failures", failures}};
  if (report.pooled) {
    j["pooled"] = {{"completeness", report.pooled->completeness},
                   {"accuracy", report.pooled->accuracy},
                   {"reasonableness", report.pooled->reasonableness}};
    // Both aggregation conventions, labeled: "pooled" weights every record
    // equally, "macro" weights every dataset equally.
    j["avg"] = {{"pooled", *report.pooled_avg}, {"macro", *report.macro_avg}};
  }
  return j;
}

}  // namespace qponder::judge
