#include "qponder/cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "qponder/metrics.hpp"
#include "qponder/tagparse.hpp"

namespace qponder::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void SyntheticSpec::validate() const {
  if (count == 0) throw std::invalid_argument("synthetic count must be >= 1");
  if (dim == 0) throw std::invalid_argument("synthetic dim must be >= 1");
}

void RunConfig::validate() const {
  reward.validate();
  grpo.validate();
  filter.validate();
  judge.validate();
  policy.validate();
  synthetic.validate();
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"seed", c.seed},
           {"reward", c.reward},
           {"grpo", c.grpo},
           {"filter", json{{"gamma", c.filter.gamma}, {"tie_break", "by_index"}}},
           {"judge", c.judge},
           {"policy", c.policy},
           {"synthetic", json{{"count", c.synthetic.count}, {"dim", c.synthetic.dim}}},
           {"train", json{{"checkpoint_every", c.train.checkpoint_every}}},
           {"paths", json{{"dataset", c.paths.dataset},
                          {"checkpoint_dir", c.paths.checkpoint_dir},
                          {"log_dir", c.paths.log_dir}}},
           {"data_dir", c.data_dir}};
}

// Overlay semantics: only keys present in the JSON override the caller's
// values, so a partial config file tweaks just what it names.
void from_json(const json& j, RunConfig& c) {
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("reward")) j.at("reward").get_to(c.reward);
  if (j.contains("grpo")) j.at("grpo").get_to(c.grpo);
  if (j.contains("filter")) {
    const json& f = j.at("filter");
    if (f.contains("gamma")) f.at("gamma").get_to(c.filter.gamma);
    if (f.contains("tie_break")) {
      const auto s = f.at("tie_break").get<std::string>();
      if (s != "by_index")
        throw std::invalid_argument("unknown tie_break: " + s);
      c.filter.tie_break = distill::FilterRule::TieBreak::ByIndex;
    }
    c.filter.validate();
  }
  if (j.contains("judge")) j.at("judge").get_to(c.judge);
  if (j.contains("policy")) j.at("policy").get_to(c.policy);
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    if (s.contains("count")) s.at("count").get_to(c.synthetic.count);
    if (s.contains("dim")) s.at("dim").get_to(c.synthetic.dim);
    c.synthetic.validate();
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    if (t.contains("checkpoint_every"))
      t.at("checkpoint_every").get_to(c.train.checkpoint_every);
  }
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    if (p.contains("dataset")) p.at("dataset").get_to(c.paths.dataset);
    if (p.contains("checkpoint_dir"))
      p.at("checkpoint_dir").get_to(c.paths.checkpoint_dir);
    if (p.contains("log_dir")) p.at("log_dir").get_to(c.paths.log_dir);
  }
  if (j.contains("data_dir")) j.at("data_dir").get_to(c.data_dir);
  c.validate();
}

namespace {

// Validation-class failure raised by command bodies; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

RunConfig assemble_config(const std::string& config_path) {
  RunConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open config " + config_path);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
      throw UsageError("config is not valid JSON: " + config_path);
    j.get_to(cfg);
  }
  return cfg;
}

fs::path prepare_out_dir(const std::string& out_dir) {
  fs::path p(out_dir);
  fs::create_directories(p);
  return p;
}

int cmd_filter(RunConfig cfg, const std::string& data_path,
               const fs::path& out_dir, std::ostream& out) {
  const core::Dataset ds = core::ingest_dataset(data_path);
  const distill::QualityReport before = distill::quality_report(ds);
  const core::Dataset refined = distill::filter_refined(ds, cfg.filter);
  const distill::QualityReport after = distill::quality_report(refined);

  std::set<std::string> kept;
  for (const core::Sample& s : refined.samples) kept.insert(s.id);
  json removed = json::array();
  for (const core::Sample& s : ds.samples)
    if (!kept.count(s.id)) removed.push_back(s.id);

  core::write_dataset(refined, out_dir / "refined.jsonl");
  write_json_file(out_dir / "filter_report.json",
                  json{{"before", {{"plcc", before.plcc}, {"srcc", before.srcc}}},
                       {"after", {{"plcc", after.plcc}, {"srcc", after.srcc}}},
                       {"removed_ids", removed},
                       {"total", ds.size()},
                       {"kept", refined.size()}});
  write_json_file(out_dir / "config.json", json(cfg));
  out << "filter: kept " << refined.size() << "/" << ds.size() << ", plcc "
      << fmt_g(before.plcc) << " -> " << fmt_g(after.plcc) << ", srcc "
      << fmt_g(before.srcc) << " -> " << fmt_g(after.srcc) << "\n";
  return 0;
}

int cmd_enrich(const RunConfig& cfg, const std::string& data_path,
               const fs::path& out_dir, std::ostream& out) {
  const core::Dataset ds = core::ingest_dataset(data_path);
  const fs::path tags_path = out_dir / "tags.jsonl";
  std::ofstream tags(tags_path);
  if (!tags) throw std::runtime_error("cannot write " + tags_path.string());
  for (const core::Sample& s : ds.samples) {
    const std::string tag = distill::enrich_tag(s);
    const json row{
        {"id", s.id},
        {"severity", std::string(distill::severity_name(distill::severity_of(s.mos)))},
        {"distortion_tag", tag}};
    tags << row.dump() << '\n';
  }
  write_json_file(out_dir / "config.json", json(cfg));
  out << "enrich: wrote " << ds.size() << " tags to " << tags_path.string()
      << "\n";
  return 0;
}

int cmd_distill_prompts(const RunConfig& cfg, const std::string& data_path,
                        const std::string& template_path,
                        const fs::path& out_dir, std::ostream& out) {
  const fs::path tmpl = template_path.empty()
                            ? fs::path(cfg.data_dir) / "distill_prompt.json"
                            : fs::path(template_path);
  const distill::DistillPromptSpec spec = distill::load_prompt_spec(tmpl);
  const core::Dataset ds = core::ingest_dataset(data_path);
  const fs::path prompts_path = out_dir / "prompts.jsonl";
  std::ofstream prompts(prompts_path);
  if (!prompts)
    throw std::runtime_error("cannot write " + prompts_path.string());
  std::size_t hinted = 0;
  for (const core::Sample& s : ds.samples) {
    std::optional<std::string> tag;
    if (s.distortion_type) {
      tag = distill::enrich_tag(s);
      ++hinted;
    }
    const std::string prompt = distill::render_distill_prompt(
        spec, tag ? std::optional<std::string_view>(*tag) : std::nullopt);
    prompts << json{{"id", s.id}, {"prompt", prompt}}.dump() << '\n';
  }
  write_json_file(out_dir / "config.json", json(cfg));
  out << "distill-prompts: wrote " << ds.size() << " prompts (" << hinted
      << " with severity hints)\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string resume;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<double> lr;
  std::optional<std::size_t> group_size;
  std::optional<std::size_t> checkpoint_every;
};

std::size_t shared_context_dim(const core::Dataset& ds) {
  const std::size_t dim = ds.samples.front().context.size();
  for (const core::Sample& s : ds.samples) {
    if (s.context.size() != dim || dim == 0)
      throw UsageError("record " + s.id +
                       ": training needs a ctx vector of one shared nonzero "
                       "length on every record");
  }
  return dim;
}

int cmd_train(RunConfig cfg, const TrainArgs& args, const fs::path& out_dir,
              std::ostream& out) {
  std::optional<grpo::Checkpoint> ck;
  if (!args.resume.empty()) {
    ck = grpo::load_checkpoint(args.resume);
    // The checkpoint's run settings carry forward; explicit flags still win.
    cfg.grpo = ck->grpo;
    cfg.reward = ck->reward;
    cfg.seed = ck->seed;
  }
  if (args.seed) cfg.seed = *args.seed;
  if (args.steps) cfg.grpo.total_steps = *args.steps;
  if (args.lr) cfg.grpo.learning_rate = *args.lr;
  if (args.group_size) cfg.grpo.group_size = *args.group_size;
  if (args.checkpoint_every) cfg.train.checkpoint_every = *args.checkpoint_every;
  cfg.grpo.validate();
  cfg.reward.validate();

  core::Dataset ds;
  const fs::path ds_path = out_dir / "dataset.jsonl";
  if (!args.data.empty()) {
    ds = core::ingest_dataset(args.data);
  } else if (!cfg.paths.dataset.empty()) {
    ds = core::ingest_dataset(cfg.paths.dataset);
  } else if (ck && fs::exists(ds_path)) {
    ds = core::ingest_dataset(ds_path);
  } else {
    ds = toy::make_synthetic(cfg.synthetic.count, cfg.synthetic.dim, cfg.seed)
             .first;
  }
  if (ds.empty()) throw UsageError("training dataset is empty");
  cfg.policy.context_dim = shared_context_dim(ds);
  cfg.policy.validate();

  write_json_file(out_dir / "config.json", json(cfg));
  core::write_dataset(ds, ds_path);

  toy::ToyPolicy policy(cfg.policy);
  grpo::Trainer trainer(policy, ds, cfg.grpo, cfg.reward, cfg.seed);
  if (ck) trainer.restore(*ck);

  const std::size_t total = cfg.grpo.total_steps;
  if (trainer.completed_steps() >= total) {
    out << "train: checkpoint is already at step " << trainer.completed_steps()
        << ", nothing to do\n";
    return 0;
  }

  const fs::path log_path = out_dir / "training_log.jsonl";
  std::ofstream log(log_path, ck ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());

  const std::size_t every = cfg.train.checkpoint_every;
  const std::size_t progress = std::max<std::size_t>(1, total / 10);
  while (trainer.completed_steps() < total) {
    const grpo::StepStats s = trainer.step();
    log << grpo::stats_row_json(s) << '\n';
    if (every != 0 && s.step % every == 0 && s.step != total) {
      grpo::save_checkpoint(
          trainer.make_checkpoint(),
          out_dir / ("checkpoint_step" + std::to_string(s.step) + ".json"));
      log.flush();
    }
    if (s.step % progress == 0 || s.step == total) {
      out << "step " << s.step << "  acc " << fmt_g(s.mean_r_acc) << "  fmt "
          << fmt_g(s.fmt_rate) << "  kl " << fmt_g(s.mean_kl) << "  obj "
          << fmt_g(s.objective) << "\n";
    }
  }
  grpo::save_checkpoint(trainer.make_checkpoint(),
                        out_dir / "checkpoint_final.json");
  out << "train: finished at step " << trainer.completed_steps() << ", log "
      << log_path.string() << "\n";
  return 0;
}

struct EvalScoresArgs {
  std::string pred;
  std::string truth;
  std::string checkpoint;
  std::string data;
};

int eval_scores_from_files(const RunConfig& cfg, const EvalScoresArgs& args,
                           const fs::path& out_dir, std::ostream& out) {
  std::ifstream in(args.pred);
  if (!in) throw UsageError("cannot open predictions " + args.pred);
  std::map<std::string, double> preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw core::MalformedRecord(line_no, "prediction row is not a JSON object");
    if (!j.contains("id") || !j.at("id").is_string() || !j.contains("predicted") ||
        !j.at("predicted").is_number())
      throw core::MalformedRecord(line_no,
                                  "prediction row needs {\"id\", \"predicted\"}");
    const std::string id = j.at("id").get<std::string>();
    const double v = j.at("predicted").get<double>();
    if (!std::isfinite(v))
      throw core::MalformedRecord(line_no, "predicted score is not finite");
    if (!preds.emplace(id, v).second) throw core::DuplicateId(id);
  }
  const core::Dataset truth = core::ingest_dataset(args.truth);

  std::vector<std::string> missing, extra;
  std::set<std::string> truth_ids;
  for (const core::Sample& s : truth.samples) {
    truth_ids.insert(s.id);
    if (!preds.count(s.id)) missing.push_back(s.id);
  }
  for (const auto& [id, v] : preds)
    if (!truth_ids.count(id)) extra.push_back(id);
  if (!missing.empty() || !extra.empty()) {
    std::ostringstream msg;
    msg << "prediction and truth id sets differ;";
    if (!missing.empty()) {
      msg << " missing predictions for:";
      for (const std::string& id : missing) msg << ' ' << id;
      msg << ';';
    }
    if (!extra.empty()) {
      msg << " predictions without truth:";
      for (const std::string& id : extra) msg << ' ' << id;
    }
    throw UsageError(msg.str());
  }

  std::vector<double> x, y;
  x.reserve(truth.size());
  y.reserve(truth.size());
  for (const core::Sample& s : truth.samples) {
    x.push_back(preds.at(s.id));
    y.push_back(core::rescale_score(s.mos));
  }
  const double plcc = metrics::plcc(x, y);
  const double srcc = metrics::srcc(x, y);
  write_json_file(out_dir / "score_report.json",
                  json{{"plcc", plcc}, {"srcc", srcc}, {"count", truth.size()}});
  write_json_file(out_dir / "config.json", json(cfg));
  out << "plcc=" << fmt_g(plcc) << " srcc=" << fmt_g(srcc) << " n="
      << truth.size() << "\n";
  return 0;
}

int eval_scores_from_checkpoint(RunConfig cfg, const EvalScoresArgs& args,
                                const fs::path& out_dir, std::ostream& out) {
  const core::Dataset ds = core::ingest_dataset(args.data);
  if (ds.empty()) throw UsageError("evaluation dataset is empty");
  const grpo::Checkpoint ck = grpo::load_checkpoint(args.checkpoint);
  cfg.policy.context_dim = shared_context_dim(ds);
  cfg.policy.validate();
  toy::ToyPolicy policy(cfg.policy);
  policy.set_params(ck.params);

  const fs::path preds_path = out_dir / "predictions.jsonl";
  std::ofstream preds(preds_path);
  if (!preds) throw std::runtime_error("cannot write " + preds_path.string());
  std::vector<double> x, y;
  json excluded = json::array();
  std::size_t compliant = 0;
  for (const core::Sample& s : ds.samples) {
    const grpo::Rollout ro = policy.greedy(s.context);
    const tagparse::ParseResult parsed = tagparse::parse_output(ro.text);
    json row{{"id", s.id}, {"compliant", parsed.ok()}};
    if (parsed.ok()) {
      ++compliant;
      row["predicted"] = parsed.output->score;
      x.push_back(parsed.output->score);
      y.push_back(core::rescale_score(s.mos));
    } else {
      row["predicted"] = nullptr;
      excluded.push_back(s.id);
    }
    preds << row.dump() << '\n';
  }
  const double fmt_rate =
      static_cast<double>(compliant) / static_cast<double>(ds.size());

  json report{{"fmt_rate", fmt_rate},
              {"evaluated", compliant},
              {"total", ds.size()},
              {"excluded", excluded},
              {"plcc", nullptr},
              {"srcc", nullptr}};
  std::string corr = "undefined (degenerate or too few compliant outputs)";
  if (x.size() >= 2) {
    try {
      const double plcc = metrics::plcc(x, y);
      const double srcc = metrics::srcc(x, y);
      report["plcc"] = plcc;
      report["srcc"] = srcc;
      corr = "plcc=" + fmt_g(plcc) + " srcc=" + fmt_g(srcc);
    } catch (const metrics::DegenerateVariance&) {
    }
  }
  write_json_file(out_dir / "score_report.json", report);
  write_json_file(out_dir / "config.json", json(cfg));
  out << "eval-scores: fmt_rate=" << fmt_g(fmt_rate) << " " << corr << " n="
      << ds.size() << "\n";
  return 0;
}

std::vector<judge::EvalRecord> load_eval_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open records " + path);
  std::vector<judge::EvalRecord> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw core::MalformedRecord(line_no, "record is not a JSON object");
    for (const char* key : {"id", "distortion_type", "mos", "reasoning"})
      if (!j.contains(key))
        throw core::MalformedRecord(line_no,
                                    std::string("missing key \"") + key + '"');
    judge::EvalRecord r;
    r.id = j.at("id").get<std::string>();
    if (r.id.empty()) throw core::MalformedRecord(line_no, "empty id");
    if (!seen.insert(r.id).second) throw core::DuplicateId(r.id);
    r.distortion_type = j.at("distortion_type").get<std::string>();
    if (!j.at("mos").is_number())
      throw core::MalformedRecord(line_no, "mos is not a number");
    r.mos = j.at("mos").get<double>();
    if (!std::isfinite(r.mos) || r.mos < 0.0 || r.mos > 1.0)
      throw core::MosOutOfRange(r.id, r.mos);
    r.reasoning = j.at("reasoning").get<std::string>();
    if (j.contains("dataset")) r.dataset = j.at("dataset").get<std::string>();
    records.push_back(std::move(r));
  }
  return records;
}

judge::VerdictBounds parse_bounds(const std::string& s) {
  if (s == "0-5") return {0, 5};
  if (s == "1-5") return {1, 5};
  throw UsageError("--bounds must be 0-5 or 1-5, got " + s);
}

struct EvalReasoningArgs {
  std::string data;
  std::string endpoint;
  std::string model;
  std::string bounds = "0-5";
  std::string stub_dir;
};

int cmd_eval_reasoning(RunConfig cfg, const EvalReasoningArgs& args,
                       const fs::path& out_dir, std::ostream& out) {
  const std::vector<judge::EvalRecord> records = load_eval_records(args.data);
  const judge::VerdictBounds bounds = parse_bounds(args.bounds);
  if (!args.endpoint.empty()) cfg.judge.endpoint = args.endpoint;
  if (!args.model.empty()) cfg.judge.model_name = args.model;

  std::unique_ptr<judge::JudgeTransport> transport;
  if (!args.stub_dir.empty()) {
    if (!fs::is_directory(args.stub_dir))
      throw UsageError("--stub-dir is not a directory: " + args.stub_dir);
    transport = std::make_unique<judge::StubJudgeTransport>(args.stub_dir);
  } else if (!cfg.judge.endpoint.empty()) {
    transport = std::make_unique<judge::HttpJudgeTransport>(cfg.judge);
  } else {
    throw UsageError("eval-reasoning needs --endpoint or --stub-dir");
  }

  const judge::JudgePromptSpec spec =
      judge::load_judge_spec(fs::path(cfg.data_dir) / "judge_prompt.json");
  const judge::AggregateReport report = judge::evaluate_corpus(
      records, spec, cfg.judge, bounds, *transport, cfg.seed);

  write_json_file(out_dir / "reasoning_report.json",
                  judge::report_to_json(report));
  write_json_file(out_dir / "config.json", json(cfg));
  out << "eval-reasoning: evaluated " << report.evaluated << "/"
      << records.size();
  if (report.pooled_avg)
    out << ", avg pooled " << fmt_g(*report.pooled_avg) << ", avg macro "
        << fmt_g(*report.macro_avg);
  out << ", failures " << report.failures.size() << "\n";
  return 0;
}

int cmd_report(const RunConfig& cfg, const std::string& log_path,
               const std::string& csv_arg, const fs::path& out_dir,
               std::ostream& out) {
  std::ifstream log(log_path);
  if (!log) throw UsageError("cannot open training log " + log_path);
  const fs::path csv_path =
      csv_arg.empty() ? out_dir / "training_report.csv" : fs::path(csv_arg);
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  csv << "step,mean_r_acc,fmt_rate,mean_kl,objective,mean_completion_length\n";
  std::string line;
  std::size_t rows = 0;
  while (std::getline(log, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const grpo::StepStats s = grpo::stats_row_parse(line);
    csv << s.step << ',' << fmt_g(s.mean_r_acc) << ',' << fmt_g(s.fmt_rate)
        << ',' << fmt_g(s.mean_kl) << ',' << fmt_g(s.objective) << ','
        << fmt_g(s.mean_completion_length) << '\n';
    ++rows;
  }
  write_json_file(out_dir / "config.json", json(cfg));
  out << "report: wrote " << rows << " rows to " << csv_path.string() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"reasoning-first image quality pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  auto* opt_seed = app.add_option("--seed", seed, "base RNG seed");
  app.add_option("--config", config_path, "JSON run configuration file");
  app.add_option("--out", out_dir, "output directory (created if absent)");

  const auto seed_flag = [&]() -> std::optional<std::uint64_t> {
    if (opt_seed->count() > 0) return seed;
    return std::nullopt;
  };
  const auto base_config = [&]() {
    RunConfig cfg = assemble_config(config_path);
    if (const auto s = seed_flag()) cfg.seed = *s;
    return cfg;
  };

  int rc = 0;

  // filter
  std::string filter_data;
  double gamma = 0.0;
  CLI::App* sub_filter =
      app.add_subcommand("filter", "drop noisy reasoning samples by score error");
  sub_filter->fallthrough();
  sub_filter->add_option("--data", filter_data, "dataset JSONL with predicted_score")
      ->required();
  auto* opt_gamma =
      sub_filter->add_option("--gamma", gamma, "retained fraction in (0, 1)");
  sub_filter->callback([&] {
    RunConfig cfg = base_config();
    if (opt_gamma->count() > 0) {
      cfg.filter.gamma = gamma;
      cfg.filter.validate();
    }
    rc = cmd_filter(std::move(cfg), filter_data, prepare_out_dir(out_dir), out);
  });

  // enrich
  std::string enrich_data;
  CLI::App* sub_enrich =
      app.add_subcommand("enrich", "derive severity-qualified distortion tags");
  sub_enrich->fallthrough();
  sub_enrich->add_option("--data", enrich_data, "dataset JSONL with distortion_type")
      ->required();
  sub_enrich->callback([&] {
    rc = cmd_enrich(base_config(), enrich_data, prepare_out_dir(out_dir), out);
  });

  // distill-prompts
  std::string distill_data, distill_template;
  CLI::App* sub_distill = app.add_subcommand(
      "distill-prompts", "render teacher prompts for every record");
  sub_distill->fallthrough();
  sub_distill->add_option("--data", distill_data, "dataset JSONL")->required();
  sub_distill->add_option("--template", distill_template,
                          "prompt template JSON (default from data_dir)");
  sub_distill->callback([&] {
    rc = cmd_distill_prompts(base_config(), distill_data, distill_template,
                             prepare_out_dir(out_dir), out);
  });

  // train
  TrainArgs train_args;
  std::size_t train_steps = 0, train_group = 0, train_ck_every = 0;
  double train_lr = 0.0;
  CLI::App* sub_train =
      app.add_subcommand("train", "run policy optimization on the toy policy");
  sub_train->fallthrough();
  sub_train->add_option("--data", train_args.data,
                        "dataset JSONL (default: synthetic from config)");
  sub_train->add_option("--resume", train_args.resume,
                        "checkpoint JSON to continue from");
  auto* opt_steps =
      sub_train->add_option("--steps", train_steps, "total training steps");
  auto* opt_lr = sub_train->add_option("--lr", train_lr, "learning rate");
  auto* opt_group =
      sub_train->add_option("--group-size", train_group, "rollouts per step");
  auto* opt_ck_every = sub_train->add_option(
      "--checkpoint-every", train_ck_every, "periodic checkpoint interval");
  sub_train->callback([&] {
    if (opt_steps->count() > 0) train_args.steps = train_steps;
    if (opt_lr->count() > 0) train_args.lr = train_lr;
    if (opt_group->count() > 0) train_args.group_size = train_group;
    if (opt_ck_every->count() > 0) train_args.checkpoint_every = train_ck_every;
    train_args.seed = seed_flag();
    rc = cmd_train(assemble_config(config_path), train_args,
                   prepare_out_dir(out_dir), out);
  });

  // eval-scores
  EvalScoresArgs es;
  CLI::App* sub_scores = app.add_subcommand(
      "eval-scores", "correlate predicted scores against ground truth");
  sub_scores->fallthrough();
  sub_scores->add_option("--pred", es.pred, "predictions JSONL {id, predicted}");
  sub_scores->add_option("--truth", es.truth, "ground-truth dataset JSONL");
  sub_scores->add_option("--checkpoint", es.checkpoint,
                         "policy checkpoint to decode greedily");
  sub_scores->add_option("--data", es.data, "dataset JSONL to decode");
  sub_scores->callback([&] {
    const bool file_mode = !es.pred.empty() || !es.truth.empty();
    const bool ck_mode = !es.checkpoint.empty() || !es.data.empty();
    if (file_mode == ck_mode)
      throw UsageError(
          "eval-scores needs either --pred with --truth, or --checkpoint "
          "with --data");
    if (file_mode && (es.pred.empty() || es.truth.empty()))
      throw UsageError("eval-scores file mode needs both --pred and --truth");
    if (ck_mode && (es.checkpoint.empty() || es.data.empty()))
      throw UsageError(
          "eval-scores checkpoint mode needs both --checkpoint and --data");
    rc = file_mode ? eval_scores_from_files(base_config(), es,
                                            prepare_out_dir(out_dir), out)
                   : eval_scores_from_checkpoint(base_config(), es,
                                                 prepare_out_dir(out_dir), out);
  });

  // eval-reasoning
  EvalReasoningArgs er;
  CLI::App* sub_reason = app.add_subcommand(
      "eval-reasoning", "grade reasoning descriptions with a judge");
  sub_reason->fallthrough();
  sub_reason->add_option("--data", er.data,
                         "records JSONL {id, distortion_type, mos, reasoning}")
      ->required();
  sub_reason->add_option("--endpoint", er.endpoint, "judge HTTP endpoint");
  sub_reason->add_option("--model", er.model, "judge model name");
  sub_reason->add_option("--bounds", er.bounds, "verdict bounds: 0-5 or 1-5");
  sub_reason->add_option("--stub-dir", er.stub_dir,
                         "directory of canned <id>.txt replies");
  sub_reason->callback([&] {
    rc = cmd_eval_reasoning(base_config(), er, prepare_out_dir(out_dir), out);
  });

  // report
  std::string report_log, report_csv;
  CLI::App* sub_report =
      app.add_subcommand("report", "convert a training log to CSV");
  sub_report->fallthrough();
  sub_report->add_option("--log", report_log, "training log JSONL")->required();
  sub_report->add_option("--csv", report_csv,
                         "CSV destination (default <out>/training_report.csv)");
  sub_report->callback([&] {
    rc = cmd_report(base_config(), report_log, report_csv,
                    prepare_out_dir(out_dir), out);
  });

  try {
    app.parse(argc, argv);
    return rc;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const core::IngestError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const distill::MissingPrediction& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const distill::MissingDistortionType& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const distill::EmptyDataset& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const metrics::DegenerateVariance& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("qponder");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace qponder::cli
