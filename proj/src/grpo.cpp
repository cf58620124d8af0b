#include "qponder/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace qponder::grpo {

using nlohmann::json;

void GrpoConfig::validate() const {
  if (group_size < 2)
    throw std::invalid_argument("grpo: group_size must be at least 2");
  if (!(clip_eps > 0.0))
    throw std::invalid_argument("grpo: clip_eps must be positive");
  if (!(kl_beta >= 0.0))
    throw std::invalid_argument("grpo: kl_beta must be nonnegative");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("grpo: learning_rate must be nonnegative");
  if (!(lr_floor_frac >= 0.0 && lr_floor_frac <= 1.0))
    throw std::invalid_argument("grpo: lr_floor_frac must lie in [0, 1]");
  if (total_steps == 0)
    throw std::invalid_argument("grpo: total_steps must be positive");
  if (!(std_floor > 0.0))
    throw std::invalid_argument("grpo: std_floor must be positive");
}

std::vector<double> group_advantages(std::span<const double> rewards,
                                     BaselineMode baseline, double std_floor) {
  const std::size_t n = rewards.size();
  if (n < 2)
    throw std::invalid_argument("group_advantages: need at least 2 rewards");
  for (double r : rewards)
    if (!std::isfinite(r))
      throw std::invalid_argument("group_advantages: non-finite reward");

  const double mean =
      std::accumulate(rewards.begin(), rewards.end(), 0.0) / double(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std = std::sqrt(var / double(n));

  std::vector<double> adv(n, 0.0);
  if (std < std_floor) return adv;  // degenerate group

  const double base =
      baseline == BaselineMode::Mean
          ? mean
          : *std::max_element(rewards.begin(), rewards.end());
  for (std::size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - base) / std;
  return adv;
}

double kl_estimate(double logprob_new, double logprob_ref) {
  if (!std::isfinite(logprob_new) || !std::isfinite(logprob_ref))
    throw std::domain_error("kl_estimate: non-finite logprob");
  const double t = logprob_ref - logprob_new;  // log r
  // expm1 keeps r - log r - 1 exact near t = 0 where r - 1 cancels.
  const double v = std::expm1(t) - t;
  if (!std::isfinite(v))
    throw std::domain_error("kl_estimate: result overflow at log-ratio " +
                            std::to_string(t));
  return v;
}

namespace {

double clip(double x, double lo, double hi) {
  return std::min(std::max(x, lo), hi);
}

struct PerRollout {
  double policy_term = 0.0;  // min(ratio*A, clip(ratio)*A)
  double kl = 0.0;
  double policy_coeff = 0.0;  // d policy_term / d logprob_new
  double kl_coeff = 0.0;      // d (-beta*kl) / d logprob_new
};

PerRollout rollout_terms(double lp_new, double lp_old, double lp_ref,
                         double advantage, const GrpoConfig& cfg) {
  PerRollout t;
  const double ratio = std::exp(lp_new - lp_old);
  const double unclipped = ratio * advantage;
  const double clipped =
      clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * advantage;
  t.policy_term = std::min(unclipped, clipped);
  // The min picks the unclipped branch on ties, so the gradient follows the
  // unclipped surrogate there; outward-clipped rollouts contribute nothing.
  t.policy_coeff = unclipped <= clipped ? unclipped : 0.0;
  t.kl = kl_estimate(lp_new, lp_ref);
  const double r = std::exp(lp_ref - lp_new);
  t.kl_coeff = -cfg.kl_beta * (1.0 - r);
  return t;
}

}  // namespace

double surrogate_objective(const RolloutGroup& g, const GrpoConfig& cfg) {
  if (g.outputs.empty())
    throw std::invalid_argument("surrogate_objective: empty group");
  double sum = 0.0;
  for (const RolloutRecord& rec : g.outputs) {
    const PerRollout t = rollout_terms(rec.logprob_new, rec.logprob_old,
                                       rec.logprob_ref, rec.advantage, cfg);
    sum += t.policy_term - cfg.kl_beta * t.kl;
  }
  return sum / double(g.outputs.size());
}

double surrogate_objective_at(const RolloutGroup& g, const Policy& policy,
                              const GrpoConfig& cfg) {
  RolloutGroup fresh = g;
  for (RolloutRecord& rec : fresh.outputs)
    rec.logprob_new = policy.logprob(fresh.context, rec.tokens);
  return surrogate_objective(fresh, cfg);
}

std::vector<double> objective_gradient(const RolloutGroup& g,
                                       const Policy& policy,
                                       const GrpoConfig& cfg) {
  if (g.outputs.empty())
    throw std::invalid_argument("objective_gradient: empty group");
  std::vector<double> grad(policy.params_dim(), 0.0);
  const double inv_n = 1.0 / double(g.outputs.size());
  for (const RolloutRecord& rec : g.outputs) {
    const double lp_new = policy.logprob(g.context, rec.tokens);
    const PerRollout t = rollout_terms(lp_new, rec.logprob_old,
                                       rec.logprob_ref, rec.advantage, cfg);
    const double coeff = (t.policy_coeff + t.kl_coeff) * inv_n;
    if (coeff != 0.0)
      policy.accumulate_logprob_grad(g.context, rec.tokens, coeff, grad);
  }
  return grad;
}

void Policy::accumulate_logprob_grad(std::span<const double> ctx,
                                     std::span<const int> tokens, double coeff,
                                     std::span<double> grad) const {
  const std::vector<double> g = logprob_gradient(ctx, tokens);
  if (g.size() != grad.size())
    throw std::invalid_argument("accumulate_logprob_grad: dimension mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += coeff * g[i];
}

std::string stats_row_json(const StepStats& s) {
  json j;
  j["fmt_rate"] = s.fmt_rate;
  j["lr"] = s.lr;
  j["mean_completion_length"] = s.mean_completion_length;
  j["mean_kl"] = s.mean_kl;
  j["mean_r_acc"] = s.mean_r_acc;
  j["objective"] = s.objective;
  j["step"] = s.step;
  return j.dump();
}

StepStats stats_row_parse(const std::string& line) {
  json j = json::parse(line);
  StepStats s;
  s.step = j.at("step").get<std::size_t>();
  s.mean_r_acc = j.at("mean_r_acc").get<double>();
  s.fmt_rate = j.at("fmt_rate").get<double>();
  s.mean_kl = j.at("mean_kl").get<double>();
  s.objective = j.at("objective").get<double>();
  s.mean_completion_length = j.at("mean_completion_length").get<double>();
  s.lr = j.value("lr", 0.0);
  return s;
}

namespace {

std::string baseline_name(BaselineMode m) {
  return m == BaselineMode::Mean ? "mean" : "max";
}

BaselineMode baseline_from(const std::string& s) {
  if (s == "mean") return BaselineMode::Mean;
  if (s == "max") return BaselineMode::Max;
  throw std::invalid_argument("unknown baseline mode: " + s);
}

std::string schedule_name(LrSchedule s) {
  return s == LrSchedule::Constant ? "constant" : "cosine";
}

LrSchedule schedule_from(const std::string& s) {
  if (s == "constant") return LrSchedule::Constant;
  if (s == "cosine") return LrSchedule::Cosine;
  throw std::invalid_argument("unknown lr schedule: " + s);
}

}  // namespace

void to_json(json& j, const GrpoConfig& c) {
  j = json{{"group_size", c.group_size},
           {"clip_eps", c.clip_eps},
           {"kl_beta", c.kl_beta},
           {"baseline", baseline_name(c.baseline)},
           {"learning_rate", c.learning_rate},
           {"schedule", schedule_name(c.schedule)},
           {"lr_floor_frac", c.lr_floor_frac},
           {"total_steps", c.total_steps},
           {"std_floor", c.std_floor}};
}

void from_json(const json& j, GrpoConfig& c) {
  // Partial objects overlay onto the caller's defaults.
  if (j.contains("group_size")) c.group_size = j.at("group_size").get<std::size_t>();
  if (j.contains("clip_eps")) c.clip_eps = j.at("clip_eps").get<double>();
  if (j.contains("kl_beta")) c.kl_beta = j.at("kl_beta").get<double>();
  if (j.contains("baseline"))
    c.baseline = baseline_from(j.at("baseline").get<std::string>());
  if (j.contains("learning_rate"))
    c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("schedule"))
    c.schedule = schedule_from(j.at("schedule").get<std::string>());
  if (j.contains("lr_floor_frac"))
    c.lr_floor_frac = j.at("lr_floor_frac").get<double>();
  if (j.contains("total_steps"))
    c.total_steps = j.at("total_steps").get<std::size_t>();
  if (j.contains("std_floor")) c.std_floor = j.at("std_floor").get<double>();
  c.validate();
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  json j;
  j["version"] = ck.version;
  j["step"] = ck.step;
  j["params"] = ck.params;
  j["ref_params"] = ck.ref_params;
  j["rng"] = {{"seed", ck.seed}, {"stream_id", ck.stream_id}};
  j["config"] = {{"grpo", ck.grpo}, {"reward", ck.reward}};
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open checkpoint: " + path.string());
  json j = json::parse(in);
  Checkpoint ck;
  ck.version = j.at("version").get<int>();
  if (ck.version != 1)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(ck.version));
  ck.step = j.at("step").get<std::size_t>();
  ck.params = j.at("params").get<std::vector<double>>();
  ck.ref_params = j.at("ref_params").get<std::vector<double>>();
  ck.seed = j.at("rng").at("seed").get<std::uint64_t>();
  ck.stream_id = j.at("rng").at("stream_id").get<std::uint64_t>();
  ck.grpo = j.at("config").at("grpo").get<GrpoConfig>();
  ck.reward = j.at("config").at("reward").get<reward::RewardConfig>();
  return ck;
}

Trainer::Trainer(Policy& policy, core::Dataset dataset, GrpoConfig grpo_cfg,
                 reward::RewardConfig reward_cfg, std::uint64_t seed)
    : policy_(policy),
      ref_(policy.clone()),
      data_(std::move(dataset)),
      grpo_(grpo_cfg),
      reward_(reward_cfg),
      seed_(seed) {
  grpo_.validate();
  reward_.validate();
  if (data_.empty()) throw std::invalid_argument("trainer: empty dataset");
}

double Trainer::lr_at(std::size_t step_index) const {
  if (grpo_.schedule == LrSchedule::Constant) return grpo_.learning_rate;
  const double lo = grpo_.learning_rate * grpo_.lr_floor_frac;
  const double phase = std::min(
      1.0, double(step_index - 1) / double(grpo_.total_steps));
  return lo + (grpo_.learning_rate - lo) * 0.5 *
                  (1.0 + std::cos(std::numbers::pi * phase));
}

StepStats Trainer::step() {
  const std::size_t s = completed_ + 1;
  const std::size_t n = grpo_.group_size;

  core::SeededRng qrng(seed_, core::streams::query(s));
  const core::Sample& q = data_.samples[qrng.next_below(data_.size())];
  const double truth = core::rescale_score(q.mos);

  RolloutGroup g;
  g.query_id = q.id;
  g.context = q.context;
  g.outputs.resize(n);

  std::vector<double> totals(n);
  double sum_acc = 0.0, sum_fmt = 0.0, sum_len = 0.0, sum_kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    core::SeededRng rng(seed_, core::streams::rollout(s, n, i));
    Rollout ro = policy_.sample(g.context, rng);
    RolloutRecord& rec = g.outputs[i];
    rec.tokens = std::move(ro.tokens);
    rec.text = std::move(ro.text);
    rec.logprob_old = ro.logprob;
    rec.logprob_new = ro.logprob;  // old policy refreshed every step
    rec.logprob_ref = ref_->logprob(g.context, rec.tokens);
    rec.reward = reward::total_reward(rec.text, truth, reward_);
    totals[i] = rec.reward.r_total;
    sum_acc += rec.reward.r_acc;
    sum_fmt += rec.reward.r_fmt;
    sum_len += double(rec.text.size());
    sum_kl += kl_estimate(rec.logprob_new, rec.logprob_ref);
  }

  const std::vector<double> adv =
      group_advantages(totals, grpo_.baseline, grpo_.std_floor);
  for (std::size_t i = 0; i < n; ++i) g.outputs[i].advantage = adv[i];

  StepStats st;
  st.step = s;
  st.mean_r_acc = sum_acc / double(n);
  st.fmt_rate = sum_fmt / double(n);
  st.mean_kl = sum_kl / double(n);
  st.objective = surrogate_objective(g, grpo_);
  st.mean_completion_length = sum_len / double(n);
  st.lr = lr_at(s);

  const std::vector<double> grad = objective_gradient(g, policy_, grpo_);
  std::vector<double> params = policy_.params();
  for (std::size_t i = 0; i < params.size(); ++i)
    params[i] += st.lr * grad[i];
  for (double p : params)
    if (!std::isfinite(p))
      throw std::runtime_error("training diverged: non-finite parameter at step " +
                               std::to_string(s));
  policy_.set_params(params);

  completed_ = s;
  return st;
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ck;
  ck.step = completed_;
  ck.params = policy_.params();
  ck.ref_params = ref_->params();
  ck.seed = seed_;
  ck.stream_id = core::streams::kReserved;
  ck.grpo = grpo_;
  ck.reward = reward_;
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  if (ck.params.size() != policy_.params_dim() ||
      ck.ref_params.size() != policy_.params_dim())
    throw std::invalid_argument(
        "checkpoint parameter size does not match the policy");
  policy_.set_params(ck.params);
  ref_->set_params(ck.ref_params);
  completed_ = ck.step;
}

TrainResult train(Policy& policy, core::Dataset dataset, GrpoConfig grpo_cfg,
                  reward::RewardConfig reward_cfg, std::uint64_t seed,
                  const std::function<void(const StepStats&)>& on_step) {
  Trainer trainer(policy, std::move(dataset), grpo_cfg, reward_cfg, seed);
  TrainResult res;
  res.log.reserve(grpo_cfg.total_steps);
  for (std::size_t s = 0; s < grpo_cfg.total_steps; ++s) {
    const StepStats st = trainer.step();
    if (on_step) on_step(st);
    res.log.push_back(st);
  }
  res.final_params = policy.params();
  return res;
}

}  // namespace qponder::grpo
