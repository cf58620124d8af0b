#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qponder/core.hpp"
#include "qponder/reward.hpp"

namespace qponder::grpo {

enum class BaselineMode { Mean, Max };
enum class LrSchedule { Constant, Cosine };

struct GrpoConfig {
  std::size_t group_size = 8;
  double clip_eps = 0.2;
  double kl_beta = 0.04;
  BaselineMode baseline = BaselineMode::Mean;
  double learning_rate = 0.45;
  LrSchedule schedule = LrSchedule::Cosine;
  // Cosine decays to this fraction of the peak rate instead of zero, so the
  // late phase can still correct a mis-parked score bin.
  double lr_floor_frac = 0.25;
  std::size_t total_steps = 2000;
  double std_floor = 1e-8;

  void validate() const;  // throws std::invalid_argument
};

void to_json(nlohmann::json& j, const GrpoConfig& c);
void from_json(const nlohmann::json& j, GrpoConfig& c);

// Group-normalized advantages. Mean mode: (r - mean)/pop_std. Max mode:
// (r - max)/pop_std. Groups with pop_std below std_floor get all-zero
// advantages; early training is full of degenerate groups.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     BaselineMode baseline, double std_floor);

// Nonnegative divergence estimate r - log r - 1 with
// r = exp(logprob_ref - logprob_new), evaluated in log space. Zero exactly
// when the logprobs agree. Throws std::domain_error on non-finite input or
// result.
double kl_estimate(double logprob_new, double logprob_ref);

// One sampled completion with the log-probabilities the objective needs.
struct RolloutRecord {
  std::vector<int> tokens;
  std::string text;
  double logprob_new = 0.0;
  double logprob_old = 0.0;
  double logprob_ref = 0.0;
  reward::RewardBreakdown reward;
  double advantage = 0.0;
};

struct RolloutGroup {
  std::string query_id;
  std::vector<double> context;
  std::vector<RolloutRecord> outputs;
};

// Sampled completion bundle returned by Policy::sample.
struct Rollout {
  std::vector<int> tokens;
  std::vector<double> slot_logprobs;
  double logprob = 0.0;  // sum of slot logprobs
  std::string text;
};

// Contract for anything trainable by this module: a distribution over
// fixed-structure token sequences with a flat parameter vector and exact
// score-function gradients.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::size_t params_dim() const = 0;
  virtual std::vector<double> params() const = 0;
  virtual void set_params(std::span<const double> p) = 0;

  virtual Rollout sample(std::span<const double> ctx,
                         core::SeededRng& rng) const = 0;
  virtual double logprob(std::span<const double> ctx,
                         std::span<const int> tokens) const = 0;
  virtual std::vector<double> logprob_gradient(
      std::span<const double> ctx, std::span<const int> tokens) const = 0;
  // grad += coeff * d logprob / d params. Default goes through
  // logprob_gradient; implementations may accumulate directly.
  virtual void accumulate_logprob_grad(std::span<const double> ctx,
                                       std::span<const int> tokens,
                                       double coeff,
                                       std::span<double> grad) const;
  virtual std::unique_ptr<Policy> clone() const = 0;
};

// Clipped-surrogate value from the stored logprob_new fields:
// mean_i[ min(ratio*A, clip(ratio)*A) - kl_beta * kl_i ].
double surrogate_objective(const RolloutGroup& g, const GrpoConfig& cfg);

// Same objective with logprob_new recomputed from the policy's current
// parameters; this is the function objective_gradient differentiates.
double surrogate_objective_at(const RolloutGroup& g, const Policy& policy,
                              const GrpoConfig& cfg);

// Exact ascent gradient of surrogate_objective_at with respect to the
// policy parameters. Rollouts clipped outward contribute zero through the
// policy term; the KL penalty contributes -kl_beta*(1 - r) per rollout.
std::vector<double> objective_gradient(const RolloutGroup& g,
                                       const Policy& policy,
                                       const GrpoConfig& cfg);

struct StepStats {
  std::size_t step = 0;
  double mean_r_acc = 0.0;
  double fmt_rate = 0.0;
  double mean_kl = 0.0;
  double objective = 0.0;
  double mean_completion_length = 0.0;
  double lr = 0.0;
};

using TrainingLog = std::vector<StepStats>;

// One JSONL row per step; keys are emitted in a fixed (alphabetical) order
// so identical runs serialize byte-identically.
std::string stats_row_json(const StepStats& s);
StepStats stats_row_parse(const std::string& line);

struct Checkpoint {
  int version = 1;
  std::size_t step = 0;
  std::vector<double> params;
  std::vector<double> ref_params;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;  // informational; streams derive from step
  GrpoConfig grpo;
  reward::RewardConfig reward;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Sequential GRPO driver. Each step draws one query from the dataset,
// samples group_size rollouts from the current policy (old policy = current
// at the moment of sampling), scores them, and ascends the clipped
// surrogate. The reference policy is frozen at the parameters the trainer
// saw at construction (or restored from a checkpoint).
class Trainer {
 public:
  Trainer(Policy& policy, core::Dataset dataset, GrpoConfig grpo_cfg,
          reward::RewardConfig reward_cfg, std::uint64_t seed);

  // Runs one step and returns its stats. Throws std::runtime_error if the
  // parameters stop being finite.
  StepStats step();

  std::size_t completed_steps() const { return completed_; }
  double lr_at(std::size_t step_index) const;  // 1-based
  const core::Dataset& dataset() const { return data_; }
  const GrpoConfig& config() const { return grpo_; }
  const reward::RewardConfig& reward_config() const { return reward_; }
  std::uint64_t seed() const { return seed_; }
  const Policy& reference() const { return *ref_; }

  Checkpoint make_checkpoint() const;
  // Restores params, reference params and step counter. The checkpoint's
  // dimensions must match the policy.
  void restore(const Checkpoint& ck);

 private:
  Policy& policy_;
  std::unique_ptr<Policy> ref_;
  core::Dataset data_;
  GrpoConfig grpo_;
  reward::RewardConfig reward_;
  std::uint64_t seed_;
  std::size_t completed_ = 0;
};

struct TrainResult {
  std::vector<double> final_params;
  TrainingLog log;
};

// Convenience wrapper: runs cfg.total_steps steps from the policy's current
// parameters. on_step (if set) observes every StepStats in order.
TrainResult train(Policy& policy, core::Dataset dataset, GrpoConfig grpo_cfg,
                  reward::RewardConfig reward_cfg, std::uint64_t seed,
                  const std::function<void(const StepStats&)>& on_step = {});

}  // namespace qponder::grpo
