#include "qponder/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace qponder::reward {

void to_json(nlohmann::json& j, const RewardConfig& c) {
  j = nlohmann::json{{"alpha", c.alpha},
                     {"lambda_acc", c.lambda_acc},
                     {"lambda_fmt", c.lambda_fmt}};
}

void from_json(const nlohmann::json& j, RewardConfig& c) {
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  if (j.contains("lambda_acc")) c.lambda_acc = j.at("lambda_acc").get<double>();
  if (j.contains("lambda_fmt")) c.lambda_fmt = j.at("lambda_fmt").get<double>();
  c.validate();
}

void RewardConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("reward: alpha must be positive");
  if (!(lambda_acc >= 0.0) || !(lambda_fmt >= 0.0) ||
      !std::isfinite(lambda_acc) || !std::isfinite(lambda_fmt))
    throw std::invalid_argument("reward: lambdas must be nonnegative");
  if (lambda_acc == 0.0 && lambda_fmt == 0.0)
    throw std::invalid_argument("reward: at least one lambda must be positive");
}

double accuracy_reward(double predicted, double truth, double alpha) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("accuracy_reward: alpha must be positive");
  if (!std::isfinite(predicted) || !std::isfinite(truth))
    throw std::invalid_argument("accuracy_reward: non-finite score");
  return std::exp(-std::abs(predicted - truth) / alpha);
}

double format_reward(const tagparse::ParseResult& parsed) {
  return parsed.ok() ? 1.0 : 0.0;
}

RewardBreakdown total_reward(std::string_view raw_text, double truth,
                             const RewardConfig& cfg) {
  cfg.validate();
  const tagparse::ParseResult parsed = tagparse::parse_output(raw_text);
  RewardBreakdown b;
  if (!parsed.ok()) return b;  // all zeros
  b.r_fmt = 1.0;
  b.r_acc = accuracy_reward(parsed.output->score, truth, cfg.alpha);
  b.r_total = cfg.lambda_acc * b.r_acc + cfg.lambda_fmt * b.r_fmt;
  return b;
}

}  // namespace qponder::reward
