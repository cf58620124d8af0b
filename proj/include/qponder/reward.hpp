#pragma once

#include <string_view>

#include "json.hpp"
#include "qponder/tagparse.hpp"

namespace qponder::reward {

struct RewardConfig {
  double alpha = 10.0;       // error tolerance in score points
  double lambda_acc = 2.0;
  double lambda_fmt = 1.0;

  // Throws std::invalid_argument unless alpha > 0, lambdas >= 0 and at
  // least one lambda positive.
  void validate() const;
};

void to_json(nlohmann::json& j, const RewardConfig& c);
void from_json(const nlohmann::json& j, RewardConfig& c);

struct RewardBreakdown {
  double r_acc = 0.0;    // in (0, 1] for compliant outputs, else 0
  double r_fmt = 0.0;    // 0 or 1
  double r_total = 0.0;  // lambda_acc*r_acc + lambda_fmt*r_fmt

  bool operator==(const RewardBreakdown&) const = default;
};

// exp(-|predicted - truth| / alpha). Both scores in [0, 100].
double accuracy_reward(double predicted, double truth, double alpha);

// 1 iff the parse succeeded compliant.
double format_reward(const tagparse::ParseResult& parsed);

// Parses raw_text and scores it against the truth. Non-compliant outputs
// collapse to all-zero rewards: without a valid answer block there is no
// predicted score to rate.
RewardBreakdown total_reward(std::string_view raw_text, double truth,
                             const RewardConfig& cfg);

}  // namespace qponder::reward
