#pragma once

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qponder/core.hpp"
#include "qponder/distill.hpp"
#include "qponder/grpo.hpp"
#include "qponder/judge.hpp"
#include "qponder/reward.hpp"
#include "qponder/toypolicy.hpp"

namespace qponder::cli {

struct SyntheticSpec {
  std::size_t count = 50;
  std::size_t dim = 8;

  void validate() const;
};

struct TrainIo {
  std::size_t checkpoint_every = 500;  // 0 keeps only the final checkpoint
};

struct RunPaths {
  std::string dataset;         // input JSONL; empty selects synthetic data
  std::string checkpoint_dir;  // empty defers to --out
  std::string log_dir;         // empty defers to --out
};

// One serializable bundle covering every subcommand; a run is reproducible
// from this plus its input files.
struct RunConfig {
  std::uint64_t seed = 2;
  reward::RewardConfig reward;
  grpo::GrpoConfig grpo;
  distill::FilterRule filter;
  judge::JudgeClientConfig judge;
  toy::ToyPolicyConfig policy;
  SyntheticSpec synthetic;
  TrainIo train;
  RunPaths paths;
  std::string data_dir = QPONDER_DATA_DIR;  // prompt templates live here

  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

// Command-line driver; argv follows main() conventions. Returns the process
// exit code: 0 success, 1 runtime failure, 2 usage or validation error.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

// Test convenience: arguments only, without the program name.
int run_cli(const std::vector<std::string>& args,
            std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace qponder::cli
