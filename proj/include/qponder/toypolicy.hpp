#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qponder/core.hpp"
#include "qponder/grpo.hpp"

namespace qponder::toy {

// Sampling support of the four structural slots. Parameters always hold a
// full-vocabulary logit row per structural slot; TagsOnly restricts the
// softmax to the four tag tokens so a format signal is reachable from
// uniform initialization, FullVocab uses every token.
enum class StructuralSupport { TagsOnly, FullVocab };

struct ToyPolicyConfig {
  StructuralSupport support = StructuralSupport::TagsOnly;
  std::size_t context_dim = 8;
  std::size_t num_fillers = 4;
  std::size_t num_bins = 21;  // bin b renders as 100*b/(num_bins-1)

  void validate() const;
};

void to_json(nlohmann::json& j, const ToyPolicyConfig& c);
void from_json(const nlohmann::json& j, ToyPolicyConfig& c);

// Six-slot categorical sequence policy over the template
//   [<think>, filler, </think>, <answer>, score-bin, </answer>].
// Token ids: 0..3 structural tags, 4..4+K-1 fillers, then M score bins.
// Structural and filler slots have free logits; the bin slot's logits are
// affine in the context vector (W: M x d, bias: M). Parameter layout is
// [structural 4xV][filler K][W row-major][bias].
class ToyPolicy final : public grpo::Policy {
 public:
  static constexpr int kThinkOpen = 0;
  static constexpr int kThinkClose = 1;
  static constexpr int kAnswerOpen = 2;
  static constexpr int kAnswerClose = 3;
  static constexpr std::size_t kNumSlots = 6;
  static constexpr std::size_t kNumStructuralSlots = 4;

  explicit ToyPolicy(ToyPolicyConfig cfg = {});

  const ToyPolicyConfig& config() const { return cfg_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  const std::string& token_text(int token_id) const;
  int filler_token(std::size_t f) const;
  int bin_token(std::size_t b) const;
  double bin_score(std::size_t b) const;

  // grpo::Policy
  std::size_t params_dim() const override;
  std::vector<double> params() const override { return params_; }
  void set_params(std::span<const double> p) override;
  grpo::Rollout sample(std::span<const double> ctx,
                       core::SeededRng& rng) const override;
  double logprob(std::span<const double> ctx,
                 std::span<const int> tokens) const override;
  std::vector<double> logprob_gradient(
      std::span<const double> ctx, std::span<const int> tokens) const override;
  void accumulate_logprob_grad(std::span<const double> ctx,
                               std::span<const int> tokens, double coeff,
                               std::span<double> grad) const override;
  std::unique_ptr<grpo::Policy> clone() const override;

  // Deterministic argmax decode (ties to the lowest token id).
  grpo::Rollout greedy(std::span<const double> ctx) const;

  // Pins every structural slot to its template tag via an infinite logit;
  // sampling then always renders a compliant shell.
  void force_structure();

 private:
  struct SlotView;
  SlotView slot_view(std::size_t slot, std::span<const double> ctx) const;

  ToyPolicyConfig cfg_;
  std::vector<std::string> vocab_;
  std::vector<double> params_;
};

struct SyntheticTask {
  std::size_t dim = 0;
  std::vector<double> weight;  // hidden scorer: y = 100*sigmoid(weight . x)
};

// Seeded synthetic regression corpus. Each record's truth score
// 100*sigmoid(weight . ctx) rounds to one of three well-separated bin
// values {20, 50, 80} on the default 21-bin grid; mos = y/100. Contexts are
// the driver coordinate plus dim-1 uniform distractors.
std::pair<core::Dataset, SyntheticTask> make_synthetic(std::size_t n_samples,
                                                       std::size_t dim,
                                                       std::uint64_t seed);

}  // namespace qponder::toy
