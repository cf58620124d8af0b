#include "qponder/toypolicy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "qponder/tagparse.hpp"

namespace qponder::toy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Snippets the filler slot can place inside the think block; lengths differ
// on purpose so the completion-length series carries signal.
const std::vector<std::string> kFillerText = {
    "overall sharp",
    "fine detail preserved across the frame",
    "noticeable compression artifacts degrade texture",
    "heavy blur and noise dominate every region of the image",
};

// slot index in the template -> structural row, for slots 0, 2, 3, 5
constexpr int kStructuralRowOf[ToyPolicy::kNumSlots] = {0, -1, 1, 2, -1, 3};

// The tag expected at structural row r happens to be token id r.
constexpr int expected_tag(int row) { return row; }

std::string format_bin(double score) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", score);
  return buf;
}

}  // namespace

void ToyPolicyConfig::validate() const {
  if (context_dim == 0)
    throw std::invalid_argument("toy policy: context_dim must be positive");
  if (num_fillers == 0 || num_fillers > kFillerText.size())
    throw std::invalid_argument("toy policy: num_fillers out of range");
  if (num_bins < 2)
    throw std::invalid_argument("toy policy: need at least 2 bins");
}

void to_json(nlohmann::json& j, const ToyPolicyConfig& c) {
  j = nlohmann::json{
      {"structural_support",
       c.support == StructuralSupport::TagsOnly ? "tags_only" : "full_vocab"},
      {"context_dim", c.context_dim},
      {"num_fillers", c.num_fillers},
      {"num_bins", c.num_bins}};
}

void from_json(const nlohmann::json& j, ToyPolicyConfig& c) {
  if (j.contains("structural_support")) {
    const auto s = j.at("structural_support").get<std::string>();
    if (s == "tags_only")
      c.support = StructuralSupport::TagsOnly;
    else if (s == "full_vocab")
      c.support = StructuralSupport::FullVocab;
    else
      throw std::invalid_argument("unknown structural_support: " + s);
  }
  if (j.contains("context_dim"))
    c.context_dim = j.at("context_dim").get<std::size_t>();
  if (j.contains("num_fillers"))
    c.num_fillers = j.at("num_fillers").get<std::size_t>();
  if (j.contains("num_bins")) c.num_bins = j.at("num_bins").get<std::size_t>();
  c.validate();
}

ToyPolicy::ToyPolicy(ToyPolicyConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  vocab_.reserve(4 + cfg_.num_fillers + cfg_.num_bins);
  vocab_.emplace_back(tagparse::kThinkOpen);
  vocab_.emplace_back(tagparse::kThinkClose);
  vocab_.emplace_back(tagparse::kAnswerOpen);
  vocab_.emplace_back(tagparse::kAnswerClose);
  for (std::size_t f = 0; f < cfg_.num_fillers; ++f)
    vocab_.push_back(kFillerText[f]);
  for (std::size_t b = 0; b < cfg_.num_bins; ++b)
    vocab_.push_back(format_bin(bin_score(b)));
  params_.assign(params_dim(), 0.0);  // uniform over every slot's support
}

const std::string& ToyPolicy::token_text(int token_id) const {
  if (token_id < 0 || std::size_t(token_id) >= vocab_.size())
    throw std::invalid_argument("token id out of range");
  return vocab_[std::size_t(token_id)];
}

int ToyPolicy::filler_token(std::size_t f) const {
  if (f >= cfg_.num_fillers)
    throw std::invalid_argument("filler index out of range");
  return int(4 + f);
}

int ToyPolicy::bin_token(std::size_t b) const {
  if (b >= cfg_.num_bins) throw std::invalid_argument("bin index out of range");
  return int(4 + cfg_.num_fillers + b);
}

double ToyPolicy::bin_score(std::size_t b) const {
  if (b >= cfg_.num_bins) throw std::invalid_argument("bin index out of range");
  return 100.0 * double(b) / double(cfg_.num_bins - 1);
}

std::size_t ToyPolicy::params_dim() const {
  const std::size_t v = 4 + cfg_.num_fillers + cfg_.num_bins;
  return kNumStructuralSlots * v + cfg_.num_fillers +
         cfg_.num_bins * cfg_.context_dim + cfg_.num_bins;
}

void ToyPolicy::set_params(std::span<const double> p) {
  if (p.size() != params_dim())
    throw std::invalid_argument("set_params: wrong parameter count");
  params_.assign(p.begin(), p.end());
}

// A slot's distribution: token ids [first, first+count) with logits either
// read from params at `logit_base` (stride 1) or computed affine from ctx.
struct ToyPolicy::SlotView {
  int first_token = 0;
  std::size_t count = 0;
  std::vector<double> probs;
  std::size_t param_base = 0;  // structural/filler: logit row start
  bool affine = false;         // bin slot: gradient flows into W and bias
};

ToyPolicy::SlotView ToyPolicy::slot_view(std::size_t slot,
                                         std::span<const double> ctx) const {
  if (ctx.size() != cfg_.context_dim)
    throw std::invalid_argument("context dimension mismatch");
  const std::size_t v = vocab_.size();
  SlotView view;
  std::vector<double> logits;

  if (slot == 1) {  // filler
    view.first_token = 4;
    view.count = cfg_.num_fillers;
    view.param_base = kNumStructuralSlots * v;
    logits.assign(params_.begin() + long(view.param_base),
                  params_.begin() + long(view.param_base + view.count));
  } else if (slot == 4) {  // score bin, affine in ctx
    view.first_token = int(4 + cfg_.num_fillers);
    view.count = cfg_.num_bins;
    view.param_base = kNumStructuralSlots * v + cfg_.num_fillers;
    view.affine = true;
    logits.resize(view.count);
    const std::size_t w0 = view.param_base;
    const std::size_t b0 = w0 + cfg_.num_bins * cfg_.context_dim;
    for (std::size_t b = 0; b < view.count; ++b) {
      double z = params_[b0 + b];
      for (std::size_t j = 0; j < cfg_.context_dim; ++j)
        z += params_[w0 + b * cfg_.context_dim + j] * ctx[j];
      logits[b] = z;
    }
  } else {  // structural
    const int row = kStructuralRowOf[slot];
    view.param_base = std::size_t(row) * v;
    if (cfg_.support == StructuralSupport::TagsOnly) {
      view.first_token = 0;
      view.count = 4;
    } else {
      view.first_token = 0;
      view.count = v;
    }
    logits.assign(params_.begin() + long(view.param_base),
                  params_.begin() + long(view.param_base + view.count));
  }

  // softmax; an infinite logit concentrates all mass on its ties
  const double mx = *std::max_element(logits.begin(), logits.end());
  view.probs.assign(view.count, 0.0);
  if (mx == kInf) {
    std::size_t ties = 0;
    for (double l : logits) ties += l == kInf ? 1 : 0;
    for (std::size_t i = 0; i < view.count; ++i)
      if (logits[i] == kInf) view.probs[i] = 1.0 / double(ties);
  } else {
    double sum = 0.0;
    for (std::size_t i = 0; i < view.count; ++i) {
      view.probs[i] = std::exp(logits[i] - mx);
      sum += view.probs[i];
    }
    for (double& p : view.probs) p /= sum;
  }
  return view;
}

grpo::Rollout ToyPolicy::sample(std::span<const double> ctx,
                                core::SeededRng& rng) const {
  grpo::Rollout ro;
  ro.tokens.reserve(kNumSlots);
  ro.slot_logprobs.reserve(kNumSlots);
  for (std::size_t slot = 0; slot < kNumSlots; ++slot) {
    const SlotView view = slot_view(slot, ctx);
    const double u = rng.next_double();
    double acc = 0.0;
    std::size_t pick = view.count - 1;  // guards the cumulative rounding tail
    for (std::size_t i = 0; i < view.count; ++i) {
      acc += view.probs[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    const double lp = std::log(view.probs[pick]);
    ro.tokens.push_back(view.first_token + int(pick));
    ro.slot_logprobs.push_back(lp);
    ro.logprob += lp;
    ro.text += vocab_[std::size_t(view.first_token) + pick];
  }
  return ro;
}

grpo::Rollout ToyPolicy::greedy(std::span<const double> ctx) const {
  grpo::Rollout ro;
  for (std::size_t slot = 0; slot < kNumSlots; ++slot) {
    const SlotView view = slot_view(slot, ctx);
    std::size_t pick = 0;
    for (std::size_t i = 1; i < view.count; ++i)
      if (view.probs[i] > view.probs[pick]) pick = i;
    const double lp = std::log(view.probs[pick]);
    ro.tokens.push_back(view.first_token + int(pick));
    ro.slot_logprobs.push_back(lp);
    ro.logprob += lp;
    ro.text += vocab_[std::size_t(view.first_token) + pick];
  }
  return ro;
}

namespace {

std::size_t slot_pick_index(int token, int first, std::size_t count) {
  const int off = token - first;
  if (off < 0 || std::size_t(off) >= count)
    throw std::invalid_argument("token does not fit the slot template");
  return std::size_t(off);
}

}  // namespace

double ToyPolicy::logprob(std::span<const double> ctx,
                          std::span<const int> tokens) const {
  if (tokens.size() != kNumSlots)
    throw std::invalid_argument("expected a 6-token template");
  double lp = 0.0;
  for (std::size_t slot = 0; slot < kNumSlots; ++slot) {
    const SlotView view = slot_view(slot, ctx);
    const std::size_t i =
        slot_pick_index(tokens[slot], view.first_token, view.count);
    lp += std::log(view.probs[i]);
  }
  return lp;
}

void ToyPolicy::accumulate_logprob_grad(std::span<const double> ctx,
                                        std::span<const int> tokens,
                                        double coeff,
                                        std::span<double> grad) const {
  if (tokens.size() != kNumSlots)
    throw std::invalid_argument("expected a 6-token template");
  if (grad.size() != params_dim())
    throw std::invalid_argument("gradient buffer has wrong size");
  for (std::size_t slot = 0; slot < kNumSlots; ++slot) {
    const SlotView view = slot_view(slot, ctx);
    const std::size_t picked =
        slot_pick_index(tokens[slot], view.first_token, view.count);
    if (!view.affine) {
      // d logprob / d logit_i = onehot_i - p_i over the slot's support
      for (std::size_t i = 0; i < view.count; ++i) {
        const double d = (i == picked ? 1.0 : 0.0) - view.probs[i];
        grad[view.param_base + i] += coeff * d;
      }
    } else {
      const std::size_t w0 = view.param_base;
      const std::size_t b0 = w0 + cfg_.num_bins * cfg_.context_dim;
      for (std::size_t b = 0; b < view.count; ++b) {
        const double d = (b == picked ? 1.0 : 0.0) - view.probs[b];
        const double cd = coeff * d;
        for (std::size_t j = 0; j < cfg_.context_dim; ++j)
          grad[w0 + b * cfg_.context_dim + j] += cd * ctx[j];
        grad[b0 + b] += cd;
      }
    }
  }
}

std::vector<double> ToyPolicy::logprob_gradient(
    std::span<const double> ctx, std::span<const int> tokens) const {
  std::vector<double> grad(params_dim(), 0.0);
  accumulate_logprob_grad(ctx, tokens, 1.0, grad);
  return grad;
}

std::unique_ptr<grpo::Policy> ToyPolicy::clone() const {
  return std::make_unique<ToyPolicy>(*this);
}

void ToyPolicy::force_structure() {
  const std::size_t v = vocab_.size();
  for (int row = 0; row < int(kNumStructuralSlots); ++row)
    params_[std::size_t(row) * v + std::size_t(expected_tag(row))] = kInf;
}

namespace {

// Target bins on the default 21-bin grid: scores 20, 50 and 80. Separated
// bins keep the shared-bias updates of one target from dragging down the
// others.
constexpr int kTargetBins[3] = {4, 10, 16};

}  // namespace

std::pair<core::Dataset, SyntheticTask> make_synthetic(std::size_t n_samples,
                                                       std::size_t dim,
                                                       std::uint64_t seed) {
  if (n_samples == 0)
    throw std::invalid_argument("make_synthetic: need at least one sample");
  if (dim == 0) throw std::invalid_argument("make_synthetic: dim must be positive");

  static const char* kTypes[4] = {"Blur", "Noise", "Compression", "Banding"};

  SyntheticTask task;
  task.dim = dim;
  task.weight.assign(dim, 0.0);
  task.weight[0] = 1.0;  // the driver coordinate is the whole signal

  core::Dataset ds;
  ds.provenance = "synthetic";
  ds.samples.reserve(n_samples);

  for (std::size_t k = 0; k < n_samples; ++k) {
    core::SeededRng rng(seed, core::streams::synthetic(k));
    const int bin = kTargetBins[rng.next_below(3)];
    const double jitter = rng.next_range(-0.3, 0.3);
    // Back-solve the driver so 100*sigmoid(x0) sits inside the target bin:
    // p stays within 0.0075 of bin/20, far from the 0.025-wide bin edge.
    double p = double(bin) / 20.0 + jitter * 0.025;
    p = std::min(std::max(p, 0.004), 0.996);
    const double x0 = std::log(p / (1.0 - p));

    core::Sample s;
    s.context.resize(dim);
    s.context[0] = x0;
    for (std::size_t j = 1; j < dim; ++j) s.context[j] = rng.next_range(-1.0, 1.0);
    s.distortion_type = kTypes[rng.next_below(4)];

    const double y = 100.0 / (1.0 + std::exp(-x0));
    const int quantized = int(std::lround(y / 5.0));
    if (quantized != bin)
      throw std::logic_error("synthetic truth fell outside its target bin");
    s.mos = double(bin) / 20.0;

    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "syn-%04zu", k);
    s.id = idbuf;
    s.image_ref = std::string("synthetic://") + idbuf;
    ds.samples.push_back(std::move(s));
  }
  return {std::move(ds), std::move(task)};
}

}  // namespace qponder::toy
