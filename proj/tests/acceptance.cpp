// Release gate. Each criterion prints exactly one [PASS]/[FAIL] line; the
// process exits nonzero if any criterion fails. Tolerances and budgets are
// pinned here, not configurable.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "qponder/cli.hpp"
#include "qponder/core.hpp"
#include "qponder/distill.hpp"
#include "qponder/grpo.hpp"
#include "qponder/judge.hpp"
#include "qponder/metrics.hpp"
#include "qponder/reward.hpp"
#include "qponder/tagparse.hpp"
#include "qponder/toypolicy.hpp"

using namespace qponder;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void criterion(int number, const std::string& label,
               const std::function<Outcome()>& body) {
  Outcome oc;
  try {
    oc = body();
  } catch (const std::exception& e) {
    oc.pass = false;
    oc.detail = std::string("threw: ") + e.what();
  }
  std::printf("[%s] criterion %d: %s%s%s\n", oc.pass ? "PASS" : "FAIL", number,
              label.c_str(), oc.detail.empty() ? "" : " -- ",
              oc.detail.c_str());
  std::fflush(stdout);
  if (!oc.pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---- independent oracles -------------------------------------------------

long double acc_oracle(double predicted, double truth, double alpha) {
  return expl(-fabsl((long double)predicted - (long double)truth) /
              (long double)alpha);
}

double pearson_oracle(const std::vector<double>& x,
                      const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double dx = x[i] - mx;
    const long double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  long double r = sxy / sqrtl(sxx * syy);
  if (r > 1) r = 1;
  if (r < -1) r = -1;
  return (double)r;
}

// O(n^2) average ranks: 1-based, ties share the mean of their positions.
std::vector<double> ranks_oracle(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t smaller = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++smaller;
      if (v[j] == v[i]) ++equal;
    }
    out[i] = (double)smaller + ((double)equal + 1.0) / 2.0;
  }
  return out;
}

double spearman_oracle(const std::vector<double>& x,
                       const std::vector<double>& y) {
  return pearson_oracle(ranks_oracle(x), ranks_oracle(y));
}

bool nondegenerate(const std::vector<double>& v) {
  return *std::max_element(v.begin(), v.end()) !=
         *std::min_element(v.begin(), v.end());
}

// Sort-and-slice filter oracle: rank by (|err|, index), keep floor(g*N),
// restore input order.
std::vector<std::string> filter_oracle(const core::Dataset& ds, double gamma) {
  struct Row {
    double err;
    std::size_t index;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    rows.push_back(
        {std::abs(*ds.samples[i].predicted_score - 100.0 * ds.samples[i].mos),
         i});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.err != b.err ? a.err < b.err : a.index < b.index;
  });
  const auto keep =
      (std::size_t)std::floor(gamma * (double)ds.samples.size() + 1e-9);
  rows.resize(keep);
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.index < b.index; });
  std::vector<std::string> ids;
  for (const Row& r : rows) ids.push_back(ds.samples[r.index].id);
  return ids;
}

// Rollout group built from real toy-policy samples, with importance ratios
// and advantages planted so both surrogate branches get exercised. Ratios
// stay clear of the clip kinks where finite differences are meaningless.
grpo::RolloutGroup plant_group(const toy::ToyPolicy& policy,
                               const grpo::GrpoConfig& cfg,
                               core::SeededRng& rng, std::size_t n_rollouts) {
  grpo::RolloutGroup g;
  g.query_id = "probe";
  g.context.resize(policy.config().context_dim);
  for (auto& c : g.context) c = rng.next_range(-1.2, 1.2);
  for (std::size_t i = 0; i < n_rollouts; ++i) {
    const grpo::Rollout ro = policy.sample(g.context, rng);
    grpo::RolloutRecord rec;
    rec.tokens = ro.tokens;
    rec.text = ro.text;
    rec.logprob_new = ro.logprob;
    double ratio;
    do {
      ratio = std::exp(rng.next_range(-0.35, 0.35));
    } while (std::abs(ratio - (1.0 - cfg.clip_eps)) < 1e-2 ||
             std::abs(ratio - (1.0 + cfg.clip_eps)) < 1e-2);
    rec.logprob_old = rec.logprob_new - std::log(ratio);
    rec.logprob_ref = rec.logprob_new + rng.next_range(-0.2, 0.2);
    rec.advantage = rng.next_range(-1.5, 1.5);
    g.outputs.push_back(std::move(rec));
  }
  return g;
}

std::string ascii_soup(core::SeededRng& rng) {
  static const std::vector<std::string> pieces = {
      "<think>",  "</think>", "<answer>", "</answer>", "42",     "104.7",
      "-3",       "1e2",      ".",        "..",        "4a",     " ",
      "\n",       "\t",       "ok fine",  "<",         ">",      "</",
      "<think",   "answer>",  "00",       "99.999",    "+5",     "blur",
      "<answer>", "</think>", "",         "score",     "100.0001"};
  std::string s;
  const std::size_t n = rng.next_below(9);
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng.next_below(pieces.size())];
  return s;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("qponder-accept-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(line);
  return rows;
}

}  // namespace

int main() {
  criterion(1, "accuracy reward matches the exponential oracle", [] {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      for (int j = 0; j < 100; ++j) {
        const double pred = (100.0 * i) / 99.0;
        const double truth = (100.0 * j) / 99.0;
        const double got = reward::accuracy_reward(pred, truth, 10.0);
        worst = std::max(
            worst, std::abs(got - (double)acc_oracle(pred, truth, 10.0)));
      }
    }
    reward::RewardConfig rc;  // alpha 10, weights (2, 1)
    const auto br = reward::total_reward(
        "<think>crisp, no artifacts</think><answer>73.2500</answer>", 73.25,
        rc);
    const double dt = seconds_since(t0);
    Outcome oc;
    oc.pass = worst <= 1e-12 && br.r_acc == 1.0 && br.r_fmt == 1.0 &&
              br.r_total == 3.0 && dt < 1.0;
    oc.detail = "10,000-point grid, worst " + fmt(worst) + ", perfect total " +
                fmt(br.r_total) + ", " + fmt(dt) + " s";
    return oc;
  });

  criterion(2, "group advantages are centered, unit-scale and invariant", [] {
    const auto t0 = std::chrono::steady_clock::now();
    core::SeededRng rng(101, 0);
    bool ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 2 + rng.next_below(63);
      std::vector<double> r(n);
      do {
        for (auto& v : r) v = rng.next_range(0.0, 10.0);
      } while (!nondegenerate(r));
      const auto adv =
          grpo::group_advantages(r, grpo::BaselineMode::Mean, 1e-8);
      double sum = 0.0, sq = 0.0;
      for (double a : adv) sum += a;
      for (double a : adv) sq += a * a;
      const double pop_std = std::sqrt(sq / (double)n - std::pow(sum / n, 2));
      ok = ok && std::abs(sum) < 1e-9 * (double)n &&
           std::abs(pop_std - 1.0) < 1e-9;

      // shift and positive-scale invariance
      const double c = rng.next_range(-25.0, 25.0);
      const double k = rng.next_range(0.1, 12.0);
      std::vector<double> shifted(n), scaled(n);
      for (std::size_t i = 0; i < n; ++i) {
        shifted[i] = r[i] + c;
        scaled[i] = r[i] * k;
      }
      const auto a_sh =
          grpo::group_advantages(shifted, grpo::BaselineMode::Mean, 1e-8);
      const auto a_sc =
          grpo::group_advantages(scaled, grpo::BaselineMode::Mean, 1e-8);
      for (std::size_t i = 0; i < n; ++i) {
        ok = ok && std::abs(a_sh[i] - adv[i]) < 1e-9 &&
             std::abs(a_sc[i] - adv[i]) < 1e-9;
      }

      // Max mode against the literal formula
      const auto mx =
          grpo::group_advantages(r, grpo::BaselineMode::Max, 1e-8);
      const double top = *std::max_element(r.begin(), r.end());
      double mean = 0.0;
      for (double v : r) mean += v;
      mean /= (double)n;
      double var = 0.0;
      for (double v : r) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / (double)n);
      for (std::size_t i = 0; i < n; ++i) {
        ok = ok && std::abs(mx[i] - (r[i] - top) / sd) < 1e-9 && mx[i] <= 0.0;
      }
      if (!ok) break;
    }
    const double dt = seconds_since(t0);
    Outcome oc;
    oc.pass = ok && dt < 5.0;
    oc.detail = "1,000 groups, " + fmt(dt) + " s";
    return oc;
  });

  criterion(3, "divergence estimate is nonnegative, zero at parity, exact", [] {
    core::SeededRng rng(303, 0);
    bool ok = true;
    double worst_rel = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double t = rng.next_range(-20.0, 20.0);
      const double lp_new = rng.next_range(-30.0, 0.0);
      const double kl = grpo::kl_estimate(lp_new, lp_new + t);
      const long double direct = expl((long double)t) - (long double)t - 1.0L;
      ok = ok && kl >= 0.0;
      const double rel =
          std::abs((double)((long double)kl - direct)) /
          std::max(1.0, (double)direct);
      worst_rel = std::max(worst_rel, rel);
    }
    for (int i = 0; i < 100; ++i) {
      const double lp = rng.next_range(-40.0, 0.0);
      ok = ok && std::abs(grpo::kl_estimate(lp, lp)) <= 1e-15;
    }
    Outcome oc;
    oc.pass = ok && worst_rel <= 1e-12;
    oc.detail = "10,000 log-ratios in [-20, 20], worst rel " + fmt(worst_rel);
    return oc;
  });

  criterion(4, "objective gradient matches central finite differences", [] {
    const auto t0 = std::chrono::steady_clock::now();
    grpo::GrpoConfig cfg;  // clip 0.2, kl_beta 0.04 > 0
    toy::ToyPolicyConfig pc;
    core::SeededRng rng(404, 0);
    bool ok = true;
    std::size_t clipped_seen = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100 && ok; ++trial) {
      toy::ToyPolicy policy(pc);
      std::vector<double> params(policy.params_dim());
      for (auto& w : params) w = rng.next_range(-0.4, 0.4);
      policy.set_params(params);
      const auto g = plant_group(policy, cfg, rng, 4 + rng.next_below(5));

      for (const auto& rec : g.outputs) {
        const double ratio = std::exp(rec.logprob_new - rec.logprob_old);
        const double unclipped = ratio * rec.advantage;
        const double clipped =
            std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) *
            rec.advantage;
        if (unclipped > clipped) ++clipped_seen;
      }

      const auto grad = grpo::objective_gradient(g, policy, cfg);
      const double h = 1e-5;
      for (std::size_t k = (std::size_t)trial % 17; k < params.size();
           k += 17) {
        auto probe = params;
        probe[k] = params[k] + h;
        toy::ToyPolicy plus(pc);
        plus.set_params(probe);
        probe[k] = params[k] - h;
        toy::ToyPolicy minus(pc);
        minus.set_params(probe);
        const double fd = (grpo::surrogate_objective_at(g, plus, cfg) -
                           grpo::surrogate_objective_at(g, minus, cfg)) /
                          (2 * h);
        const double err = std::abs(grad[k] - fd) /
                           std::max(1.0, std::max(std::abs(grad[k]),
                                                  std::abs(fd)));
        worst = std::max(worst, err);
        ok = ok && err < 1e-5;
      }
    }
    const double dt = seconds_since(t0);
    Outcome oc;
    oc.pass = ok && clipped_seen > 0 && dt < 30.0;
    oc.detail = "100 groups, worst rel " + fmt(worst) + ", " +
                std::to_string(clipped_seen) + " clipped rollouts, " +
                fmt(dt) + " s";
    return oc;
  });

  criterion(5, "correlation metrics agree with brute-force oracles", [] {
    core::SeededRng rng(505, 0);
    bool ok = true;
    double worst = 0.0;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
      const std::size_t n = 2 + rng.next_below(99);
      const bool with_ties = trial % 2 == 0;
      std::vector<double> x(n), y(n);
      do {
        for (std::size_t i = 0; i < n; ++i) {
          x[i] = with_ties ? (double)rng.next_below(6) : rng.next_range(-5, 5);
          y[i] = with_ties ? (double)rng.next_below(6) : rng.next_range(-5, 5);
        }
      } while (!nondegenerate(x) || !nondegenerate(y));
      const double dp = std::abs(metrics::plcc(x, y) - pearson_oracle(x, y));
      const double ds = std::abs(metrics::srcc(x, y) - spearman_oracle(x, y));
      worst = std::max(worst, std::max(dp, ds));
      ok = ok && dp <= 1e-12 && ds <= 1e-12;
    }
    const std::vector<double> lhs = {1, 2, 3, 4};
    const std::vector<double> rhs = {1, 3, 2, 4};
    const double swap_case = metrics::srcc(lhs, rhs);
    Outcome oc;
    oc.pass = ok && swap_case == 0.8;
    oc.detail = "1,000 vectors, worst " + fmt(worst) + ", swap case " +
                fmt(swap_case);
    return oc;
  });

  criterion(6, "refinement filter equals the sort-and-slice oracle", [] {
    core::SeededRng rng(606, 0);
    bool ok = true;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
      const std::size_t n = 1 + rng.next_below(40);
      core::Dataset ds;
      for (std::size_t i = 0; i < n; ++i) {
        core::Sample s;
        s.id = "t" + std::to_string(i);
        s.image_ref = "img://" + s.id;
        s.mos = rng.next_range(0.0, 1.0);
        // coarse prediction grid so ties are common
        s.predicted_score = (double)(5 * rng.next_below(21));
        ds.samples.push_back(std::move(s));
      }
      distill::FilterRule rule;
      rule.gamma = rng.next_range(0.05, 0.95);
      const core::Dataset kept = distill::filter_refined(ds, rule);
      const auto want = filter_oracle(ds, rule.gamma);
      ok = ok && kept.size() == want.size();
      for (std::size_t i = 0; ok && i < want.size(); ++i)
        ok = kept.samples[i].id == want[i];
    }

    // gamma 0.8 on ten samples keeps exactly eight
    core::Dataset ten;
    for (int i = 0; i < 10; ++i) {
      core::Sample s;
      s.id = "u" + std::to_string(i);
      s.image_ref = s.id;
      s.mos = 0.05 + 0.09 * i;
      s.predicted_score = 100.0 * s.mos + i;
      ten.samples.push_back(std::move(s));
    }
    distill::FilterRule eight;
    eight.gamma = 0.8;
    const bool ten_ok = distill::filter_refined(ten, eight).size() == 8;

    // planted outliers: every fifth prediction inverted, filter must help
    core::Dataset noisy;
    for (int i = 0; i < 40; ++i) {
      core::Sample s;
      s.id = "v" + std::to_string(i);
      s.image_ref = s.id;
      s.mos = 0.02 + 0.024 * i;
      const double truth = 100.0 * s.mos;
      s.predicted_score =
          (i % 5 == 0) ? std::clamp(100.0 - truth, 0.0, 100.0) : truth + 2.0;
      noisy.samples.push_back(std::move(s));
    }
    const auto before = distill::quality_report(noisy);
    const auto after =
        distill::quality_report(distill::filter_refined(noisy, eight));
    Outcome oc;
    oc.pass = ok && ten_ok && after.srcc > before.srcc;
    oc.detail = "1,000 datasets; srcc " + fmt(before.srcc) + " -> " +
                fmt(after.srcc);
    return oc;
  });

  criterion(7, "parser is total, round-trips, and prices format exactly", [] {
    core::SeededRng rng(707, 0);
    bool ok = true;
    for (int i = 0; i < 100000 && ok; ++i) {
      const std::string s = ascii_soup(rng);
      const auto parsed = tagparse::parse_output(s);  // must never throw
      ok = parsed.ok() == parsed.diagnoses.empty();
      if (parsed.ok())
        ok = ok && parsed.output->score >= 0.0 && parsed.output->score <= 100.0;
      const double fmt_r = reward::format_reward(parsed);
      ok = ok && fmt_r == (parsed.ok() ? 1.0 : 0.0);
    }
    for (int i = 0; i < 1000 && ok; ++i) {
      std::string reasoning;
      const std::size_t len = rng.next_below(60);
      static const std::string alphabet =
          "abcdefghijklmnopqrstuvwxyz0123456789 .,:;!()-\n\t";
      for (std::size_t k = 0; k < len; ++k)
        reasoning += alphabet[rng.next_below(alphabet.size())];
      const double score = rng.next_range(0.0, 100.0);
      const std::string rendered = tagparse::render_output(reasoning, score);
      const auto parsed = tagparse::parse_output(rendered);
      ok = ok && parsed.ok() && parsed.output->reasoning == reasoning &&
           tagparse::render_output(parsed.output->reasoning,
                                   parsed.output->score) == rendered;
    }
    Outcome oc;
    oc.pass = ok;
    oc.detail = "100,000 fuzzed strings, 1,000 round trips";
    return oc;
  });

  criterion(8, "policy training converges on the seeded synthetic task", [] {
    const auto t0 = std::chrono::steady_clock::now();
    auto [ds, task] = toy::make_synthetic(50, 8, 2);
    (void)task;
    toy::ToyPolicy policy;  // uniform initialization, 21 bins
    grpo::GrpoConfig cfg;   // group 8, clip 0.2, kl 0.04, 2000 steps
    reward::RewardConfig rc;
    std::vector<double> acc, fmtr;
    grpo::train(policy, ds, cfg, rc, 2, [&](const grpo::StepStats& s) {
      acc.push_back(s.mean_r_acc);
      fmtr.push_back(s.fmt_rate);
    });

    const std::size_t window = 200;
    const auto ma = [&](const std::vector<double>& v, std::size_t t) {
      double sum = 0.0;
      for (std::size_t i = t - window; i < t; ++i) sum += v[i];
      return sum / (double)window;
    };
    std::size_t crossed = 0;
    double peak = 0.0, drawdown = 0.0;
    for (std::size_t t = window; t <= acc.size(); ++t) {
      const double a = ma(acc, t);
      const double f = ma(fmtr, t);
      if (crossed == 0 && a >= 0.8 && f >= 0.95) crossed = t;
      peak = std::max(peak, a);
      drawdown = std::max(drawdown, peak - a);
    }
    const double dt = seconds_since(t0);
    Outcome oc;
    oc.pass = crossed > 0 && crossed <= 2000 && drawdown <= 0.02 && dt < 300.0;
    oc.detail = "crossed at step " + std::to_string(crossed) +
                ", max 200-step moving-average drawdown " + fmt(drawdown) +
                ", " + fmt(dt) + " s";
    return oc;
  });

  criterion(9, "training runs and resumes are byte-deterministic", [] {
    TempDir tmp("determinism");
    std::ostringstream sink;
    const auto run = [&](const std::vector<std::string>& args) {
      return cli::run_cli(args, sink, sink);
    };
    const std::string a = (tmp.path / "a").string();
    const std::string b = (tmp.path / "b").string();
    const std::string c = (tmp.path / "c").string();
    bool ok =
        run({"--out", a, "train", "--steps", "60", "--checkpoint-every",
             "30"}) == 0 &&
        run({"--out", b, "train", "--steps", "60", "--checkpoint-every",
             "30"}) == 0;
    ok = ok && slurp(tmp.path / "a" / "training_log.jsonl") ==
                   slurp(tmp.path / "b" / "training_log.jsonl");
    ok = ok && !slurp(tmp.path / "a" / "training_log.jsonl").empty();

    ok = ok && run({"--out", c, "train", "--resume",
                    (tmp.path / "a" / "checkpoint_step30.json").string(),
                    "--data",
                    (tmp.path / "a" / "dataset.jsonl").string()}) == 0;
    const auto full = lines_of(tmp.path / "a" / "training_log.jsonl");
    const auto tail = lines_of(tmp.path / "c" / "training_log.jsonl");
    ok = ok && full.size() == 60 && tail.size() == 30;
    for (std::size_t i = 0; ok && i < 30; ++i)
      ok = tail[i] == full[30 + i];
    if (ok) {
      const auto ck_a =
          grpo::load_checkpoint(tmp.path / "a" / "checkpoint_final.json");
      const auto ck_c =
          grpo::load_checkpoint(tmp.path / "c" / "checkpoint_final.json");
      ok = ck_a.params == ck_c.params && ck_c.step == 60;
    }
    Outcome oc;
    oc.pass = ok;
    oc.detail = "identical 60-step logs; resume tail matches rows 31-60";
    return oc;
  });

  criterion(10, "offline judge harness aggregates hand-checked means", [] {
    TempDir tmp("judge");
    const auto write = [&](const std::string& id, int c, int a, int r) {
      std::ofstream out(tmp.path / (id + ".txt"));
      out << "<Completeness>" << c << "</Completeness>\n<Accuracy>" << a
          << "</Accuracy>\n<Reasonableness>" << r << "</Reasonableness>\n";
    };
    write("a", 1, 1, 1);
    write("b", 3, 3, 3);
    write("c", 5, 5, 5);
    judge::StubJudgeTransport stub(tmp.path);
    judge::JudgePromptSpec spec =
        judge::load_judge_spec(fs::path(QPONDER_DATA_DIR) /
                               "judge_prompt.json");
    std::vector<judge::EvalRecord> records;
    for (const char* id : {"a", "b", "c"}) {
      judge::EvalRecord r;
      r.id = id;
      r.mos = 0.5;
      r.distortion_type = "Blur";
      r.reasoning = "flat description";
      records.push_back(std::move(r));
    }
    judge::JudgeClientConfig cfg;
    cfg.base_backoff_ms = 0;
    const auto report =
        judge::evaluate_corpus(records, spec, cfg, {0, 5}, stub, 17);
    bool ok = report.evaluated == 3 && report.pooled.has_value() &&
              report.pooled->completeness == 3.0 &&
              report.pooled->accuracy == 3.0 &&
              report.pooled->reasonableness == 3.0 &&
              *report.pooled_avg == 3.0 && *report.macro_avg == 3.0;

    const auto v = judge::parse_verdict(
        "Coverage is partial.\n<Completeness>3</Completeness>\n"
        "Claims mostly hold.\n<Accuracy>4</Accuracy>\n"
        "Well argued.\n<Reasonableness>5</Reasonableness>\n");
    ok = ok && v.completeness == 3 && v.accuracy == 4 && v.reasonableness == 5;

    // bounds modes: 0 is legal on 0-5, rejected on 1-5; 6 rejected on both
    const std::string zero =
        "<Completeness>0</Completeness><Accuracy>5</Accuracy>"
        "<Reasonableness>2</Reasonableness>";
    ok = ok && judge::parse_verdict(zero, {0, 5}).completeness == 0;
    bool strict_rejects = false;
    try {
      (void)judge::parse_verdict(zero, {1, 5});
    } catch (const judge::OutOfBoundsScore&) {
      strict_rejects = true;
    }
    bool six_rejects = false;
    try {
      (void)judge::parse_verdict(
          "<Completeness>6</Completeness><Accuracy>5</Accuracy>"
          "<Reasonableness>2</Reasonableness>",
          {0, 5});
    } catch (const judge::OutOfBoundsScore&) {
      six_rejects = true;
    }
    Outcome oc;
    oc.pass = ok && strict_rejects && six_rejects;
    oc.detail = "pooled means (3, 3, 3), verdict (3, 4, 5), both bounds modes";
    return oc;
  });

  criterion(11, "severity bins agree with the comparison-chain oracle", [] {
    bool ok = true;
    for (int i = 0; i <= 10000 && ok; ++i) {
      const double mos = (double)i / 10000.0;
      const auto got = distill::severity_of(mos);
      distill::Severity want;
      if (mos < 0.2)
        want = distill::Severity::Extreme;
      else if (mos < 0.4)
        want = distill::Severity::Severe;
      else if (mos < 0.6)
        want = distill::Severity::Noticeable;
      else if (mos < 0.8)
        want = distill::Severity::Moderate;
      else
        want = distill::Severity::Slight;
      ok = got == want;
    }
    core::Sample s;
    s.id = "probe";
    s.mos = 0.25;
    s.distortion_type = "Blur";
    const std::string tag = distill::enrich_tag(s);
    Outcome oc;
    oc.pass = ok && tag == "Severe_Blur";
    oc.detail = "10,001-point grid; tag " + tag;
    return oc;
  });

  if (g_failures == 0) {
    std::printf("acceptance: all 11 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return 1;
}
