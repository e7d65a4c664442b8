#include "harq/policy_eval.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <thread>

#include "harq/errors.hpp"

namespace harq {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr int kTrialsPerBlock = 16;

struct BlockResult {
  std::vector<double> mse_sum;
  std::vector<double> age_sum;
  std::vector<double> mse_min;
  std::vector<double> mse_max;
  std::vector<std::uint64_t> visits;
};

// One policy-resolved step per state.
struct ResolvedStep {
  double eps_primary;
  double eps_secondary;
  bool superposed;
  std::array<StateId, 3> next;
};

}  // namespace

void EvalConfig::validate() const {
  if (slots < 1) throw ConfigError("must be at least 1", "eval.slots");
  if (trials < 1) throw ConfigError("must be at least 1", "eval.trials");
  if (histogram_bins < 1) throw ConfigError("must be at least 1", "eval.histogram_bins");
}

TrialRng::TrialRng(std::uint64_t seed, std::uint64_t trial)
    : engine_(splitmix64(seed ^ splitmix64(trial))) {}

double slot_variance(std::span<const double> per_slot_mean, double mu) {
  double acc = 0.0;
  for (double x : per_slot_mean) acc += (x - mu) * (x - mu);
  return acc / static_cast<double>(per_slot_mean.size());
}

std::vector<HistogramBin> mse_histogram(
    std::span<const std::pair<double, std::uint64_t>> weighted, int bins) {
  if (bins < 1) throw DomainError("histogram needs at least one bin");
  std::uint64_t total = 0;
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const auto& [v, c] : weighted) {
    if (c == 0) continue;
    if (first) {
      lo = hi = v;
      first = false;
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    total += c;
  }
  if (total == 0) throw DomainError("histogram of an empty sample");
  if (lo == hi) return {{lo, hi, 1.0}};

  const double width = (hi - lo) / bins;
  std::vector<std::uint64_t> counts(bins, 0);
  for (const auto& [v, c] : weighted) {
    if (c == 0) continue;
    auto idx = static_cast<int>(std::floor((v - lo) / width));
    idx = std::clamp(idx, 0, bins - 1);
    counts[idx] += c;
  }
  std::vector<HistogramBin> out(bins);
  for (int i = 0; i < bins; ++i) {
    out[i].lo = lo + i * width;
    out[i].hi = i + 1 == bins ? hi : lo + (i + 1) * width;
    out[i].freq = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return out;
}

std::vector<HistogramBin> mse_histogram(std::span<const double> samples, int bins) {
  std::vector<std::pair<double, std::uint64_t>> w;
  w.reserve(samples.size());
  for (double v : samples) w.emplace_back(v, 1);
  return mse_histogram(std::span<const std::pair<double, std::uint64_t>>(w), bins);
}

EvalReport simulate_policy(const SchemeModel& model, const Policy& policy,
                           const EvalConfig& eval, unsigned threads) {
  eval.validate();
  const auto events = static_cast<std::uint64_t>(eval.slots) *
                      static_cast<std::uint64_t>(eval.trials);
  if (events > eval.max_slot_events) {
    throw BudgetExceeded(std::to_string(events) + " slot-events exceed the budget of " +
                         std::to_string(eval.max_slot_events));
  }
  check_policy(model.mdp, policy);

  const auto n = static_cast<StateId>(model.states.size());
  std::vector<ResolvedStep> table(n);
  for (StateId s = 0; s < n; ++s) {
    const StepModel& st = model.step(s, policy.decision[s]);
    table[s] = {st.eps_primary, st.eps_secondary, st.superposed, st.next};
  }

  const int K = eval.slots;
  const int blocks = (eval.trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::vector<BlockResult> results(blocks);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  auto run_block = [&](int b) {
    BlockResult r{std::vector<double>(K, 0.0), std::vector<double>(K, 0.0),
                  std::vector<double>(K, kInf), std::vector<double>(K, -kInf),
                  std::vector<std::uint64_t>(n, 0)};
    const int t_end = std::min(eval.trials, (b + 1) * kTrialsPerBlock);
    for (int t = b * kTrialsPerBlock; t < t_end; ++t) {
      TrialRng rng(eval.seed, static_cast<std::uint64_t>(t));
      StateId s = 0;
      for (int k = 0; k < K; ++k) {
        const double c = model.mse[s];
        r.mse_sum[k] += c;
        r.mse_min[k] = std::min(r.mse_min[k], c);
        r.mse_max[k] = std::max(r.mse_max[k], c);
        r.age_sum[k] += model.age[s];
        ++r.visits[s];
        const ResolvedStep& st = table[s];
        int outcome;
        if (rng.uniform() < st.eps_primary) {
          outcome = static_cast<int>(Outcome::Fail);
        } else if (st.superposed && rng.uniform() < st.eps_secondary) {
          outcome = static_cast<int>(Outcome::OldOkNewFail);
        } else {
          outcome = static_cast<int>(Outcome::Success);
        }
        const StateId next = st.next[outcome];
        assert(next >= 0 && "simulated transition is not a branch of the model");
        s = next;
      }
    }
    results[b] = std::move(r);
  };

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                  : threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(blocks));
  if (workers <= 1) {
    for (int b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int b = static_cast<int>(w); b < blocks; b += static_cast<int>(workers)) {
          run_block(b);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  EvalReport rep;
  rep.seed_used = eval.seed;
  rep.per_slot_mean.assign(K, 0.0);
  rep.per_slot_mean_age.assign(K, 0.0);
  std::vector<double> lo(K, kInf);
  std::vector<double> hi(K, -kInf);
  std::vector<std::uint64_t> visits(n, 0);
  for (const auto& r : results) {
    for (int k = 0; k < K; ++k) {
      rep.per_slot_mean[k] += r.mse_sum[k];
      rep.per_slot_mean_age[k] += r.age_sum[k];
      lo[k] = std::min(lo[k], r.mse_min[k]);
      hi[k] = std::max(hi[k], r.mse_max[k]);
    }
    for (StateId s = 0; s < n; ++s) visits[s] += r.visits[s];
  }
  for (int k = 0; k < K; ++k) {
    // When every trial shares the slot's cost, report it without rounding.
    rep.per_slot_mean[k] = lo[k] == hi[k] ? lo[k] : rep.per_slot_mean[k] / eval.trials;
    rep.per_slot_mean_age[k] /= eval.trials;
  }
  const double n_events = static_cast<double>(eval.trials) * K;
  double mu = 0.0;
  for (StateId s = 0; s < n; ++s) {
    if (visits[s] > 0) mu += (static_cast<double>(visits[s]) / n_events) * model.mse[s];
  }
  rep.mu_mse = mu;
  rep.sigma2_mse = slot_variance(rep.per_slot_mean, rep.mu_mse);

  std::map<double, std::uint64_t> pooled;
  for (StateId s = 0; s < n; ++s) {
    if (visits[s] > 0) pooled[model.mse[s]] += visits[s];
  }
  std::vector<std::pair<double, std::uint64_t>> weighted(pooled.begin(), pooled.end());
  rep.histogram = mse_histogram(
      std::span<const std::pair<double, std::uint64_t>>(weighted), eval.histogram_bins);
  return rep;
}

void write_trace_csv(std::ostream& os, const EvalReport& report) {
  os << "slot,mean_mse,mean_age\n";
  for (std::size_t k = 0; k < report.per_slot_mean.size(); ++k) {
    os << k + 1 << ',' << num(report.per_slot_mean[k]) << ','
       << num(report.per_slot_mean_age[k]) << '\n';
  }
  os << "summary,mu_mse=" << num(report.mu_mse)
     << ",sigma2_mse=" << num(report.sigma2_mse) << '\n';
}

void write_histogram_csv(std::ostream& os, const EvalReport& report) {
  os << "bin_lo,bin_hi,freq\n";
  for (const auto& b : report.histogram) {
    os << num(b.lo) << ',' << num(b.hi) << ',' << num(b.freq) << '\n';
  }
}

void write_summary_csv(std::ostream& os, const EvalReport& report) {
  os << "mu_mse,sigma2_mse,seed\n"
     << num(report.mu_mse) << ',' << num(report.sigma2_mse) << ','
     << report.seed_used << '\n';
}

}  // namespace harq
