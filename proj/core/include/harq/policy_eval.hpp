#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "harq/mdp.hpp"
#include "harq/scheme_models.hpp"

namespace harq {

struct EvalConfig {
  int slots = 1000;   ///< K
  int trials = 1000;
  std::uint64_t seed = 1;
  int histogram_bins = 20;
  /// Upper bound on trials * slots.
  std::uint64_t max_slot_events = 100'000'000;

  /// Throws ConfigError naming the offending "eval.*" field.
  void validate() const;
};

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  double freq = 0.0;
};

struct EvalReport {
  std::vector<double> per_slot_mean;      ///< mean MSE over trials, per slot
  double mu_mse = 0.0;                    ///< time average of per_slot_mean
  double sigma2_mse = 0.0;                ///< population variance of per_slot_mean
  std::vector<HistogramBin> histogram;    ///< pooled instantaneous MSE
  std::vector<double> per_slot_mean_age;
  std::uint64_t seed_used = 0;
};

/// Runs `eval.trials` independent trajectories of `eval.slots` slots from
/// state (1, 1). Trial t draws from a stream seeded by (seed, t) only, and
/// trials are reduced in index order, so the report does not depend on
/// `threads` (0 = hardware concurrency).
/// Throws BudgetExceeded, InvalidPolicy or ConfigError.
[[nodiscard]] EvalReport simulate_policy(const SchemeModel& model,
                                         const Policy& policy,
                                         const EvalConfig& eval,
                                         unsigned threads = 0);

/// Equal-width bins over [min, max]; the last bin is closed. Constant input
/// gives one bin of frequency 1.
[[nodiscard]] std::vector<HistogramBin> mse_histogram(std::span<const double> samples,
                                                      int bins);
/// Same, over (value, multiplicity) pairs.
[[nodiscard]] std::vector<HistogramBin> mse_histogram(
    std::span<const std::pair<double, std::uint64_t>> weighted, int bins);

/// Population variance of the per-slot means around mu.
[[nodiscard]] double slot_variance(std::span<const double> per_slot_mean, double mu);

/// Per-trial stream: a 64-bit Mersenne Twister seeded with
/// splitmix64(seed ^ splitmix64(trial)).
class TrialRng {
 public:
  TrialRng(std::uint64_t seed, std::uint64_t trial);
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// CSV: slot,mean_mse,mean_age then a summary row.
void write_trace_csv(std::ostream& os, const EvalReport& report);
/// CSV: bin_lo,bin_hi,freq.
void write_histogram_csv(std::ostream& os, const EvalReport& report);
/// CSV: mu_mse,sigma2_mse.
void write_summary_csv(std::ostream& os, const EvalReport& report);

}  // namespace harq
