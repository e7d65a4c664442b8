#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harq/mdp.hpp"
#include "harq/policy_eval.hpp"
#include "harq/scheme_models.hpp"

namespace harq {

struct ScanPoint {
  std::map<std::string, double> params;
  Policy policy;
  double mu = 0.0;      ///< analytic gain of the solved policy
  double mu_sim = 0.0;  ///< simulated time-average MSE
  double sigma2 = 0.0;  ///< simulated MSE variation
  double theta = 0.0;
  bool feasible = false;  ///< sigma2 <= theta
  bool on_front = false;
};

enum class ScanStatus { Ok, EmptyFeasibleSet };

struct ParetoFront {
  std::vector<ScanPoint> scanned;  ///< every grid point, in scan order
  std::vector<ScanPoint> points;   ///< nondominated feasible points
  std::size_t dominated_count = 0; ///< feasible points that were dominated
  ScanStatus status = ScanStatus::Ok;
  /// Index into `points` of the lexicographic (mu, then sigma2) choice.
  std::optional<std::size_t> pick;
};

enum class CcMode { Static, DynamicPairs, DynamicAugmented };

struct ScanOptions {
  EvalConfig eval;
  unsigned threads = 0;
  int q_max = 10;
  Objective objective = Objective::MseCost;
  /// Replaces every per-point threshold when set.
  std::optional<double> global_theta;
  RviOptions rvi;
};

/// MSE variation of the fixed-HARQ policy on the scheme `cfg` describes.
[[nodiscard]] double theta_upper_bound(const SchemeConfig& cfg, const EvalConfig& eval,
                                       unsigned threads = 0);

[[nodiscard]] ParetoFront scan_ir(const FblLink& link, const CostModel& cost,
                                  const std::vector<double>& taus,
                                  const ScanOptions& opts);

[[nodiscard]] ParetoFront scan_cc(const FblLink& link, const CostModel& cost,
                                  const std::vector<double>& alphas, CcMode mode,
                                  const ScanOptions& opts);

/// True when a is at least as good as b in both objectives and better in one.
[[nodiscard]] bool dominates(double mu_a, double s_a, double mu_b, double s_b);

/// Marks feasibility and the front on `scanned` and fills the rest of the
/// result. Equal points keep the earlier one.
[[nodiscard]] ParetoFront extract_front(std::vector<ScanPoint> scanned,
                                        std::optional<double> global_theta = {});

/// CSV with param columns, mu_analytic, mu_sim, sigma2_sim, theta, feasible,
/// on_front, and a trailing status row.
void write_front_csv(std::ostream& os, const ParetoFront& front);

struct FrontRow {
  std::map<std::string, double> params;
  double mu = 0.0;
  double mu_sim = 0.0;
  double sigma2 = 0.0;
  double theta = 0.0;
  bool feasible = false;
  bool on_front = false;
};

/// Parses write_front_csv output; lines starting with '#' are skipped.
[[nodiscard]] std::vector<FrontRow> read_front_csv(std::istream& is);

/// Messages for every on_front row that is infeasible or dominated by another
/// feasible row. Empty means the front is valid.
[[nodiscard]] std::vector<std::string> front_violations(const std::vector<FrontRow>& rows);

}  // namespace harq
