#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "harq/fbl_harq.hpp"
#include "harq/lti_estimation.hpp"
#include "harq/mdp.hpp"

namespace harq {

/// Retransmission fraction held as an exact ratio num/den in lowest terms.
struct Tau {
  int num = 1;
  int den = 1;

  [[nodiscard]] double value() const noexcept {
    return static_cast<double>(num) / den;
  }
  /// Nearest ratio with den <= 10000; throws ConfigError unless tau lies in
  /// (0, 1] and the ratio reproduces it to 1e-9.
  static Tau from_double(double tau);
};

/// AoI value whole + frac_units * tau, stored canonically with
/// frac_units in [0, tau.den) so that equal values have equal fields.
struct AoiValue {
  int whole = 1;
  int frac_units = 0;

  /// Canonical form of whole + units * tau.
  static AoiValue make(int whole, int units, const Tau& tau);
  [[nodiscard]] double value(const Tau& tau) const noexcept {
    return whole + frac_units * tau.value();
  }
  /// Value in units of 1/tau.den.
  [[nodiscard]] long long ticks(const Tau& tau) const noexcept {
    return static_cast<long long>(whole) * tau.den +
           static_cast<long long>(frac_units) * tau.num;
  }

  friend bool operator==(const AoiValue&, const AoiValue&) = default;
};

/// Receiver context of the pending update; only the augmented DN-CC model
/// carries it in the state.
struct PrevCtx {
  enum class Kind { None, Solo, SicOk, SicFail };
  Kind kind = Kind::None;
  int level = -1;  ///< index into the level list for SicOk / SicFail

  friend bool operator==(const PrevCtx&, const PrevCtx&) = default;
};

struct SchemeState {
  int m = 1;
  AoiValue q;
  PrevCtx ctx;

  friend bool operator==(const SchemeState&, const SchemeState&) = default;
};

enum class SchemeKind { Arq, FixedHarq, Ir, SnCc, DnCc, StdIr, StdCc };
enum class DnMode { PairEnum, Augmented };
enum class Objective { MseCost, DelayCost };

[[nodiscard]] std::string to_string(SchemeKind kind);
[[nodiscard]] SchemeKind parse_scheme_kind(const std::string& text);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::StdIr;
  double tau = 1.0;                 ///< Ir
  double alpha = 1.0;               ///< SnCc
  std::vector<double> levels;       ///< DnCc
  DnMode dn_mode = DnMode::Augmented;
  double pair_prev_alpha = 0.0;     ///< PairEnum: previous-slot fraction (0 = solo)
  double pair_alpha = 1.0;          ///< PairEnum: retransmission fraction
  SchemeKind fixed_base = SchemeKind::StdCc;  ///< FixedHarq: scheme the fixed rule runs on
  double fixed_base_tau = 1.0;
  double fixed_base_alpha = 1.0;
  FblLink link;
  int q_max = 10;
  CostModel cost = CostModel::scaled(1.0, 1.0);
  Objective objective = Objective::MseCost;

  /// Throws ConfigError naming the offending "scheme.*" field.
  void validate() const;
  /// Short human-readable label, e.g. "IR(tau=0.5)".
  [[nodiscard]] std::string label() const;
};

enum class ActionKind { Fresh, Retransmit };

struct ActionSpec {
  ActionKind kind = ActionKind::Fresh;
  double alpha = 1.0;  ///< retransmission power fraction (CC family)
  int level = -1;      ///< index into the level list (DN-CC)
};

/// Packet-level outcome of one slot.
enum class Outcome { Success = 0, OldOkNewFail = 1, Fail = 2 };

/// Stochastic step of one (state, action): the primary packet fails with
/// eps_primary; for a superposed slot the fresh update then fails with
/// eps_secondary. `next` is indexed by Outcome; -1 marks an outcome that
/// cannot occur.
struct StepModel {
  double eps_primary = 0.0;
  double eps_secondary = 1.0;
  bool superposed = false;
  std::array<StateId, 3> next{-1, -1, -1};
};

/// A built scheme: the finite MDP plus the dynamics needed to simulate it.
struct SchemeModel {
  SchemeConfig config;
  Tau tau;
  FiniteMdp mdp;
  std::vector<SchemeState> states;
  std::vector<ActionSpec> actions;
  /// steps[s][i] belongs to mdp.rows(s)[i].
  std::vector<std::vector<StepModel>> steps;
  std::vector<double> state_cost;  ///< per-slot cost under the objective
  std::vector<double> mse;         ///< instantaneous MSE of each state
  std::vector<double> age;         ///< AoI value of each state

  [[nodiscard]] const StepModel& step(StateId s, ActionId a) const;
  [[nodiscard]] std::optional<StateId> find(const SchemeState& st) const;
  [[nodiscard]] std::string describe(StateId s) const { return mdp.state_label(s); }
};

/// Dispatches on cfg.kind (FixedHarq builds its base scheme).
[[nodiscard]] SchemeModel build_scheme(const SchemeConfig& cfg);

[[nodiscard]] SchemeModel build_ir_mdp(const SchemeConfig& cfg);
[[nodiscard]] SchemeModel build_sn_cc_mdp(const SchemeConfig& cfg);
[[nodiscard]] SchemeModel build_dn_cc_mdp(const SchemeConfig& cfg);

struct BenchmarkBuild {
  SchemeModel model;
  std::optional<Policy> fixed_policy;  ///< set for FixedHarq
};

/// ARQ, FixedHarq or any scheme under the delay objective.
[[nodiscard]] BenchmarkBuild build_benchmark_mdp(const SchemeConfig& cfg);

/// Retransmit whenever an update is pending and m < m_max; highest power
/// level on multi-level models.
[[nodiscard]] Policy fixed_harq_policy(const SchemeModel& model);
[[nodiscard]] Policy always_fresh_policy(const SchemeModel& model);

struct StabilityReport {
  bool ok = false;
  double product = 0.0;
  double eps = 0.0;
  double rho_sq = 0.0;
};

/// Sufficient condition eps * rho^2 < 1 at full retransmission depth.
[[nodiscard]] StabilityReport stability_check(const SchemeConfig& cfg);
[[nodiscard]] StabilityReport stability_product(double eps, double rho_sq);

}  // namespace harq
