#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace harq {

using StateId = int;
using ActionId = int;

struct Transition {
  StateId next = 0;
  double prob = 0.0;
};

/// One allowed action in one state.
struct ActionRow {
  ActionId action = 0;
  double cost = 0.0;
  std::vector<Transition> transitions;
};

/// Explicit finite MDP. States and actions are dense integer ids with
/// attached labels; each state lists its allowed actions in increasing id.
class FiniteMdp {
 public:
  StateId add_state(std::string label);
  ActionId add_action(std::string label);

  /// Adds or replaces the row for (s, a). Transitions to the same next state
  /// are merged.
  void set_row(StateId s, ActionId a, double cost,
               std::vector<Transition> transitions);

  [[nodiscard]] std::size_t num_states() const noexcept { return state_labels_.size(); }
  [[nodiscard]] std::size_t num_actions() const noexcept { return action_labels_.size(); }
  [[nodiscard]] const std::string& state_label(StateId s) const { return state_labels_.at(s); }
  [[nodiscard]] const std::string& action_label(ActionId a) const { return action_labels_.at(a); }
  [[nodiscard]] const std::vector<std::string>& state_labels() const noexcept { return state_labels_; }
  [[nodiscard]] const std::vector<std::string>& action_labels() const noexcept { return action_labels_; }

  [[nodiscard]] std::span<const ActionRow> rows(StateId s) const { return rows_.at(s); }
  /// nullptr when `a` is not allowed in `s`.
  [[nodiscard]] const ActionRow* row(StateId s, ActionId a) const;
  [[nodiscard]] bool allowed(StateId s, ActionId a) const { return row(s, a) != nullptr; }

 private:
  std::vector<std::string> state_labels_;
  std::vector<std::string> action_labels_;
  std::vector<std::vector<ActionRow>> rows_;
};

struct Policy {
  std::vector<ActionId> decision;  ///< indexed by StateId
  std::string scheme_label;
  std::map<std::string, double> params;

  friend bool operator==(const Policy&, const Policy&) = default;
};

struct SolveReport {
  Policy policy;
  double average_cost = 0.0;  ///< gain g
  std::vector<double> bias;   ///< relative values h, h(0) = 0
  int iterations = 0;
  double span_residual = 0.0;
};

struct Violation {
  StateId state = -1;
  ActionId action = -1;  ///< -1 for state- or model-level checks
  std::string check;     ///< "row-sum", "probability", "cost", "next-state", "no-actions", "unichain"
  std::string message;
};

/// Empty iff every row is a distribution, costs are finite and nonnegative,
/// and the union transition graph is strongly connected.
[[nodiscard]] std::vector<Violation> validate(const FiniteMdp& mdp);

/// Throws InvalidPolicy unless every state maps to one of its allowed actions.
void check_policy(const FiniteMdp& mdp, const Policy& policy);

struct RviOptions {
  /// Span tolerance, relative to max(1, largest |cost|).
  double tol = 1e-9;
  int max_iter = 100000;
  /// Self-loop weight of the aperiodicity transform P' = (1-k) I + k P.
  double aperiodicity = 0.5;
};

/// Average-cost relative value iteration. Ties go to the lowest ActionId.
/// Throws InvalidModel if validate() reports violations, NonConvergence on
/// the iteration cap.
[[nodiscard]] SolveReport relative_value_iteration(const FiniteMdp& mdp,
                                                   const RviOptions& opts = {});

/// max_s |c(s, pi(s)) + sum_s' P h(s') - h(s) - g| for the report's policy.
[[nodiscard]] double optimality_residual(const FiniteMdp& mdp,
                                         const SolveReport& report);

/// Stationary distribution of the policy-induced chain. Throws SingularChain
/// when the chain has more than one closed class.
[[nodiscard]] std::vector<double> stationary_distribution(const FiniteMdp& mdp,
                                                          const Policy& policy);

/// Long-run average cost of a stationary deterministic policy.
[[nodiscard]] double policy_average_cost(const FiniteMdp& mdp,
                                         const Policy& policy);

/// Brute force over every deterministic stationary policy. Test oracle only.
/// Throws TooLarge when the policy count exceeds `limit`.
[[nodiscard]] SolveReport exhaustive_policy_search(const FiniteMdp& mdp,
                                                   std::size_t limit = 1000000);

/// Tab-separated debug format, one line per (state, action, next state).
void write_mdp(std::ostream& os, const FiniteMdp& mdp);
[[nodiscard]] FiniteMdp read_mdp(std::istream& is);

}  // namespace harq
