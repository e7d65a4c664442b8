#include "harq/mdp.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "harq/errors.hpp"

namespace harq {
namespace {

constexpr double kRowSumTol = 1e-9;

using Graph = std::vector<std::vector<StateId>>;

// Tarjan's algorithm; returns the component id of every vertex.
std::vector<int> strongly_connected(const Graph& g, int& count) {
  const int n = static_cast<int>(g.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  int next_index = 0;
  count = 0;
  std::function<void(int)> visit = [&](int v) {
    index[v] = low[v] = next_index++;
    stack.push_back(v);
    on_stack[v] = 1;
    for (int w : g[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      int w = -1;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        comp[w] = count;
      } while (w != v);
      ++count;
    }
  };
  for (int v = 0; v < n; ++v) {
    if (index[v] < 0) visit(v);
  }
  return comp;
}

Graph policy_graph(const FiniteMdp& mdp, const Policy& policy) {
  Graph g(mdp.num_states());
  for (StateId s = 0; s < static_cast<StateId>(mdp.num_states()); ++s) {
    for (const auto& t : mdp.row(s, policy.decision[s])->transitions) {
      if (t.prob > 0.0) g[s].push_back(t.next);
    }
  }
  return g;
}

double cost_scale(const FiniteMdp& mdp) {
  double scale = 1.0;
  for (StateId s = 0; s < static_cast<StateId>(mdp.num_states()); ++s) {
    for (const auto& r : mdp.rows(s)) scale = std::max(scale, std::abs(r.cost));
  }
  return scale;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Exact gain and bias (h(0) = 0) of a unichain policy. Returns false when the
// evaluation system is singular.
bool evaluate_policy(const FiniteMdp& mdp, const std::vector<ActionId>& decision,
                     double& gain, std::vector<double>& h) {
  const auto n = static_cast<Eigen::Index>(mdp.num_states());
  // Unknowns: g in slot 0, h(1..n-1) in the remaining slots.
  std::vector<Eigen::Triplet<double>> entries;
  Eigen::VectorXd rhs(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const ActionRow* r = mdp.row(static_cast<StateId>(s), decision[s]);
    rhs(s) = r->cost;
    entries.emplace_back(s, 0, 1.0);
    if (s > 0) entries.emplace_back(s, s, 1.0);
    for (const auto& t : r->transitions) {
      if (t.next > 0) entries.emplace_back(s, t.next, -t.prob);
    }
  }
  Eigen::SparseMatrix<double> M(n, n);
  M.setFromTriplets(entries.begin(), entries.end());  // sums duplicates
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) return false;
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) return false;
  gain = x(0);
  h.assign(n, 0.0);
  for (Eigen::Index s = 1; s < n; ++s) h[s] = x(s);
  return true;
}

double q_value(const ActionRow& r, const std::vector<double>& h) {
  double expect = 0.0;
  for (const auto& t : r.transitions) expect += t.prob * h[t.next];
  return r.cost + expect;
}

}  // namespace

StateId FiniteMdp::add_state(std::string label) {
  state_labels_.push_back(std::move(label));
  rows_.emplace_back();
  return static_cast<StateId>(state_labels_.size() - 1);
}

ActionId FiniteMdp::add_action(std::string label) {
  action_labels_.push_back(std::move(label));
  return static_cast<ActionId>(action_labels_.size() - 1);
}

void FiniteMdp::set_row(StateId s, ActionId a, double cost,
                        std::vector<Transition> transitions) {
  if (s < 0 || s >= static_cast<StateId>(num_states())) {
    throw InvalidModel("state id out of range");
  }
  if (a < 0 || a >= static_cast<ActionId>(num_actions())) {
    throw InvalidModel("action id out of range");
  }
  std::vector<Transition> merged;
  for (const auto& t : transitions) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const Transition& m) { return m.next == t.next; });
    if (it == merged.end()) {
      merged.push_back(t);
    } else {
      it->prob += t.prob;
    }
  }
  auto& list = rows_[s];
  auto it = std::lower_bound(
      list.begin(), list.end(), a,
      [](const ActionRow& r, ActionId id) { return r.action < id; });
  ActionRow row{a, cost, std::move(merged)};
  if (it != list.end() && it->action == a) {
    *it = std::move(row);
  } else {
    list.insert(it, std::move(row));
  }
}

const ActionRow* FiniteMdp::row(StateId s, ActionId a) const {
  const auto& list = rows_.at(s);
  auto it = std::lower_bound(
      list.begin(), list.end(), a,
      [](const ActionRow& r, ActionId id) { return r.action < id; });
  if (it == list.end() || it->action != a) return nullptr;
  return &*it;
}

std::vector<Violation> validate(const FiniteMdp& mdp) {
  std::vector<Violation> out;
  const auto n = static_cast<StateId>(mdp.num_states());
  if (n == 0) {
    out.push_back({-1, -1, "no-states", "model has no states"});
    return out;
  }
  Graph union_graph(n);
  for (StateId s = 0; s < n; ++s) {
    const auto rows = mdp.rows(s);
    if (rows.empty()) {
      out.push_back({s, -1, "no-actions",
                     "state " + mdp.state_label(s) + " has no allowed action"});
    }
    for (const auto& r : rows) {
      const std::string where =
          "(" + mdp.state_label(s) + ", " + mdp.action_label(r.action) + ")";
      if (!std::isfinite(r.cost) || r.cost < 0.0) {
        out.push_back({s, r.action, "cost", where + ": cost must be finite and >= 0"});
      }
      double sum = 0.0;
      bool bad_prob = false;
      for (const auto& t : r.transitions) {
        if (t.next < 0 || t.next >= n) {
          out.push_back({s, r.action, "next-state", where + ": next state out of range"});
          continue;
        }
        if (!std::isfinite(t.prob) || t.prob < 0.0) bad_prob = true;
        sum += t.prob;
        if (t.prob > 0.0) union_graph[s].push_back(t.next);
      }
      if (bad_prob) {
        out.push_back({s, r.action, "probability", where + ": negative or non-finite probability"});
      }
      if (std::abs(sum - 1.0) > kRowSumTol) {
        out.push_back({s, r.action, "row-sum",
                       where + ": probabilities sum to " + fmt_double(sum)});
      }
    }
  }
  int count = 0;
  (void)strongly_connected(union_graph, count);
  if (count != 1) {
    out.push_back({-1, -1, "unichain",
                   "union transition graph has " + std::to_string(count) +
                       " strongly connected components"});
  }
  return out;
}

void check_policy(const FiniteMdp& mdp, const Policy& policy) {
  if (policy.decision.size() != mdp.num_states()) {
    throw InvalidPolicy("policy covers " + std::to_string(policy.decision.size()) +
                        " states, model has " + std::to_string(mdp.num_states()));
  }
  for (StateId s = 0; s < static_cast<StateId>(mdp.num_states()); ++s) {
    if (!mdp.allowed(s, policy.decision[s])) {
      throw InvalidPolicy("action " + std::to_string(policy.decision[s]) +
                          " not allowed in state " + mdp.state_label(s));
    }
  }
}

SolveReport relative_value_iteration(const FiniteMdp& mdp,
                                     const RviOptions& opts) {
  if (!(opts.tol > 0.0)) throw DomainError("tolerance must be positive");
  if (!(opts.aperiodicity > 0.0 && opts.aperiodicity <= 1.0)) {
    throw DomainError("aperiodicity weight must lie in (0, 1]");
  }
  if (auto v = validate(mdp); !v.empty()) {
    throw InvalidModel("invalid MDP: " + v.front().message);
  }
  const auto n = static_cast<StateId>(mdp.num_states());
  const double k = opts.aperiodicity;
  const double tol = opts.tol * cost_scale(mdp);

  std::vector<double> h(n, 0.0), th(n, 0.0);
  std::vector<ActionId> decision(n, 0);
  double span = std::numeric_limits<double>::infinity();
  double gain = 0.0;
  int it = 0;
  while (it < opts.max_iter) {
    ++it;
    for (StateId s = 0; s < n; ++s) {
      double best = std::numeric_limits<double>::infinity();
      ActionId best_a = -1;
      for (const auto& r : mdp.rows(s)) {
        double expect = 0.0;
        for (const auto& t : r.transitions) expect += t.prob * h[t.next];
        const double v = r.cost + k * expect + (1.0 - k) * h[s];
        if (best_a < 0 || v < best - 1e-12 * std::max(1.0, std::abs(best))) {
          best = v;
          best_a = r.action;
        }
      }
      th[s] = best;
      decision[s] = best_a;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (StateId s = 0; s < n; ++s) {
      const double d = th[s] - h[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    span = hi - lo;
    gain = 0.5 * (hi + lo);
    const double ref = th[0];
    for (StateId s = 0; s < n; ++s) h[s] = th[s] - ref;
    if (span <= tol) break;
  }
  if (span > tol) {
    throw NonConvergence("relative value iteration hit the iteration cap", span);
  }

  SolveReport rep;
  rep.average_cost = gain;
  rep.bias.resize(n);
  for (StateId s = 0; s < n; ++s) rep.bias[s] = k * h[s];

  // Polish with exact policy iteration so the reported gain and bias are
  // those of the returned policy, free of the span tolerance.
  std::vector<double> hx;
  double gx = 0.0;
  for (int round = 0; round < 1000 && evaluate_policy(mdp, decision, gx, hx); ++round) {
    rep.average_cost = gx;
    rep.bias = hx;
    bool changed = false;
    for (StateId s = 0; s < n; ++s) {
      const double current = q_value(*mdp.row(s, decision[s]), hx);
      const double slack = 1e-12 * std::max(1.0, std::abs(current));
      double best = current;
      ActionId best_a = decision[s];
      for (const auto& r : mdp.rows(s)) {
        const double v = q_value(r, hx);
        if (v < best - slack) {
          best = v;
          best_a = r.action;
        }
      }
      if (best_a != decision[s]) {
        decision[s] = best_a;
        changed = true;
      }
    }
    if (!changed) break;
  }
  // Among actions that attain the minimum, report the lowest id.
  for (StateId s = 0; s < n; ++s) {
    const double current = q_value(*mdp.row(s, decision[s]), rep.bias);
    const double slack = 1e-9 * std::max(1.0, std::abs(current));
    for (const auto& r : mdp.rows(s)) {
      if (r.action >= decision[s]) break;
      if (q_value(r, rep.bias) <= current + slack) {
        decision[s] = r.action;
        break;
      }
    }
  }
  rep.policy.decision = std::move(decision);
  rep.iterations = it;
  rep.span_residual = span;
  return rep;
}

double optimality_residual(const FiniteMdp& mdp, const SolveReport& report) {
  double worst = 0.0;
  for (StateId s = 0; s < static_cast<StateId>(mdp.num_states()); ++s) {
    const ActionRow* r = mdp.row(s, report.policy.decision.at(s));
    if (r == nullptr) throw InvalidPolicy("policy action not allowed");
    double expect = 0.0;
    for (const auto& t : r->transitions) expect += t.prob * report.bias[t.next];
    worst = std::max(worst, std::abs(r->cost + expect - report.bias[s] -
                                     report.average_cost));
  }
  return worst;
}

std::vector<double> stationary_distribution(const FiniteMdp& mdp,
                                            const Policy& policy) {
  check_policy(mdp, policy);
  const auto n = static_cast<StateId>(mdp.num_states());
  const Graph g = policy_graph(mdp, policy);
  int count = 0;
  const std::vector<int> comp = strongly_connected(g, count);

  // A component is closed when no edge leaves it.
  std::vector<char> closed(count, 1);
  for (StateId s = 0; s < n; ++s) {
    for (StateId t : g[s]) {
      if (comp[t] != comp[s]) closed[comp[s]] = 0;
    }
  }
  const auto n_closed = std::count(closed.begin(), closed.end(), 1);
  if (n_closed != 1) {
    throw SingularChain("policy-induced chain has " + std::to_string(n_closed) +
                        " recurrent classes");
  }
  const int rc = static_cast<int>(std::find(closed.begin(), closed.end(), 1) - closed.begin());
  std::vector<StateId> members;
  std::vector<int> local(n, -1);
  for (StateId s = 0; s < n; ++s) {
    if (comp[s] == rc) {
      local[s] = static_cast<int>(members.size());
      members.push_back(s);
    }
  }
  const auto m = static_cast<Eigen::Index>(members.size());
  // pi (P - I) = 0 restricted to the recurrent class, with sum(pi) = 1
  // replacing the last balance equation.
  Eigen::MatrixXd M = -Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const ActionRow* r = mdp.row(members[i], policy.decision[members[i]]);
    for (const auto& t : r->transitions) {
      if (t.prob > 0.0) M(local[t.next], i) += t.prob;
    }
  }
  M.row(m - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(m - 1) = 1.0;
  const Eigen::VectorXd pi_c = M.fullPivLu().solve(rhs);

  std::vector<double> pi(n, 0.0);
  for (Eigen::Index i = 0; i < m; ++i) pi[members[i]] = std::max(0.0, pi_c(i));
  return pi;
}

double policy_average_cost(const FiniteMdp& mdp, const Policy& policy) {
  const std::vector<double> pi = stationary_distribution(mdp, policy);
  double total = 0.0;
  for (StateId s = 0; s < static_cast<StateId>(mdp.num_states()); ++s) {
    if (pi[s] > 0.0) total += pi[s] * mdp.row(s, policy.decision[s])->cost;
  }
  return total;
}

SolveReport exhaustive_policy_search(const FiniteMdp& mdp, std::size_t limit) {
  const auto n = static_cast<StateId>(mdp.num_states());
  double combos = 1.0;
  for (StateId s = 0; s < n; ++s) {
    if (mdp.rows(s).empty()) throw InvalidModel("state without actions");
    combos *= static_cast<double>(mdp.rows(s).size());
  }
  if (combos > static_cast<double>(limit)) {
    throw TooLarge("policy space too large for enumeration");
  }

  std::vector<std::size_t> digit(n, 0);
  Policy candidate;
  candidate.decision.resize(n);
  SolveReport best;
  bool found = false;
  int evaluated = 0;
  while (true) {
    for (StateId s = 0; s < n; ++s) candidate.decision[s] = mdp.rows(s)[digit[s]].action;
    try {
      const double g = policy_average_cost(mdp, candidate);
      ++evaluated;
      if (!found || g < best.average_cost) {
        best.policy = candidate;
        best.average_cost = g;
        found = true;
      }
    } catch (const SingularChain&) {
      // multichain policies have no single gain
    }
    StateId s = n - 1;
    while (s >= 0 && ++digit[s] == mdp.rows(s).size()) {
      digit[s] = 0;
      --s;
    }
    if (s < 0) break;
  }
  if (!found) throw SingularChain("no unichain policy found");
  best.iterations = evaluated;
  return best;
}

void write_mdp(std::ostream& os, const FiniteMdp& mdp) {
  os << "# harq-mdp/1\n";
  os << "state\taction\tcost\tnext_state\tprob\n";
  for (StateId s = 0; s < static_cast<StateId>(mdp.num_states()); ++s) {
    for (const auto& r : mdp.rows(s)) {
      for (const auto& t : r.transitions) {
        os << mdp.state_label(s) << '\t' << mdp.action_label(r.action) << '\t'
           << fmt_double(r.cost) << '\t' << mdp.state_label(t.next) << '\t'
           << fmt_double(t.prob) << '\n';
      }
    }
  }
}

FiniteMdp read_mdp(std::istream& is) {
  FiniteMdp mdp;
  std::unordered_map<std::string, StateId> states;
  std::unordered_map<std::string, ActionId> actions;
  auto state_id = [&](const std::string& label) {
    auto [it, inserted] = states.try_emplace(label, 0);
    if (inserted) it->second = mdp.add_state(label);
    return it->second;
  };
  auto action_id = [&](const std::string& label) {
    auto [it, inserted] = actions.try_emplace(label, 0);
    if (inserted) it->second = mdp.add_action(label);
    return it->second;
  };

  struct Pending {
    StateId s;
    ActionId a;
    double cost;
    std::vector<Transition> trans;
  };
  std::vector<Pending> pending;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("state\t", 0) == 0) continue;
    }
    std::istringstream ls(line);
    std::string s_lab, a_lab, cost_s, next_lab, prob_s;
    if (!std::getline(ls, s_lab, '\t') || !std::getline(ls, a_lab, '\t') ||
        !std::getline(ls, cost_s, '\t') || !std::getline(ls, next_lab, '\t') ||
        !std::getline(ls, prob_s)) {
      throw InvalidModel("malformed MDP line: " + line);
    }
    const StateId s = state_id(s_lab);
    const ActionId a = action_id(a_lab);
    const StateId t = state_id(next_lab);
    const double cost = std::stod(cost_s);
    const double prob = std::stod(prob_s);
    auto it = std::find_if(pending.begin(), pending.end(),
                           [&](const Pending& p) { return p.s == s && p.a == a; });
    if (it == pending.end()) {
      pending.push_back({s, a, cost, {{t, prob}}});
    } else {
      it->trans.push_back({t, prob});
    }
  }
  for (auto& p : pending) mdp.set_row(p.s, p.a, p.cost, std::move(p.trans));
  return mdp;
}

}  // namespace harq
