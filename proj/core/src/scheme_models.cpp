#include "harq/scheme_models.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <sstream>
#include <tuple>

#include "harq/errors.hpp"

namespace harq {
namespace {

constexpr int kMaxTauDen = 10000;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

bool in_unit_interval(double a) { return a > 0.0 && a <= 1.0; }

struct Branches {
  ActionId action = 0;
  double eps_primary = 0.0;
  double eps_secondary = 1.0;
  bool superposed = false;
  std::array<std::optional<SchemeState>, 3> next;
};

using Dynamics = std::function<std::vector<Branches>(const SchemeState&)>;

using StateKey = std::tuple<int, int, int, int, int>;

StateKey key_of(const SchemeState& s) {
  return {s.m, s.q.whole, s.q.frac_units, static_cast<int>(s.ctx.kind), s.ctx.level};
}

std::string state_label(const SchemeState& s, const Tau& tau,
                        const std::vector<double>& levels) {
  std::string out = "(" + std::to_string(s.m) + "," + fmt(s.q.value(tau));
  switch (s.ctx.kind) {
    case PrevCtx::Kind::None:
      break;
    case PrevCtx::Kind::Solo:
      out += "|solo";
      break;
    case PrevCtx::Kind::SicOk:
      out += "|ok:" + fmt(levels.at(s.ctx.level));
      break;
    case PrevCtx::Kind::SicFail:
      out += "|fail:" + fmt(levels.at(s.ctx.level));
      break;
  }
  return out + ")";
}

// Explores every state reachable from `start` through positive-probability
// branches and emits the MDP rows in discovery order.
SchemeModel build_generic(const SchemeConfig& cfg, const Tau& tau,
                          const std::vector<std::pair<ActionSpec, std::string>>& actions,
                          const std::vector<double>& levels,
                          const SchemeState& start, const Dynamics& dynamics) {
  SchemeModel model;
  model.config = cfg;
  model.tau = tau;
  for (const auto& [spec, label] : actions) {
    model.actions.push_back(spec);
    model.mdp.add_action(label);
  }

  std::map<StateKey, StateId> index;
  std::deque<StateId> queue;
  auto intern = [&](const SchemeState& s) {
    auto [it, inserted] = index.try_emplace(key_of(s), 0);
    if (inserted) {
      it->second = model.mdp.add_state(state_label(s, tau, levels));
      model.states.push_back(s);
      queue.push_back(it->second);
    }
    return it->second;
  };
  intern(start);

  std::vector<std::vector<Branches>> pending;
  while (!queue.empty()) {
    const StateId sid = queue.front();
    queue.pop_front();
    const SchemeState st = model.states[sid];
    std::vector<Branches> rows = dynamics(st);
    std::sort(rows.begin(), rows.end(),
              [](const Branches& a, const Branches& b) { return a.action < b.action; });
    for (const auto& r : rows) {
      const std::array<double, 3> p = r.superposed
          ? std::array<double, 3>{(1 - r.eps_primary) * (1 - r.eps_secondary),
                                  (1 - r.eps_primary) * r.eps_secondary,
                                  r.eps_primary}
          : std::array<double, 3>{1 - r.eps_primary, 0.0, r.eps_primary};
      for (int o = 0; o < 3; ++o) {
        if (p[o] > 0.0 && r.next[o]) intern(*r.next[o]);
      }
    }
    if (pending.size() <= static_cast<std::size_t>(sid)) pending.resize(sid + 1);
    pending[sid] = std::move(rows);
  }

  const auto n = static_cast<StateId>(model.states.size());
  model.steps.resize(n);
  model.state_cost.resize(n);
  model.mse.resize(n);
  model.age.resize(n);
  for (StateId sid = 0; sid < n; ++sid) {
    const SchemeState& st = model.states[sid];
    const double q = st.q.value(tau);
    model.age[sid] = q;
    model.mse[sid] = cfg.cost(q);
    model.state_cost[sid] =
        cfg.objective == Objective::DelayCost ? q : model.mse[sid];
    for (const auto& r : pending[sid]) {
      StepModel step;
      step.eps_primary = r.eps_primary;
      step.eps_secondary = r.eps_secondary;
      step.superposed = r.superposed;
      const std::array<double, 3> p = r.superposed
          ? std::array<double, 3>{(1 - r.eps_primary) * (1 - r.eps_secondary),
                                  (1 - r.eps_primary) * r.eps_secondary,
                                  r.eps_primary}
          : std::array<double, 3>{1 - r.eps_primary, 0.0, r.eps_primary};
      std::vector<Transition> trans;
      for (int o = 0; o < 3; ++o) {
        if (p[o] > 0.0 && r.next[o]) {
          const StateId t = index.at(key_of(*r.next[o]));
          step.next[o] = t;
          trans.push_back({t, p[o]});
        }
      }
      model.mdp.set_row(sid, r.action, model.state_cost[sid], std::move(trans));
      model.steps[sid].push_back(step);
    }
  }
  return model;
}

// AoI arithmetic shared by all builders.
struct AgeOps {
  Tau tau;
  int q_max;

  [[nodiscard]] AoiValue clamp(AoiValue q) const {
    if (q.ticks(tau) > static_cast<long long>(q_max) * tau.den) {
      return AoiValue::make(q_max, 0, tau);
    }
    return q;
  }
  [[nodiscard]] AoiValue plus(AoiValue q, int whole, int units) const {
    return clamp(AoiValue::make(q.whole + whole, q.frac_units + units, tau));
  }
  [[nodiscard]] AoiValue of(int whole, int units) const {
    return clamp(AoiValue::make(whole, units, tau));
  }
};

SchemeState fresh_success() { return {1, AoiValue{1, 0}, {}}; }

Branches fresh_branches(const SchemeState& st, double eps1, const AgeOps& ops,
                        PrevCtx ctx_next = {}) {
  Branches b;
  b.action = 0;
  b.eps_primary = eps1;
  b.next[static_cast<int>(Outcome::Success)] = SchemeState{1, AoiValue{1, 0}, ctx_next};
  b.next[static_cast<int>(Outcome::Fail)] = SchemeState{1, ops.plus(st.q, 1, 0), ctx_next};
  return b;
}

double single_shot_error(const FblLink& link) {
  const double P = link.power();
  return eps_cc(link, std::span<const double>(&P, 1));
}

// IR-family graph: retransmission at counter m' = m + 1 succeeds into
// (m', (m'-1) tau + 1) and fails into (m', q + (m'-1) tau + 1).
SchemeModel build_ir_like(const SchemeConfig& cfg, const Tau& tau,
                          bool combine, const std::string& retx_label) {
  const FblLink& link = cfg.link;
  const double P = link.power();
  const double eps1 = single_shot_error(link);
  const AgeOps ops{tau, cfg.q_max};
  const int retx_len = std::max(1, static_cast<int>(std::lround(tau.value() * link.n1)));

  std::vector<double> eps_at(link.m_max + 1, eps1);  // eps_at[m] for m transmissions
  if (combine) {
    for (int m = 2; m <= link.m_max; ++m) {
      std::vector<double> g(m, P);
      std::vector<int> len(m, retx_len);
      len[0] = link.n1;
      eps_at[m] = eps_ir(link, g, len);
    }
  }

  const Dynamics dyn = [&](const SchemeState& st) {
    std::vector<Branches> out;
    out.push_back(fresh_branches(st, eps1, ops));
    const AoiValue success_age = AoiValue::make(1, st.m - 1, tau);
    const bool pending = st.q.ticks(tau) > success_age.ticks(tau);
    if (st.m < link.m_max && pending) {
      const int m_next = st.m + 1;
      Branches b;
      b.action = 1;
      b.eps_primary = eps_at[m_next];
      b.next[static_cast<int>(Outcome::Success)] =
          SchemeState{m_next, ops.of(1, m_next - 1), {}};
      b.next[static_cast<int>(Outcome::Fail)] =
          SchemeState{m_next, ops.plus(st.q, 1, m_next - 1), {}};
      out.push_back(b);
    }
    return out;
  };
  return build_generic(cfg, tau,
                       {{{ActionKind::Fresh, 1.0, -1}, "fresh"},
                        {{ActionKind::Retransmit, 1.0, -1}, retx_label}},
                       {}, fresh_success(), dyn);
}

// Old-update SNR before the retransmission, per receiver context.
double old_first_snr(double P, SicContext c, double prev_alpha) {
  return noma_sinrs(P, NomaSplit{prev_alpha}, NomaSplit{1.0}, c).gamma_old_first;
}

Branches noma_branches(const FblLink& link, const SchemeState& st,
                       ActionId action, double gamma_old, double alpha,
                       const AgeOps& ops, PrevCtx ok_ctx, PrevCtx fail_ctx) {
  const NomaSinrs s = noma_sinrs(link.power(), std::nullopt, NomaSplit{alpha},
                                 SicContext::Solo);
  const std::array<double, 2> combined{gamma_old, s.gamma_retx};
  const double g_new = s.gamma_new;
  Branches b;
  b.action = action;
  b.superposed = true;
  b.eps_primary = eps_cc(link, combined);
  b.eps_secondary = g_new > 0.0 ? eps_cc(link, std::span<const double>(&g_new, 1)) : 1.0;
  const int m_next = std::min(st.m + 1, link.m_max);
  PrevCtx solo = ok_ctx.kind == PrevCtx::Kind::None ? PrevCtx{} : PrevCtx{PrevCtx::Kind::Solo, -1};
  b.next[static_cast<int>(Outcome::Success)] = SchemeState{1, AoiValue{1, 0}, solo};
  b.next[static_cast<int>(Outcome::OldOkNewFail)] = SchemeState{m_next, ops.of(2, 0), ok_ctx};
  b.next[static_cast<int>(Outcome::Fail)] = SchemeState{m_next, ops.plus(st.q, 1, 0), fail_ctx};
  return b;
}

// A non-orthogonal retransmission needs an undelivered update (AoI > 1) and
// room for two combined copies.
bool noma_pending(const SchemeState& st, const FblLink& link) {
  return st.q.whole > 1 && link.m_max >= 2;
}

// Static CC family (SN-CC and the PairEnum DN-CC): counter-1 states carry a
// solo first copy, counter >= 2 states carry a copy that survived SIC at
// fraction `prev_alpha`.
SchemeModel build_static_cc(const SchemeConfig& cfg, double prev_alpha,
                            double alpha, const std::string& retx_label) {
  const FblLink& link = cfg.link;
  const double P = link.power();
  const double eps1 = single_shot_error(link);
  const Tau tau{1, 1};
  const AgeOps ops{tau, cfg.q_max};
  const double g_solo = old_first_snr(P, SicContext::Solo, 0.0);
  const double g_sic = old_first_snr(P, SicContext::SicOk, prev_alpha);

  const Dynamics dyn = [&](const SchemeState& st) {
    std::vector<Branches> out;
    out.push_back(fresh_branches(st, eps1, ops));
    if (noma_pending(st, link)) {
      out.push_back(noma_branches(link, st, 1, st.m == 1 ? g_solo : g_sic, alpha,
                                  ops, {}, {}));
    }
    return out;
  };
  return build_generic(cfg, tau,
                       {{{ActionKind::Fresh, 1.0, -1}, "fresh"},
                        {{ActionKind::Retransmit, alpha, 0}, retx_label}},
                       {}, fresh_success(), dyn);
}

void require_fraction(double a, const std::string& field) {
  if (!in_unit_interval(a)) throw ConfigError("must lie in (0, 1]", field);
}

}  // namespace

Tau Tau::from_double(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("must lie in (0, 1]", "scheme.tau");
  for (int den = 1; den <= kMaxTauDen; ++den) {
    const double num = std::round(tau * den);
    if (num >= 1.0 && std::abs(num / den - tau) < 1e-9) {
      return {static_cast<int>(num), den};
    }
  }
  throw ConfigError("not representable as a ratio with denominator <= 10000",
                    "scheme.tau");
}

AoiValue AoiValue::make(int whole, int units, const Tau& tau) {
  if (units < 0) throw DomainError("negative fractional AoI units");
  const int carry = units / tau.den;
  return {whole + carry * tau.num, units % tau.den};
}

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Arq: return "arq";
    case SchemeKind::FixedHarq: return "fixed_harq";
    case SchemeKind::Ir: return "ir";
    case SchemeKind::SnCc: return "sncc";
    case SchemeKind::DnCc: return "dncc";
    case SchemeKind::StdIr: return "std_ir";
    case SchemeKind::StdCc: return "std_cc";
  }
  return "unknown";
}

SchemeKind parse_scheme_kind(const std::string& text) {
  for (auto k : {SchemeKind::Arq, SchemeKind::FixedHarq, SchemeKind::Ir,
                 SchemeKind::SnCc, SchemeKind::DnCc, SchemeKind::StdIr,
                 SchemeKind::StdCc}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown scheme kind '" + text + "'", "scheme.kind");
}

void SchemeConfig::validate() const {
  link.validate();
  if (q_max < 2) throw ConfigError("must be at least 2", "scheme.q_max");
  if (static_cast<double>(q_max) > cost.q_limit()) {
    throw ConfigError("exceeds the cost table range", "scheme.q_max");
  }
  switch (kind) {
    case SchemeKind::Ir:
      (void)Tau::from_double(tau);
      break;
    case SchemeKind::SnCc:
      require_fraction(alpha, "scheme.alpha");
      break;
    case SchemeKind::DnCc:
      if (levels.empty()) throw ConfigError("must be nonempty", "scheme.levels");
      for (double a : levels) require_fraction(a, "scheme.levels");
      if (dn_mode == DnMode::PairEnum) {
        if (!(pair_prev_alpha >= 0.0 && pair_prev_alpha <= 1.0)) {
          throw ConfigError("must lie in [0, 1]", "scheme.pair");
        }
        require_fraction(pair_alpha, "scheme.pair");
      }
      break;
    case SchemeKind::FixedHarq:
      if (fixed_base == SchemeKind::FixedHarq || fixed_base == SchemeKind::DnCc) {
        throw ConfigError("fixed HARQ base must be a single-level scheme",
                          "scheme.base_kind");
      }
      if (fixed_base == SchemeKind::Ir) (void)Tau::from_double(fixed_base_tau);
      if (fixed_base == SchemeKind::SnCc) require_fraction(fixed_base_alpha, "scheme.alpha");
      break;
    case SchemeKind::Arq:
    case SchemeKind::StdIr:
    case SchemeKind::StdCc:
      break;
  }
}

std::string SchemeConfig::label() const {
  std::string base;
  switch (kind) {
    case SchemeKind::Arq: base = "ARQ"; break;
    case SchemeKind::FixedHarq: {
      SchemeConfig b = *this;
      b.kind = fixed_base;
      b.tau = fixed_base_tau;
      b.alpha = fixed_base_alpha;
      b.objective = Objective::MseCost;
      base = "FixedHARQ[" + b.label() + "]";
      break;
    }
    case SchemeKind::Ir: base = "IR(tau=" + fmt(tau) + ")"; break;
    case SchemeKind::SnCc: base = "SNCC(alpha=" + fmt(alpha) + ")"; break;
    case SchemeKind::DnCc:
      base = dn_mode == DnMode::Augmented
                 ? "DNCC(L=" + std::to_string(levels.size()) + ",augmented)"
                 : "DNCC(pair=" + fmt(pair_prev_alpha) + "," + fmt(pair_alpha) + ")";
      break;
    case SchemeKind::StdIr: base = "StdIR"; break;
    case SchemeKind::StdCc: base = "StdCC"; break;
  }
  if (objective == Objective::DelayCost) base += "/delay";
  return base;
}

const StepModel& SchemeModel::step(StateId s, ActionId a) const {
  const auto rows = mdp.rows(s);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].action == a) return steps.at(s).at(i);
  }
  throw InvalidPolicy("action " + std::to_string(a) + " not allowed in state " +
                      mdp.state_label(s));
}

std::optional<StateId> SchemeModel::find(const SchemeState& st) const {
  auto it = std::find(states.begin(), states.end(), st);
  if (it == states.end()) return std::nullopt;
  return static_cast<StateId>(it - states.begin());
}

SchemeModel build_ir_mdp(const SchemeConfig& cfg) {
  if (cfg.kind != SchemeKind::Ir && cfg.kind != SchemeKind::StdIr) {
    throw ConfigError("expected an IR scheme", "scheme.kind");
  }
  cfg.validate();
  const Tau tau = cfg.kind == SchemeKind::StdIr ? Tau{1, 1} : Tau::from_double(cfg.tau);
  return build_ir_like(cfg, tau, /*combine=*/true, "retx");
}

SchemeModel build_sn_cc_mdp(const SchemeConfig& cfg) {
  if (cfg.kind != SchemeKind::SnCc && cfg.kind != SchemeKind::StdCc) {
    throw ConfigError("expected a CC scheme", "scheme.kind");
  }
  cfg.validate();
  const double a = cfg.kind == SchemeKind::StdCc ? 1.0 : cfg.alpha;
  return build_static_cc(cfg, a, a, "retx@" + fmt(a));
}

SchemeModel build_dn_cc_mdp(const SchemeConfig& cfg) {
  if (cfg.kind != SchemeKind::DnCc) throw ConfigError("expected DNCC", "scheme.kind");
  cfg.validate();
  if (cfg.dn_mode == DnMode::PairEnum) {
    return build_static_cc(cfg, cfg.pair_prev_alpha, cfg.pair_alpha,
                           "retx@" + fmt(cfg.pair_alpha));
  }

  const FblLink& link = cfg.link;
  const double P = link.power();
  const double eps1 = single_shot_error(link);
  const Tau tau{1, 1};
  const AgeOps ops{tau, cfg.q_max};
  const auto& levels = cfg.levels;

  std::vector<std::pair<ActionSpec, std::string>> actions{
      {{ActionKind::Fresh, 1.0, -1}, "fresh"}};
  for (std::size_t l = 0; l < levels.size(); ++l) {
    actions.push_back({{ActionKind::Retransmit, levels[l], static_cast<int>(l)},
                       "retx@" + fmt(levels[l])});
  }

  const Dynamics dyn = [&](const SchemeState& st) {
    std::vector<Branches> out;
    out.push_back(fresh_branches(st, eps1, ops, PrevCtx{PrevCtx::Kind::Solo, -1}));
    if (!noma_pending(st, link)) return out;
    double g_old = P;
    switch (st.ctx.kind) {
      case PrevCtx::Kind::None:
      case PrevCtx::Kind::Solo:
        g_old = old_first_snr(P, SicContext::Solo, 0.0);
        break;
      case PrevCtx::Kind::SicOk:
        g_old = old_first_snr(P, SicContext::SicOk, levels[st.ctx.level]);
        break;
      case PrevCtx::Kind::SicFail:
        g_old = old_first_snr(P, SicContext::SicFail, levels[st.ctx.level]);
        break;
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const int li = static_cast<int>(l);
      out.push_back(noma_branches(link, st, li + 1, g_old, levels[l], ops,
                                  PrevCtx{PrevCtx::Kind::SicOk, li},
                                  PrevCtx{PrevCtx::Kind::SicFail, li}));
    }
    return out;
  };
  return build_generic(cfg, tau, actions, levels,
                       SchemeState{1, AoiValue{1, 0}, PrevCtx{PrevCtx::Kind::Solo, -1}},
                       dyn);
}

SchemeModel build_scheme(const SchemeConfig& cfg) {
  switch (cfg.kind) {
    case SchemeKind::Ir:
    case SchemeKind::StdIr:
      return build_ir_mdp(cfg);
    case SchemeKind::SnCc:
    case SchemeKind::StdCc:
      return build_sn_cc_mdp(cfg);
    case SchemeKind::DnCc:
      return build_dn_cc_mdp(cfg);
    case SchemeKind::Arq:
    case SchemeKind::FixedHarq:
      return build_benchmark_mdp(cfg).model;
  }
  throw ConfigError("unknown scheme kind", "scheme.kind");
}

BenchmarkBuild build_benchmark_mdp(const SchemeConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case SchemeKind::Arq:
      // Same state graph as standard IR-HARQ, but a retransmitted copy is
      // decoded on its own: no combining gain.
      return {build_ir_like(cfg, Tau{1, 1}, /*combine=*/false, "resend"), std::nullopt};
    case SchemeKind::FixedHarq: {
      SchemeConfig base = cfg;
      base.kind = cfg.fixed_base;
      base.tau = cfg.fixed_base_tau;
      base.alpha = cfg.fixed_base_alpha;
      SchemeModel model = build_scheme(base);
      model.config = cfg;
      Policy p = fixed_harq_policy(model);
      return {std::move(model), std::move(p)};
    }
    default:
      if (cfg.objective != Objective::DelayCost) {
        throw ConfigError("benchmark build needs ARQ, fixed HARQ or the delay objective",
                          "scheme.objective");
      }
      return {build_scheme(cfg), std::nullopt};
  }
}

Policy fixed_harq_policy(const SchemeModel& model) {
  Policy p;
  p.scheme_label = model.config.label();
  p.params["fixed"] = 1.0;
  const int m_max = model.config.link.m_max;
  for (StateId s = 0; s < static_cast<StateId>(model.states.size()); ++s) {
    ActionId choice = 0;
    double best_alpha = -1.0;
    if (model.states[s].m < m_max) {
      for (const auto& r : model.mdp.rows(s)) {
        const ActionSpec& spec = model.actions[r.action];
        if (spec.kind == ActionKind::Retransmit && spec.alpha > best_alpha) {
          best_alpha = spec.alpha;
          choice = r.action;
        }
      }
    }
    p.decision.push_back(choice);
  }
  return p;
}

Policy always_fresh_policy(const SchemeModel& model) {
  Policy p;
  p.scheme_label = model.config.label();
  p.decision.assign(model.states.size(), 0);
  return p;
}

StabilityReport stability_product(double eps, double rho_sq) {
  StabilityReport r;
  r.eps = eps;
  r.rho_sq = rho_sq;
  r.product = eps * rho_sq;
  r.ok = r.product < 1.0;
  return r;
}

StabilityReport stability_check(const SchemeConfig& cfg) {
  cfg.validate();
  const FblLink& link = cfg.link;
  const double P = link.power();
  const double eps1 = single_shot_error(link);
  double eps = eps1;

  SchemeKind kind = cfg.kind;
  double tau = cfg.tau;
  double alpha = cfg.alpha;
  if (kind == SchemeKind::FixedHarq) {
    kind = cfg.fixed_base;
    tau = cfg.fixed_base_tau;
    alpha = cfg.fixed_base_alpha;
  }
  switch (kind) {
    case SchemeKind::Ir:
    case SchemeKind::StdIr: {
      const double t = kind == SchemeKind::StdIr ? 1.0 : Tau::from_double(tau).value();
      const int retx_len = std::max(1, static_cast<int>(std::lround(t * link.n1)));
      std::vector<double> g(link.m_max, P);
      std::vector<int> len(link.m_max, retx_len);
      len[0] = link.n1;
      eps = eps_ir(link, g, len);
      break;
    }
    case SchemeKind::SnCc:
    case SchemeKind::StdCc:
    case SchemeKind::DnCc: {
      if (link.m_max < 2) break;
      double a = kind == SchemeKind::StdCc ? 1.0 : alpha;
      if (kind == SchemeKind::DnCc) a = *std::max_element(cfg.levels.begin(), cfg.levels.end());
      const NomaSinrs s = noma_sinrs(P, std::nullopt, NomaSplit{a}, SicContext::Solo);
      const std::array<double, 2> combined{s.gamma_old_first, s.gamma_retx};
      eps = eps_cc(link, combined);
      break;
    }
    case SchemeKind::Arq:
    case SchemeKind::FixedHarq:
      break;
  }
  return stability_product(eps, cfg.cost.rho_sq());
}

}  // namespace harq
