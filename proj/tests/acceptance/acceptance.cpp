// Acceptance gate: one PASS/FAIL line per numbered criterion.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "harq/errors.hpp"
#include "harq/fbl_harq.hpp"
#include "harq/lti_estimation.hpp"
#include "harq/mdp.hpp"
#include "harq/policy_eval.hpp"
#include "harq/scheme_models.hpp"
#include "harq_cli/commands.hpp"
#include "harq_cli/config.hpp"
#include "random_mdp.hpp"

namespace fs = std::filesystem;
using namespace harq;

namespace {

constexpr double kQuotedRhoSq = 1.8385 * 1.8385;

std::string g(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Verdict()>& body) {
  Verdict o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << title
            << " | " << o.detail << std::endl;
}

// Every report produced here is rechecked by criterion 11.
std::vector<EvalReport> all_reports;

EvalReport simulate(const SchemeModel& m, const Policy& p, const EvalConfig& e) {
  all_reports.push_back(simulate_policy(m, p, e));
  return all_reports.back();
}

fs::path preset(const std::string& name) {
  const char* env = std::getenv(cli::kPresetDirEnv);
  return fs::path(env != nullptr && *env != '\0' ? env : "configs") / (name + ".json");
}

struct Series {
  SchemeModel model;
  Policy policy;
  double mu = 0.0;  // analytic
};

Series solve_series(const cli::SeriesSpec& spec) {
  SchemeConfig cfg = spec.scheme;
  std::string which = spec.policy;
  if (cfg.objective == Objective::DelayCost) {
    cfg.objective = Objective::MseCost;
    if (which == "optimal") which = "delay";
  }
  Series s{build_scheme(cfg), {}, 0.0};
  if (which == "fixed" || cfg.kind == SchemeKind::FixedHarq) {
    s.policy = fixed_harq_policy(s.model);
  } else if (which == "fresh") {
    s.policy = always_fresh_policy(s.model);
  } else if (which == "delay") {
    SchemeConfig d = cfg;
    d.objective = Objective::DelayCost;
    s.policy = relative_value_iteration(build_scheme(d).mdp).policy;
  } else {
    s.policy = relative_value_iteration(s.model.mdp).policy;
  }
  s.mu = policy_average_cost(s.model.mdp, s.policy);
  return s;
}

std::map<std::string, cli::SeriesSpec> series_of(const cli::RunConfig& rc) {
  std::map<std::string, cli::SeriesSpec> out;
  for (const auto& s : rc.series) out.emplace(s.name, s);
  return out;
}

// Transition kernel keyed by (m, q, action) with next states collapsed to (m, q).
using Kernel = std::map<std::tuple<int, double, ActionId>, std::map<std::pair<int, double>, double>>;

bool collapse(const SchemeModel& m, Kernel& k, double tol) {
  bool consistent = true;
  for (StateId s = 0; s < static_cast<StateId>(m.states.size()); ++s) {
    const auto& st = m.states[s];
    for (const auto& r : m.mdp.rows(s)) {
      std::map<std::pair<int, double>, double> row;
      for (const auto& t : r.transitions) {
        row[{m.states[t.next].m, m.states[t.next].q.value(m.tau)}] += t.prob;
      }
      auto [it, fresh] = k.try_emplace({st.m, st.q.value(m.tau), r.action}, row);
      if (fresh) continue;
      if (it->second.size() != row.size()) consistent = false;
      for (const auto& [key, p] : row) {
        auto jt = it->second.find(key);
        if (jt == it->second.end() || std::abs(jt->second - p) > tol) consistent = false;
      }
    }
  }
  return consistent;
}

double kernel_gap(const Kernel& a, const Kernel& b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (const auto& [key, row] : a) {
    auto it = b.find(key);
    if (it == b.end() || it->second.size() != row.size()) return INFINITY;
    for (const auto& [next, p] : row) {
      auto jt = it->second.find(next);
      if (jt == it->second.end()) return INFINITY;
      worst = std::max(worst, std::abs(p - jt->second));
    }
  }
  return worst;
}

// Policy as (m, q) -> action; false when augmented copies disagree.
bool collapsed_policy(const SchemeModel& m, const Policy& p,
                      std::map<std::pair<int, double>, ActionId>& out) {
  bool ok = true;
  for (StateId s = 0; s < static_cast<StateId>(m.states.size()); ++s) {
    const auto key = std::make_pair(m.states[s].m, m.states[s].q.value(m.tau));
    auto [it, fresh] = out.try_emplace(key, p.decision[s]);
    if (!fresh && it->second != p.decision[s]) ok = false;
  }
  return ok;
}

SchemeConfig default_scheme(SchemeKind kind, double rho_sq) {
  const LtiSystem sys = LtiSystem::reference();
  SchemeConfig c;
  c.kind = kind;
  c.link = FblLink{100, 100, 0.0, 2};
  c.q_max = 10;
  c.cost = CostModel::scaled(rho_sq, kalman_steady_state(sys).Pbar0.trace());
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  std::cout << "acceptance suite" << std::endl;

  report(1, "steady-state covariance matches [2.5548,-1.6233;-1.6233,1.6719] within 5e-4", [] {
    const auto ss = kalman_steady_state(LtiSystem::reference());
    const double want[2][2] = {{2.5548, -1.6233}, {-1.6233, 1.6719}};
    double worst = 0.0;
    std::ostringstream d;
    d << "P=[";
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        worst = std::max(worst, std::abs(ss.Pbar0(i, j) - want[i][j]));
        d << g(ss.Pbar0(i, j)) << (j == 0 ? "," : (i == 0 ? ";" : "]"));
      }
    }
    d << " max|diff|=" << g(worst, 4);
    return Verdict{worst <= 5e-4, d.str()};
  });

  report(2, "spectral radius squared equals 1.8385^2 within 1e-3", [] {
    const double r = spectral_radius_sq(LtiSystem::reference().A());
    return Verdict{std::abs(r - kQuotedRhoSq) <= 1e-3,
                   "rho^2(A)=" + g(r) + " target=" + g(kQuotedRhoSq)};
  });

  report(3, "single-shot IR equals CC on a 100-point grid; both nonincreasing in SNR and energy",
         [] {
           const int ns[] = {50, 100, 200, 400, 800};
           const int bs[] = {20, 50, 100, 200};
           const double snrs[] = {-5.0, 0.0, 3.0, 6.0, 10.0};
           int points = 0, exact = 0, monotone_snr = 0, monotone_energy = 0;
           for (int n : ns) {
             for (int b : bs) {
               double prev_cc = 2.0, prev_ir = 2.0;
               for (double db : snrs) {
                 FblLink link{n, b, db, 2};
                 const double P = link.power();
                 const double one[1] = {P};
                 const int len1[1] = {n};
                 const double two[2] = {P, P};
                 const int len2[2] = {n, std::max(1, n / 2)};
                 const double cc = eps_cc(link, one);
                 const double ir = eps_ir(link, one, len1);
                 ++points;
                 exact += cc == ir;
                 monotone_snr += cc <= prev_cc && ir <= prev_ir;
                 monotone_energy += eps_cc(link, two) <= cc && eps_ir(link, two, len2) <= ir;
                 prev_cc = cc;
                 prev_ir = ir;
               }
             }
           }
           const bool ok = exact == points && monotone_snr == points && monotone_energy == points;
           return Verdict{ok, std::to_string(points) + " points, exact " + std::to_string(exact) +
                                  ", snr-monotone " + std::to_string(monotone_snr) +
                                  ", energy-monotone " + std::to_string(monotone_energy)};
         });

  report(4, "IR(1)=StdIR, SNCC(1)=StdCC, DNCC({1})=StdCC: kernels within 1e-12, same policies",
         [] {
           struct Pair {
             std::string name;
             SchemeConfig a, b;
           };
           std::vector<Pair> pairs;
           for (double rho : {2.0, 2.4, 4.4}) {
             SchemeConfig ir = default_scheme(SchemeKind::Ir, rho);
             ir.tau = 1.0;
             pairs.push_back({"IR(1)@" + g(rho), ir, default_scheme(SchemeKind::StdIr, rho)});
             SchemeConfig sn = default_scheme(SchemeKind::SnCc, rho);
             sn.alpha = 1.0;
             pairs.push_back({"SNCC(1)@" + g(rho), sn, default_scheme(SchemeKind::StdCc, rho)});
             for (DnMode mode : {DnMode::Augmented, DnMode::PairEnum}) {
               SchemeConfig dn = default_scheme(SchemeKind::DnCc, rho);
               dn.levels = {1.0};
               dn.dn_mode = mode;
               dn.pair_prev_alpha = 1.0;
               dn.pair_alpha = 1.0;
               pairs.push_back({std::string("DNCC({1},") +
                                    (mode == DnMode::Augmented ? "aug" : "pair") + ")@" + g(rho),
                                dn, default_scheme(SchemeKind::StdCc, rho)});
             }
           }
           double worst = 0.0;
           std::vector<std::string> bad;
           for (const auto& p : pairs) {
             const SchemeModel ma = build_scheme(p.a);
             const SchemeModel mb = build_scheme(p.b);
             Kernel ka, kb;
             const bool consistent = collapse(ma, ka, 1e-12) && collapse(mb, kb, 1e-12);
             const double gap = kernel_gap(ka, kb);
             worst = std::max(worst, gap);
             std::map<std::pair<int, double>, ActionId> pa, pb;
             const bool pol_ok =
                 collapsed_policy(ma, relative_value_iteration(ma.mdp).policy, pa) &&
                 collapsed_policy(mb, relative_value_iteration(mb.mdp).policy, pb) && pa == pb;
             if (!consistent || gap > 1e-12 || !pol_ok) bad.push_back(p.name);
           }
           std::string d = std::to_string(pairs.size()) + " pairs, max kernel gap " + g(worst, 3);
           for (const auto& b : bad) d += ", mismatch " + b;
           return Verdict{bad.empty(), d};
         });

  report(5, "relative value iteration matches exhaustive search within 1e-6 on 50 random MDPs",
         [] {
           double worst = 0.0;
           for (std::uint64_t seed = 1; seed <= 50; ++seed) {
             const FiniteMdp mdp = harq::testing::random_mdp(seed * 7919, 6, 3);
             const double a = relative_value_iteration(mdp).average_cost;
             const double b = exhaustive_policy_search(mdp).average_cost;
             worst = std::max(worst, std::abs(a - b));
           }
           return Verdict{worst <= 1e-6, "50 MDPs, max |gain diff| " + g(worst, 3)};
         });

  report(6, "simulated mean MSE within 2% of the analytic gain for each scheme at the default link",
         [] {
           EvalConfig e;
           e.trials = 1000;
           e.slots = 1000;
           e.seed = 1;
           std::vector<std::pair<std::string, SchemeConfig>> schemes;
           schemes.push_back({"StdIR", default_scheme(SchemeKind::StdIr, kQuotedRhoSq)});
           auto ir = default_scheme(SchemeKind::Ir, kQuotedRhoSq);
           ir.tau = 0.5;
           schemes.push_back({"IR(0.5)", ir});
           schemes.push_back({"StdCC", default_scheme(SchemeKind::StdCc, kQuotedRhoSq)});
           auto sn = default_scheme(SchemeKind::SnCc, kQuotedRhoSq);
           sn.alpha = 0.1;
           schemes.push_back({"SNCC(0.1)", sn});
           auto dn = default_scheme(SchemeKind::DnCc, kQuotedRhoSq);
           dn.levels = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
           schemes.push_back({"DNCC", dn});
           schemes.push_back({"ARQ", default_scheme(SchemeKind::Arq, kQuotedRhoSq)});
           auto fixed = default_scheme(SchemeKind::FixedHarq, kQuotedRhoSq);
           fixed.fixed_base = SchemeKind::StdCc;
           schemes.push_back({"FixedHARQ[StdCC]", fixed});

           bool ok = true;
           std::string d;
           for (const auto& [name, cfg] : schemes) {
             cli::SeriesSpec spec{name, cfg, "optimal"};
             const Series s = solve_series(spec);
             const double sim = simulate(s.model, s.policy, e).mu_mse;
             const double rel = (sim - s.mu) / s.mu;
             ok = ok && std::abs(rel) <= 0.02;
             d += name + " " + g(100 * rel, 3) + "% ";
           }
           return Verdict{ok, d};
         });

  report(7, "rho^2=4.4: mu(tau=0.5) < mu(tau=1) and var(tau=0.5) < min(var(0.2), var(1))", [] {
    const auto rc = cli::load_config(preset("fig5").string());
    const auto ser = series_of(rc);
    std::map<std::string, EvalReport> r;
    for (const char* n : {"tau_0.2", "tau_0.5", "tau_1.0"}) {
      const Series s = solve_series(ser.at(n));
      r[n] = simulate(s.model, s.policy, rc.eval);
    }
    const auto& a = r["tau_0.2"];
    const auto& b = r["tau_0.5"];
    const auto& c = r["tau_1.0"];
    const bool ok = b.mu_mse < c.mu_mse && b.sigma2_mse < std::min(a.sigma2_mse, c.sigma2_mse);
    return Verdict{ok, "mu " + g(a.mu_mse) + "/" + g(b.mu_mse) + "/" + g(c.mu_mse) +
                           ", var " + g(a.sigma2_mse) + "/" + g(b.sigma2_mse) + "/" +
                           g(c.sigma2_mse) + " (tau 0.2/0.5/1.0)"};
  });

  report(8, "rho^2=2.0: mu(0.1) < mu(StdCC) and mu(0.1) < mu(0.9) < mu(0.4)", [] {
    const auto rc = cli::load_config(preset("fig7").string());
    const auto ser = series_of(rc);
    std::map<std::string, double> mu, analytic;
    for (const char* n : {"std_cc", "alpha_0.1", "alpha_0.4", "alpha_0.9"}) {
      const Series s = solve_series(ser.at(n));
      mu[n] = simulate(s.model, s.policy, rc.eval).mu_mse;
      analytic[n] = s.mu;
    }
    const bool ok = mu["alpha_0.1"] < mu["std_cc"] && mu["alpha_0.1"] < mu["alpha_0.9"] &&
                    mu["alpha_0.9"] < mu["alpha_0.4"];
    std::string d = "simulated";
    for (const auto& [k, v] : mu) d += " " + k + "=" + g(v);
    d += "; analytic";
    for (const auto& [k, v] : analytic) d += " " + k + "=" + g(v);
    return Verdict{ok, d};
  });

  report(9, "DN <= SN <= StdCC at rho^2 2.4 and 4.4; DN-over-SN gain in [5%,30%] at 2.4 and larger at 4.4",
         [] {
           const auto rc = cli::load_config(preset("fig9").string());
           const auto ser = series_of(rc);
           std::map<std::string, double> mu;
           for (const auto& [name, spec] : ser) mu[name] = solve_series(spec).mu;
           bool ok = true;
           std::string d;
           std::map<std::string, double> gain;
           for (const char* rho : {"2.4", "4.4"}) {
             const double dn = mu[std::string("dn_") + rho];
             const double sn = mu[std::string("sn_") + rho];
             const double sc = mu[std::string("std_cc_") + rho];
             ok = ok && dn <= sn * (1 + 1e-9) && sn <= sc * (1 + 1e-9);
             gain[rho] = (sn - dn) / sn;
             d += std::string("rho^2=") + rho + ": DN " + g(dn) + " SN " + g(sn) + " StdCC " +
                  g(sc) + " improvement " + g(100 * gain[rho], 3) + "%; ";
           }
           ok = ok && gain["2.4"] >= 0.05 && gain["2.4"] <= 0.30 && gain["4.4"] > gain["2.4"];
           return Verdict{ok, d};
         });

  report(10, "ARQ is all-fresh; opt <= delay <= fixed <= ARQ for SNCC(0.1) at rho^2=2.4 at two seeds",
         [] {
           const auto rc = cli::load_config(preset("fig3").string());
           const auto ser = series_of(rc);
           const char* order[] = {"sn_mse", "sn_delay", "sn_fixed", "arq"};
           std::map<std::string, Series> s;
           for (const char* n : order) s.emplace(n, solve_series(ser.at(n)));
           const auto& arq = s.at("arq").policy.decision;
           const bool fresh = std::all_of(arq.begin(), arq.end(), [](ActionId a) { return a == 0; });
           bool ok = fresh;
           std::string d = std::string("ARQ all-fresh ") + (fresh ? "yes" : "no") + "; analytic";
           for (int i = 0; i < 4; ++i) {
             d += " " + g(s.at(order[i]).mu);
             if (i > 0) ok = ok && s.at(order[i - 1]).mu <= s.at(order[i]).mu * (1 + 1e-6);
           }
           for (std::uint64_t seed : {rc.eval.seed, rc.eval.seed + 1}) {
             EvalConfig e = rc.eval;
             e.seed = seed;
             std::vector<double> mu;
             for (const char* n : order) mu.push_back(simulate(s.at(n).model, s.at(n).policy, e).mu_mse);
             d += "; seed " + std::to_string(seed);
             for (int i = 0; i < 4; ++i) {
               d += " " + g(mu[i]);
               // Simulation noise allowance between neighbours.
               if (i > 0) ok = ok && mu[i - 1] <= mu[i] * 1.02;
             }
           }
           return Verdict{ok, d};
         });

  report(11, "variance recomputes exactly and histograms sum to 1 for every report", [] {
    std::size_t bad = 0;
    double worst = 0.0;
    for (const auto& r : all_reports) {
      double total = 0.0;
      for (const auto& b : r.histogram) total += b.freq;
      worst = std::max(worst, std::abs(total - 1.0));
      if (slot_variance(r.per_slot_mean, r.mu_mse) != r.sigma2_mse ||
          std::abs(total - 1.0) > 1e-9) {
        ++bad;
      }
    }
    return Verdict{bad == 0 && !all_reports.empty(),
                   std::to_string(all_reports.size()) + " reports, " + std::to_string(bad) +
                       " bad, max |sum-1| " + g(worst, 3)};
  });

  report(12, "reproduce twice with the same seed gives byte-identical CSVs", [] {
    const fs::path root = fs::temp_directory_path() / "harq_acceptance_repro";
    fs::remove_all(root);
    std::size_t files = 0, differ = 0;
    std::string d;
    for (const char* fig : {"fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"}) {
      for (const char* run : {"a", "b"}) {
        std::ostringstream out, err;
        const int code = cli::run({"reproduce", fig, "--out", (root / run).string(),
                                   "--threads", run[0] == 'a' ? "1" : "0"},
                                  out, err);
        if (code > 1) throw std::runtime_error(std::string(fig) + ": " + err.str());
      }
      for (const auto& e : fs::directory_iterator(root / "a" / fig)) {
        if (e.path().extension() != ".csv") continue;
        ++files;
        if (slurp(e.path()) != slurp(root / "b" / fig / e.path().filename())) {
          ++differ;
          d += " " + std::string(fig) + "/" + e.path().filename().string();
        }
      }
    }
    fs::remove_all(root);
    return Verdict{files > 0 && differ == 0,
                   std::to_string(files) + " CSVs compared over 8 figures, " +
                       std::to_string(differ) + " differ" + d};
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
