#include "harq/pareto.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "harq/errors.hpp"

namespace harq {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ScanPoint evaluate_point(const SchemeConfig& cfg, std::map<std::string, double> params,
                         const ScanOptions& opts) {
  const SchemeModel model = build_scheme(cfg);
  SolveReport sol = relative_value_iteration(model.mdp, opts.rvi);
  ScanPoint pt;
  pt.params = std::move(params);
  pt.mu = opts.objective == Objective::MseCost
              ? sol.average_cost
              : policy_average_cost(model.mdp, sol.policy);
  sol.policy.scheme_label = cfg.label();
  sol.policy.params = pt.params;
  pt.policy = sol.policy;
  const EvalReport rep = simulate_policy(model, pt.policy, opts.eval, opts.threads);
  pt.mu_sim = rep.mu_mse;
  pt.sigma2 = rep.sigma2_mse;
  const EvalReport worst =
      simulate_policy(model, fixed_harq_policy(model), opts.eval, opts.threads);
  pt.theta = worst.sigma2_mse;
  return pt;
}

SchemeConfig base_config(const FblLink& link, const CostModel& cost,
                         const ScanOptions& opts) {
  SchemeConfig cfg;
  cfg.link = link;
  cfg.cost = cost;
  cfg.q_max = opts.q_max;
  cfg.objective = opts.objective;
  return cfg;
}

}  // namespace

bool dominates(double mu_a, double s_a, double mu_b, double s_b) {
  return mu_a <= mu_b && s_a <= s_b && (mu_a < mu_b || s_a < s_b);
}

double theta_upper_bound(const SchemeConfig& cfg, const EvalConfig& eval,
                         unsigned threads) {
  const SchemeModel model = build_scheme(cfg);
  return simulate_policy(model, fixed_harq_policy(model), eval, threads).sigma2_mse;
}

ParetoFront extract_front(std::vector<ScanPoint> scanned,
                          std::optional<double> global_theta) {
  ParetoFront out;
  for (auto& p : scanned) {
    if (global_theta) p.theta = *global_theta;
    p.feasible = p.sigma2 <= p.theta;
    p.on_front = false;
  }
  for (std::size_t i = 0; i < scanned.size(); ++i) {
    if (!scanned[i].feasible) continue;
    bool keep = true;
    for (std::size_t j = 0; j < scanned.size() && keep; ++j) {
      if (j == i || !scanned[j].feasible) continue;
      const auto& a = scanned[j];
      const auto& b = scanned[i];
      if (dominates(a.mu, a.sigma2, b.mu, b.sigma2)) keep = false;
      if (j < i && a.mu == b.mu && a.sigma2 == b.sigma2) keep = false;
    }
    scanned[i].on_front = keep;
    if (keep) {
      out.points.push_back(scanned[i]);
    } else {
      ++out.dominated_count;
    }
  }
  if (out.points.empty()) {
    out.status = ScanStatus::EmptyFeasibleSet;
  } else {
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.points.size(); ++i) {
      const auto& c = out.points[i];
      const auto& b = out.points[best];
      if (c.mu < b.mu || (c.mu == b.mu && c.sigma2 < b.sigma2)) best = i;
    }
    out.pick = best;
  }
  out.scanned = std::move(scanned);
  return out;
}

ParetoFront scan_ir(const FblLink& link, const CostModel& cost,
                    const std::vector<double>& taus, const ScanOptions& opts) {
  if (taus.empty()) throw ConfigError("grid is empty", "pareto.taus");
  std::vector<ScanPoint> pts;
  for (double tau : taus) {
    SchemeConfig cfg = base_config(link, cost, opts);
    cfg.kind = SchemeKind::Ir;
    cfg.tau = tau;
    pts.push_back(evaluate_point(cfg, {{"tau", tau}}, opts));
  }
  return extract_front(std::move(pts), opts.global_theta);
}

ParetoFront scan_cc(const FblLink& link, const CostModel& cost,
                    const std::vector<double>& alphas, CcMode mode,
                    const ScanOptions& opts) {
  if (alphas.empty()) throw ConfigError("grid is empty", "pareto.alphas");
  std::vector<ScanPoint> pts;
  switch (mode) {
    case CcMode::Static:
      for (double a : alphas) {
        SchemeConfig cfg = base_config(link, cost, opts);
        cfg.kind = SchemeKind::SnCc;
        cfg.alpha = a;
        pts.push_back(evaluate_point(cfg, {{"alpha", a}}, opts));
      }
      break;
    case CcMode::DynamicPairs:
      for (double a1 : alphas) {
        for (double a2 : alphas) {
          SchemeConfig cfg = base_config(link, cost, opts);
          cfg.kind = SchemeKind::DnCc;
          cfg.levels = alphas;
          cfg.dn_mode = DnMode::PairEnum;
          cfg.pair_prev_alpha = a1;
          cfg.pair_alpha = a2;
          pts.push_back(evaluate_point(cfg, {{"alpha_prev", a1}, {"alpha", a2}}, opts));
        }
      }
      break;
    case CcMode::DynamicAugmented: {
      SchemeConfig cfg = base_config(link, cost, opts);
      cfg.kind = SchemeKind::DnCc;
      cfg.levels = alphas;
      cfg.dn_mode = DnMode::Augmented;
      pts.push_back(evaluate_point(
          cfg, {{"levels", static_cast<double>(alphas.size())}}, opts));
      break;
    }
  }
  return extract_front(std::move(pts), opts.global_theta);
}

void write_front_csv(std::ostream& os, const ParetoFront& front) {
  std::set<std::string> keys;
  for (const auto& p : front.scanned) {
    for (const auto& [k, v] : p.params) keys.insert(k);
  }
  for (const auto& k : keys) os << k << ',';
  os << "mu_analytic,mu_sim,sigma2_sim,theta,feasible,on_front\n";
  for (const auto& p : front.scanned) {
    for (const auto& k : keys) {
      auto it = p.params.find(k);
      if (it != p.params.end()) os << num(it->second);
      os << ',';
    }
    os << num(p.mu) << ',' << num(p.mu_sim) << ',' << num(p.sigma2) << ','
       << num(p.theta) << ',' << (p.feasible ? 1 : 0) << ',' << (p.on_front ? 1 : 0)
       << '\n';
  }
  os << "# status,"
     << (front.status == ScanStatus::Ok ? "ok" : "EmptyFeasibleSet") << '\n';
}

std::vector<FrontRow> read_front_csv(std::istream& is) {
  std::vector<FrontRow> rows;
  std::vector<std::string> header;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ConfigError("row has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()),
                        "front.csv");
    }
    FrontRow r;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string& h = header[i];
      const std::string& c = cells[i];
      if (h == "mu_analytic") r.mu = std::stod(c);
      else if (h == "mu_sim") r.mu_sim = std::stod(c);
      else if (h == "sigma2_sim") r.sigma2 = std::stod(c);
      else if (h == "theta") r.theta = std::stod(c);
      else if (h == "feasible") r.feasible = c == "1";
      else if (h == "on_front") r.on_front = c == "1";
      else if (!c.empty()) r.params[h] = std::stod(c);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::string> front_violations(const std::vector<FrontRow>& rows) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& b = rows[i];
    if (!b.on_front) continue;
    if (!b.feasible || b.sigma2 > b.theta) {
      out.push_back("row " + std::to_string(i + 1) + " is on the front but infeasible");
    }
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const auto& a = rows[j];
      if (j != i && a.feasible && dominates(a.mu, a.sigma2, b.mu, b.sigma2)) {
        out.push_back("row " + std::to_string(i + 1) + " is dominated by row " +
                      std::to_string(j + 1));
      }
    }
  }
  return out;
}

}  // namespace harq
