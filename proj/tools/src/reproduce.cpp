#include "reproduce.hpp"

#include <algorithm>
#include <sstream>

#include "harq/errors.hpp"

namespace harq::cli {
namespace {

const SeriesResult& find(const std::vector<SeriesResult>& rs, const std::string& name) {
  for (const auto& r : rs) {
    if (r.spec.name == name) return r;
  }
  throw ConfigError("figure preset needs a series named '" + name + "'", "series");
}

std::string kv(const std::string& k, double v) { return k + "=" + fmt(v); }

Assertion less(const std::string& what, const std::string& a, double va,
               const std::string& b, double vb) {
  return {what + ": " + a + " < " + b, kv(a, va) + " " + kv(b, vb), va < vb};
}

// Analytic gains may tie up to solver precision.
Assertion leq_gain(const std::string& a, double va, const std::string& b, double vb) {
  const double tol = 1e-6 * std::max(1.0, std::abs(vb));
  return {"gain " + a + " <= " + b, kv(a, va) + " " + kv(b, vb), va <= vb + tol};
}

std::vector<Assertion> fig3(const std::vector<SeriesResult>& rs, const EvalConfig& eval,
                            unsigned threads) {
  std::vector<Assertion> out;
  const auto& arq = find(rs, "arq");
  const bool all_fresh = std::all_of(arq.policy.decision.begin(), arq.policy.decision.end(),
                                     [](ActionId a) { return a == 0; });
  out.push_back({"ARQ policy is always fresh", "states=" + std::to_string(arq.policy.decision.size()),
                 all_fresh});
  const std::vector<std::string> order{"sn_mse", "sn_delay", "sn_fixed", "arq"};
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const auto& a = find(rs, order[i]);
    const auto& b = find(rs, order[i + 1]);
    out.push_back(leq_gain(order[i], a.mu_analytic, order[i + 1], b.mu_analytic));
  }
  // Simulated ordering, within 2% slack, at the configured seed and the next.
  for (std::uint64_t offset : {0ULL, 1ULL}) {
    EvalConfig e = eval;
    e.seed = eval.seed + offset;
    std::vector<double> mu;
    for (const auto& name : order) {
      const auto& r = find(rs, name);
      mu.push_back(offset == 0 ? r.report.mu_mse
                               : simulate_policy(r.model, r.policy, e, threads).mu_mse);
    }
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      out.push_back({"simulated " + order[i] + " <= " + order[i + 1] + " (2% slack, seed " +
                         std::to_string(e.seed) + ")",
                     kv(order[i], mu[i]) + " " + kv(order[i + 1], mu[i + 1]),
                     mu[i] <= mu[i + 1] * 1.02});
    }
  }
  return out;
}

std::vector<Assertion> tau_variance(const std::vector<SeriesResult>& rs) {
  const auto& t2 = find(rs, "tau_0.2");
  const auto& t5 = find(rs, "tau_0.5");
  const auto& t1 = find(rs, "tau_1.0");
  const double s2 = t2.report.sigma2_mse, s5 = t5.report.sigma2_mse, s1 = t1.report.sigma2_mse;
  return {less("variation", "tau_0.5", s5, "tau_0.2", s2),
          less("variation", "tau_0.5", s5, "tau_1.0", s1)};
}

std::vector<Assertion> fig5(const std::vector<SeriesResult>& rs) {
  const auto& t5 = find(rs, "tau_0.5");
  const auto& t1 = find(rs, "tau_1.0");
  auto out = tau_variance(rs);
  out.insert(out.begin(), less("average MSE", "tau_0.5", t5.mu_analytic, "tau_1.0",
                               t1.mu_analytic));
  return out;
}

std::vector<Assertion> fig7(const std::vector<SeriesResult>& rs) {
  const double a1 = find(rs, "alpha_0.1").mu_analytic;
  const double a4 = find(rs, "alpha_0.4").mu_analytic;
  const double a9 = find(rs, "alpha_0.9").mu_analytic;
  const double sc = find(rs, "std_cc").mu_analytic;
  return {less("average MSE", "alpha_0.1", a1, "std_cc", sc),
          less("average MSE", "alpha_0.1", a1, "alpha_0.9", a9),
          less("average MSE", "alpha_0.9", a9, "alpha_0.4", a4)};
}

std::vector<Assertion> fig8(const std::vector<SeriesResult>& rs) {
  const double a1 = find(rs, "alpha_0.1").report.sigma2_mse;
  const double a4 = find(rs, "alpha_0.4").report.sigma2_mse;
  const double a9 = find(rs, "alpha_0.9").report.sigma2_mse;
  return {less("variation", "alpha_0.1", a1, "alpha_0.4", a4),
          less("variation", "alpha_0.1", a1, "alpha_0.9", a9)};
}

std::vector<Assertion> fig9(const std::vector<SeriesResult>& rs) {
  std::vector<Assertion> out;
  double gain_low = 0.0;
  double gain_high = 0.0;
  for (const std::string rho : {"2.4", "4.4"}) {
    const double dn = find(rs, "dn_" + rho).mu_analytic;
    const double sn = find(rs, "sn_" + rho).mu_analytic;
    const double sc = find(rs, "std_cc_" + rho).mu_analytic;
    out.push_back(leq_gain("dn_" + rho, dn, "sn_" + rho, sn));
    out.push_back(leq_gain("sn_" + rho, sn, "std_cc_" + rho, sc));
    (rho == "2.4" ? gain_low : gain_high) = (sn - dn) / sn;
  }
  out.push_back({"DN over SN improvement at rho^2=2.4 within [5%, 30%]",
                 kv("improvement", gain_low), gain_low >= 0.05 && gain_low <= 0.30});
  out.push_back({"DN over SN improvement grows from rho^2=2.4 to 4.4",
                 kv("at_2.4", gain_low) + " " + kv("at_4.4", gain_high), gain_high > gain_low});
  return out;
}

std::vector<Assertion> fig10(const std::vector<SeriesResult>& rs) {
  const auto& sc = find(rs, "std_cc");
  const auto& sn = find(rs, "sn");
  const auto& dn = find(rs, "dn");
  return {less("simulated MSE", "sn", sn.report.mu_mse, "std_cc", sc.report.mu_mse),
          less("simulated MSE", "dn", dn.report.mu_mse, "std_cc", sc.report.mu_mse),
          less("variation", "sn", sn.report.sigma2_mse, "std_cc", sc.report.sigma2_mse),
          less("variation", "dn", dn.report.sigma2_mse, "std_cc", sc.report.sigma2_mse)};
}

}  // namespace

std::vector<Assertion> figure_assertions(const std::string& figure,
                                         const std::vector<SeriesResult>& results,
                                         const EvalConfig& eval, unsigned threads) {
  if (figure == "fig3") return fig3(results, eval, threads);
  if (figure == "fig4" || figure == "fig6") return tau_variance(results);
  if (figure == "fig5") return fig5(results);
  if (figure == "fig7") return fig7(results);
  if (figure == "fig8") return fig8(results);
  if (figure == "fig9") return fig9(results);
  if (figure == "fig10") return fig10(results);
  throw ConfigError("unknown figure '" + figure + "'", "figure");
}

}  // namespace harq::cli
