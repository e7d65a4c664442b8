#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "harq/errors.hpp"
#include "harq/policy_eval.hpp"

using namespace harq;

namespace {

SchemeConfig cfg(SchemeKind kind, double rho_sq = 2.0) {
  SchemeConfig c;
  c.kind = kind;
  c.q_max = 10;
  c.cost = CostModel::scaled(rho_sq, 4.1722);
  return c;
}

EvalConfig eval(int trials, int slots, std::uint64_t seed = 1) {
  EvalConfig e;
  e.trials = trials;
  e.slots = slots;
  e.seed = seed;
  return e;
}

Policy optimal(const SchemeModel& m) { return relative_value_iteration(m.mdp).policy; }

}  // namespace

TEST_CASE("error-free link stays at age one") {
  SchemeConfig c = cfg(SchemeKind::StdIr);
  c.link.b = 1;
  const SchemeModel m = build_scheme(c);
  const auto rep = simulate_policy(m, always_fresh_policy(m), eval(50, 200));
  CHECK(rep.mu_mse == c.cost(1.0));
  CHECK(rep.sigma2_mse == 0.0);
  for (double a : rep.per_slot_mean_age) CHECK(a == 1.0);
  REQUIRE(rep.histogram.size() == 1);
  CHECK(rep.histogram[0].freq == 1.0);
}

TEST_CASE("always-failing link ramps to the cap and stays") {
  SchemeConfig c = cfg(SchemeKind::StdIr);
  c.link.b = 1000;  // ten bits per symbol at 0 dB: decoding never succeeds
  const SchemeModel m = build_scheme(c);
  for (int K : {20, 200, 2000}) {
    const auto rep = simulate_policy(m, always_fresh_policy(m), eval(8, K));
    std::vector<double> ramp(K);
    for (int k = 0; k < K; ++k) ramp[k] = c.cost(std::min(k + 1, 10));
    double mu = 0;
    for (double x : ramp) mu += x;
    mu /= K;
    double var = 0;
    for (double x : ramp) var += (x - mu) * (x - mu);
    var /= K;
    CHECK(rep.mu_mse == doctest::Approx(mu).epsilon(1e-12));
    CHECK(rep.sigma2_mse == doctest::Approx(var).epsilon(1e-10));
    CHECK(rep.per_slot_mean.back() == c.cost(10.0));
  }
}

TEST_CASE("variance is recomputable from the report") {
  SchemeConfig c = cfg(SchemeKind::SnCc, 2.4);
  c.alpha = 0.4;
  const SchemeModel m = build_scheme(c);
  const auto rep = simulate_policy(m, optimal(m), eval(100, 300, 7));
  CHECK(slot_variance(rep.per_slot_mean, rep.mu_mse) == rep.sigma2_mse);
  double mu = 0;
  for (double x : rep.per_slot_mean) mu += x;
  CHECK(mu / rep.per_slot_mean.size() == doctest::Approx(rep.mu_mse).epsilon(1e-13));
  double total = 0;
  for (const auto& b : rep.histogram) total += b.freq;
  CHECK(std::abs(total - 1.0) <= 1e-9);
}

TEST_CASE("histogram examples") {
  const std::vector<double> flat(17, 3.5);
  auto h = mse_histogram(flat, 20);
  REQUIRE(h.size() == 1);
  CHECK(h[0].freq == 1.0);

  const std::vector<double> two{1.0, 4.0, 1.0, 4.0};
  h = mse_histogram(two, 2);
  REQUIRE(h.size() == 2);
  CHECK(h[0].freq == 0.5);
  CHECK(h[1].freq == 0.5);
  CHECK(h[0].lo == 1.0);
  CHECK(h[1].hi == 4.0);
  CHECK_THROWS_AS((void)mse_histogram(std::vector<double>{}, 3), DomainError);
}

TEST_CASE("independent re-simulation reproduces the report") {
  SchemeConfig c = cfg(SchemeKind::DnCc, 2.4);
  c.levels = {0.2, 0.6, 1.0};
  const SchemeModel m = build_scheme(c);
  const Policy p = optimal(m);
  const EvalConfig e = eval(37, 150, 99);
  const auto rep = simulate_policy(m, p, e, 3);

  std::vector<double> sums(e.slots, 0.0);
  std::vector<double> samples;
  for (int t = 0; t < e.trials; ++t) {
    TrialRng rng(e.seed, t);
    StateId s = 0;
    for (int k = 0; k < e.slots; ++k) {
      sums[k] += m.mse[s];
      samples.push_back(m.mse[s]);
      const StepModel& st = m.step(s, p.decision[s]);
      Outcome o = Outcome::Success;
      if (rng.uniform() < st.eps_primary) {
        o = Outcome::Fail;
      } else if (st.superposed && rng.uniform() < st.eps_secondary) {
        o = Outcome::OldOkNewFail;
      }
      s = st.next[static_cast<int>(o)];
      REQUIRE(s >= 0);
    }
  }
  for (int k = 0; k < e.slots; ++k) {
    CHECK(rep.per_slot_mean[k] == doctest::Approx(sums[k] / e.trials).epsilon(1e-12));
  }

  // Recount against the report's bin edges.
  const auto& h = rep.histogram;
  REQUIRE(h.size() == static_cast<std::size_t>(e.histogram_bins));
  const double lo = *std::min_element(samples.begin(), samples.end());
  const double hi = *std::max_element(samples.begin(), samples.end());
  CHECK(h.front().lo == lo);
  CHECK(h.back().hi == hi);
  std::vector<std::size_t> count(h.size(), 0);
  const double width = (hi - lo) / h.size();
  for (double v : samples) {
    auto i = static_cast<std::size_t>(std::floor((v - lo) / width));
    count[std::min(i, h.size() - 1)]++;
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    CHECK(h[i].freq == static_cast<double>(count[i]) / samples.size());
  }
}

TEST_CASE("reports do not depend on the thread count") {
  SchemeConfig c = cfg(SchemeKind::Ir, 4.4);
  c.tau = 0.5;
  const SchemeModel m = build_scheme(c);
  const Policy p = optimal(m);
  const EvalConfig e = eval(101, 250, 5);
  std::string first;
  for (unsigned th : {1u, 2u, 5u, 0u}) {
    const auto rep = simulate_policy(m, p, e, th);
    std::ostringstream os;
    write_trace_csv(os, rep);
    write_histogram_csv(os, rep);
    write_summary_csv(os, rep);
    if (first.empty()) first = os.str();
    CHECK(os.str() == first);
  }
  const auto other = simulate_policy(m, p, eval(101, 250, 6));
  std::ostringstream os;
  write_trace_csv(os, other);
  CHECK(os.str() != first.substr(0, os.str().size()));
}

TEST_CASE("larger budgets land closer to the analytic gain") {
  SchemeConfig c = cfg(SchemeKind::StdIr, 2.0);
  const SchemeModel m = build_scheme(c);
  const Policy p = optimal(m);
  const double g = policy_average_cost(m.mdp, p);
  int closer = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const double small = simulate_policy(m, p, eval(4, 100, 1000 + r)).mu_mse;
    const double big = simulate_policy(m, p, eval(400, 1000, 1000 + r)).mu_mse;
    if (std::abs(big - g) < std::abs(small - g)) ++closer;
  }
  CHECK(closer >= 19);
}

TEST_CASE("a long single trajectory matches the stationary average") {
  SchemeConfig c = cfg(SchemeKind::SnCc, 2.0);
  c.alpha = 0.4;
  const SchemeModel m = build_scheme(c);
  const Policy p = optimal(m);
  const auto rep = simulate_policy(m, p, eval(1, 1'000'000, 3));
  CHECK(rep.mu_mse == doctest::Approx(policy_average_cost(m.mdp, p)).epsilon(0.01));
}

TEST_CASE("full-size run agrees with the analytic gain") {
  SchemeConfig c = cfg(SchemeKind::StdIr, 1.8385 * 1.8385);
  const SchemeModel m = build_scheme(c);
  const Policy p = optimal(m);
  const auto rep = simulate_policy(m, p, eval(1000, 1000, 1));
  CHECK(rep.mu_mse == doctest::Approx(policy_average_cost(m.mdp, p)).epsilon(0.02));
}

TEST_CASE("budget, policy and config errors") {
  const SchemeModel m = build_scheme(cfg(SchemeKind::StdCc));
  EvalConfig e = eval(1000, 1000);
  e.max_slot_events = 999'999;
  CHECK_THROWS_AS((void)simulate_policy(m, always_fresh_policy(m), e), BudgetExceeded);

  Policy bad = always_fresh_policy(m);
  bad.decision.pop_back();
  CHECK_THROWS_AS((void)simulate_policy(m, bad, eval(1, 1)), InvalidPolicy);
  bad = always_fresh_policy(m);
  bad.decision[0] = 1;  // (1,1) has nothing to retransmit
  CHECK_THROWS_AS((void)simulate_policy(m, bad, eval(1, 1)), InvalidPolicy);

  CHECK_THROWS_AS((void)simulate_policy(m, always_fresh_policy(m), eval(0, 10)), ConfigError);
  CHECK_THROWS_AS((void)simulate_policy(m, always_fresh_policy(m), eval(10, 0)), ConfigError);
}

TEST_CASE("trial streams are distinct and reproducible") {
  TrialRng a(1, 0), b(1, 0), c(1, 1), d(2, 0);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  int same_c = 0, same_d = 0;
  TrialRng a2(1, 0);
  for (int i = 0; i < 100; ++i) {
    const double x = a2.uniform();
    same_c += x == c.uniform();
    same_d += x == d.uniform();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
}
