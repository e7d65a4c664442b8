#include <doctest.h>

#include <random>
#include <sstream>

#include "harq/errors.hpp"
#include "harq/pareto.hpp"

using namespace harq;

namespace {

ScanOptions small_opts(int trials = 200, int slots = 300) {
  ScanOptions o;
  o.eval.trials = trials;
  o.eval.slots = slots;
  o.eval.seed = 1;
  return o;
}

// Independent O(L^2) recheck of a front.
void check_front(const ParetoFront& f) {
  for (const auto& p : f.points) {
    CHECK(p.feasible);
    CHECK(p.on_front);
    for (const auto& q : f.scanned) {
      if (!q.feasible) continue;
      const bool better = q.mu <= p.mu && q.sigma2 <= p.sigma2 &&
                          (q.mu < p.mu || q.sigma2 < p.sigma2);
      CHECK_FALSE(better);
    }
  }
  for (const auto& p : f.scanned) CHECK(p.feasible == (p.sigma2 <= p.theta));
}

ScanPoint point(double mu, double s2, double theta, double tag) {
  ScanPoint p;
  p.params["tag"] = tag;
  p.mu = mu;
  p.sigma2 = s2;
  p.theta = theta;
  return p;
}

}  // namespace

TEST_CASE("dominance relation") {
  CHECK(dominates(1, 1, 2, 2));
  CHECK(dominates(1, 2, 2, 2));
  CHECK_FALSE(dominates(1, 1, 1, 1));
  CHECK_FALSE(dominates(1, 3, 2, 2));
}

TEST_CASE("singleton tau scan is standard IR") {
  const FblLink link;
  const CostModel cost = CostModel::scaled(4.4, 4.1722);
  const auto f = scan_ir(link, cost, {1.0}, small_opts());
  REQUIRE(f.scanned.size() == 1);
  SchemeConfig std_ir;
  std_ir.kind = SchemeKind::StdIr;
  std_ir.cost = cost;
  const auto rep = relative_value_iteration(build_scheme(std_ir).mdp);
  CHECK(f.scanned[0].mu == doctest::Approx(rep.average_cost).epsilon(1e-12));
  CHECK(f.scanned[0].policy.decision == rep.policy.decision);
  check_front(f);
}

TEST_CASE("singleton alpha scan is standard CC") {
  const FblLink link;
  const CostModel cost = CostModel::scaled(2.0, 4.1722);
  const auto f = scan_cc(link, cost, {1.0}, CcMode::Static, small_opts());
  REQUIRE(f.scanned.size() == 1);
  SchemeConfig std_cc;
  std_cc.kind = SchemeKind::StdCc;
  std_cc.cost = cost;
  CHECK(f.scanned[0].mu ==
        doctest::Approx(relative_value_iteration(build_scheme(std_cc).mdp).average_cost)
            .epsilon(1e-12));
}

TEST_CASE("threshold from the fixed HARQ policy") {
  EvalConfig e;
  e.trials = 40;
  e.slots = 120;
  SchemeConfig c;
  c.kind = SchemeKind::StdIr;
  c.cost = CostModel::scaled(2.0, 1.0);
  c.link.b = 1;
  CHECK(theta_upper_bound(c, e) == 0.0);

  // Always-failing link: the fixed rule alternates fresh and retransmitted
  // attempts, so the age runs 1, 2, 4, 5, 7, 8 and then sits at the cap.
  c.link.b = 1000;
  std::vector<double> trace;
  const int ages[] = {1, 2, 4, 5, 7, 8};
  for (int k = 0; k < e.slots; ++k) trace.push_back(c.cost(k < 6 ? ages[k] : 10));
  double mu = 0;
  for (double x : trace) mu += x;
  mu /= e.slots;
  double var = 0;
  for (double x : trace) var += (x - mu) * (x - mu);
  var /= e.slots;
  CHECK(theta_upper_bound(c, e) == doctest::Approx(var).epsilon(1e-10));

  c.link.b = 100;
  c.cost = CostModel::scaled(3.38, 4.1722);
  CHECK(theta_upper_bound(c, e) > 0.0);
}

TEST_CASE("random fronts survive a pairwise recheck") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<ScanPoint> pts;
    const int n = 1 + static_cast<int>(u(rng) * 12);
    for (int i = 0; i < n; ++i) {
      // Coarse values make ties common.
      pts.push_back(point(std::round(u(rng) * 5), std::round(u(rng) * 5),
                          std::round(u(rng) * 6), i));
    }
    const auto f = extract_front(pts);
    check_front(f);
    std::size_t feasible = 0;
    for (const auto& p : f.scanned) feasible += p.feasible;
    CHECK(f.points.size() + f.dominated_count == feasible);
    CHECK((f.status == ScanStatus::EmptyFeasibleSet) == (feasible == 0));
    if (f.pick) {
      const auto& best = f.points[*f.pick];
      for (const auto& p : f.points) {
        CHECK(best.mu <= p.mu);
        if (best.mu == p.mu) CHECK(best.sigma2 <= p.sigma2);
      }
    }
  }
}

TEST_CASE("equal points keep the earlier one") {
  const auto f = extract_front({point(1, 1, 5, 0), point(1, 1, 5, 1), point(2, 0.5, 5, 2)});
  REQUIRE(f.points.size() == 2);
  CHECK(f.points[0].params.at("tag") == 0);
  CHECK(f.points[1].params.at("tag") == 2);
  CHECK(f.dominated_count == 1);
  REQUIRE(f.pick);
  CHECK(f.points[*f.pick].params.at("tag") == 0);
}

TEST_CASE("lexicographic pick breaks ties on variance") {
  const auto f = extract_front({point(3, 1, 9, 0), point(1, 4, 9, 1), point(1, 2, 9, 2)});
  REQUIRE(f.pick);
  CHECK(f.points[*f.pick].params.at("tag") == 2);
}

TEST_CASE("global threshold can empty the feasible set") {
  ScanOptions o = small_opts();
  o.global_theta = -1.0;
  const auto f = scan_ir(FblLink{}, CostModel::scaled(2.0, 4.1722), {0.5, 1.0}, o);
  CHECK(f.status == ScanStatus::EmptyFeasibleSet);
  CHECK(f.points.empty());
  CHECK_FALSE(f.pick);
  for (const auto& p : f.scanned) CHECK(p.theta == -1.0);
}

TEST_CASE("richer CC policy classes never lose") {
  const std::vector<double> levels{0.1, 0.4, 0.7, 1.0};
  for (double rho : {2.0, 2.4}) {
    const CostModel cost = CostModel::scaled(rho, 4.1722);
    const ScanOptions o = small_opts(20, 100);
    const auto st = scan_cc(FblLink{}, cost, levels, CcMode::Static, o);
    const auto dyn = scan_cc(FblLink{}, cost, levels, CcMode::DynamicAugmented, o);
    REQUIRE(dyn.scanned.size() == 1);
    double best_static = 1e300;
    double at_one = 0;
    for (const auto& p : st.scanned) {
      best_static = std::min(best_static, p.mu);
      if (p.params.at("alpha") == 1.0) at_one = p.mu;
    }
    CHECK(dyn.scanned[0].mu <= best_static * (1 + 1e-6));
    CHECK(best_static <= at_one * (1 + 1e-6));
  }
}

TEST_CASE("level pairs enumerate the full grid") {
  const auto f = scan_cc(FblLink{}, CostModel::scaled(2.0, 4.1722), {0.4, 1.0},
                         CcMode::DynamicPairs, small_opts(20, 100));
  REQUIRE(f.scanned.size() == 4);
  CHECK(f.scanned[1].params.at("alpha_prev") == 0.4);
  CHECK(f.scanned[1].params.at("alpha") == 1.0);
  check_front(f);
}

TEST_CASE("front CSV round trip") {
  const auto f = scan_ir(FblLink{}, CostModel::scaled(4.4, 4.1722), {0.2, 0.5, 1.0},
                         small_opts());
  check_front(f);
  std::stringstream ss;
  write_front_csv(ss, f);
  const auto rows = read_front_csv(ss);
  REQUIRE(rows.size() == 3);
  CHECK(front_violations(rows).empty());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].params.at("tau") == f.scanned[i].params.at("tau"));
    CHECK(rows[i].mu == f.scanned[i].mu);
    CHECK(rows[i].sigma2 == f.scanned[i].sigma2);
    CHECK(rows[i].on_front == f.scanned[i].on_front);
  }

  // Tampering is detected.
  auto bad = rows;
  for (auto& r : bad) {
    r.feasible = true;
    r.on_front = true;
    r.theta = 1e300;
  }
  bad[0].mu = 1.0;
  bad[0].sigma2 = 0.0;
  bad[1].mu = 2.0;
  bad[1].sigma2 = 1.0;
  CHECK_FALSE(front_violations(bad).empty());

  std::stringstream junk("tau,mu_analytic\nx,y\n");
  CHECK_THROWS((void)read_front_csv(junk));
}

TEST_CASE("scans are deterministic") {
  const auto a = scan_ir(FblLink{}, CostModel::scaled(2.4, 4.1722), {0.3, 0.6}, small_opts());
  const auto b = scan_ir(FblLink{}, CostModel::scaled(2.4, 4.1722), {0.3, 0.6}, small_opts());
  std::stringstream sa, sb;
  write_front_csv(sa, a);
  write_front_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK_THROWS_AS((void)scan_ir(FblLink{}, CostModel::scaled(2.0, 1.0), {}, small_opts()),
                  ConfigError);
  CHECK_THROWS_AS((void)scan_ir(FblLink{}, CostModel::scaled(2.0, 1.0), {1.5}, small_opts()),
                  ConfigError);
}
