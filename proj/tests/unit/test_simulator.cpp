#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "tcindiff/errors.hpp"
#include "tcindiff/expansion.hpp"
#include "tcindiff/simulator.hpp"

using namespace tcindiff;

namespace {

MarketParams base(double eps) {
  MarketParams p;
  p.epsilon = eps;
  return p;
}

const ClaimSpec kCall = ClaimSpec::mollified_call(1.0, 1.0);

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Simulator, PolicyNames) {
  EXPECT_EQ(parse_policy("band"), PolicyKind::band);
  EXPECT_EQ(parse_policy("frictionless"), PolicyKind::frictionless_target);
  EXPECT_EQ(parse_policy("none"), PolicyKind::no_rebalance);
  EXPECT_EQ(parse_policy(to_string(PolicyKind::frictionless_target)), PolicyKind::frictionless_target);
  EXPECT_THROW(parse_policy("sometimes"), DomainError);
}

TEST(Simulator, NoTradeWhenStartingInsideBandForOneStep) {
  const MarketParams p = base(1e-2);
  const PortfolioPoint start{0.0, 0.2, 0.05, 1.0};
  SimOptions opt;
  opt.trace_paths = 4;
  const auto res = simulate(p, ClaimSpec::none(), Side::without_claim, {PolicyKind::band}, 4, 1, 5, start, opt);
  EXPECT_EQ(res.mean_cost, 0.0);
  EXPECT_EQ(res.trade_step_fraction, 0.0);
  ASSERT_EQ(res.trace.size(), 8u);
  for (std::size_t i = 0; i < res.trace.size(); i += 2) {
    const auto& end = res.trace[i + 1];
    EXPECT_STREQ(end.action, "hold");
    EXPECT_EQ(end.y, 0.05);
    EXPECT_EQ(end.B, 0.2);
  }
}

TEST(Simulator, InitialSellBringsHoldingToUpperEdge) {
  const MarketParams p = base(1e-2);
  const double y0 = 1.0;
  const PortfolioPoint start{0.0, 0.0, y0, 1.0};
  SimOptions opt;
  opt.trace_paths = 1;
  const auto res = simulate(p, ClaimSpec::none(), Side::without_claim, {PolicyKind::band}, 1, 10, 5, start, opt);
  const auto b = band(p, ClaimSpec::none(), Side::without_claim, 1.0, 0.0);
  const auto& r0 = res.trace.front();
  EXPECT_STREQ(r0.action, "sell");
  EXPECT_NEAR(r0.y, b.y_plus, 1e-15);
  EXPECT_NEAR(r0.traded, b.y_plus - y0, 1e-15);
  EXPECT_NEAR(r0.B, (1 - p.epsilon) * (y0 - b.y_plus), 1e-15);
  EXPECT_NEAR(r0.cost, p.epsilon * (y0 - b.y_plus), 1e-15);
}

TEST(Simulator, TraceReconcilesCashAndStaysInBand) {
  MarketParams p = base(1e-2);
  p.r = 0.03;
  SimOptions opt;
  opt.trace_paths = 3;
  const int n = 50;
  const PortfolioPoint start{0.0, 0.1, 0.0, 1.0};
  const auto res = simulate(p, kCall, Side::with_claim, {PolicyKind::band}, 3, n, 99, start, opt);
  ASSERT_EQ(res.trace.size(), 3u * (n + 1));
  const double growth = std::exp(p.r * p.T / n);
  double cost_sum = 0.0;
  for (int path = 0; path < 3; ++path) {
    double B = start.B, y = start.y;
    for (int k = 0; k <= n; ++k) {
      const auto& r = res.trace[path * (n + 1) + k];
      if (k > 0) B *= growth;
      B -= r.traded * r.S + r.cost;
      y += r.traded;
      EXPECT_NEAR(r.B, B, 1e-12);
      EXPECT_NEAR(r.y, y, 1e-14);
      EXPECT_NEAR(r.cost, p.epsilon * r.S * std::abs(r.traded), 1e-15);
      cost_sum += r.cost;
      if (k < n) {
        const auto b = band(p, kCall, Side::with_claim, r.S, r.t);
        EXPECT_GE(r.y, b.y_minus - 1e-13);
        EXPECT_LE(r.y, b.y_plus + 1e-13);
      } else {
        EXPECT_STREQ(r.action, "hold");
      }
    }
  }
  EXPECT_NEAR(res.mean_cost, cost_sum / 3, 1e-13);
}

TEST(Simulator, SeedDeterminismAcrossThreadCounts) {
  const MarketParams p = base(1e-2);
  const PortfolioPoint start{0.0, 0.0, 0.3, 1.0};
  SimOptions one, three;
  one.threads = 1;
  three.threads = 3;
  const auto a = simulate(p, kCall, Side::with_claim, {PolicyKind::band}, 301, 40, 7, start, one);
  const auto b = simulate(p, kCall, Side::with_claim, {PolicyKind::band}, 301, 40, 7, start, three);
  EXPECT_TRUE(same_bits(a.log_neg_mean_utility, b.log_neg_mean_utility));
  EXPECT_TRUE(same_bits(a.std_error, b.std_error));
  EXPECT_TRUE(same_bits(a.mean_wealth, b.mean_wealth));
  EXPECT_TRUE(same_bits(a.mean_cost, b.mean_cost));
  const auto c = simulate(p, kCall, Side::with_claim, {PolicyKind::band}, 301, 40, 8, start, one);
  EXPECT_FALSE(same_bits(a.mean_wealth, c.mean_wealth));
  EXPECT_NE(path_seed(1, 0), path_seed(1, 1));
  EXPECT_NE(path_seed(1, 0), path_seed(2, 0));
}

TEST(Simulator, AntitheticNeedsEvenPathCount) {
  SimOptions opt;
  opt.antithetic = true;
  const PortfolioPoint start{0.0, 0.0, 0.05, 1.0};
  EXPECT_THROW(simulate(base(1e-2), ClaimSpec::none(), Side::without_claim, {}, 3, 10, 1, start, opt), DomainError);
  const auto r = simulate(base(1e-2), ClaimSpec::none(), Side::without_claim, {}, 4, 10, 1, start, opt);
  EXPECT_EQ(r.n_paths, 4);
}

TEST(Simulator, RejectsBadInputs) {
  const PortfolioPoint ok{0.0, 0.0, 0.05, 1.0};
  EXPECT_THROW(simulate(base(1e-2), ClaimSpec::none(), Side::without_claim, {}, 10, 0, 1, ok), DomainError);
  EXPECT_THROW(simulate(base(1e-2), ClaimSpec::none(), Side::without_claim, {}, 0, 10, 1, ok), DomainError);
  EXPECT_THROW(simulate(base(1e-2), ClaimSpec::none(), Side::without_claim, {}, 10, 10, 1, {0.0, 0.0, 0.0, -1.0}),
               DomainError);
  EXPECT_THROW(simulate(base(1e-2), ClaimSpec::none(), Side::without_claim, {}, 10, 10, 1, {1.0, 0.0, 0.0, 1.0}),
               DomainError);
  EXPECT_THROW(simulate(base(1e-2), ClaimSpec::none(), Side::with_claim, {}, 10, 10, 1, ok), DomainError);
}

TEST(Simulator, CertaintyEquivalentExamples) {
  MarketParams p = base(1e-2);
  SimResult r;
  r.gamma = 1.0;
  r.delta = 1.0;
  r.log_neg_mean_utility = 0.0;  // mean utility -1
  EXPECT_NEAR(certainty_equivalent(r, p, 0.0).value, 0.0, 1e-15);
  r.log_neg_mean_utility = -5.0;
  EXPECT_NEAR(certainty_equivalent(r, p, 0.0).value, 5.0, 1e-15);
  p.gamma = 2.0;
  r.gamma = 2.0;
  r.rel_std_error = 0.01;
  const auto ce = certainty_equivalent(r, p, 0.0);
  EXPECT_NEAR(ce.value, 2.5, 1e-15);
  EXPECT_NEAR(ce.std_error, 0.005, 1e-15);
}

TEST(Simulator, FrictionlessMertonCertaintyEquivalent) {
  const MarketParams p = base(0.0);
  const PortfolioPoint start{0.0, 0.0, 0.05, 1.0};
  SimOptions opt;
  opt.antithetic = true;
  const auto res =
      simulate(p, ClaimSpec::none(), Side::without_claim, {PolicyKind::frictionless_target}, 20000, 200, 11, start, opt);
  const auto ce = certainty_equivalent(res, p, 0.0);
  // B + yS + (mu - r)^2 T / (2 sigma^2 gamma)
  EXPECT_NEAR(ce.value, 0.0525, 3 * ce.std_error + 5e-4) << "se=" << ce.std_error;
  EXPECT_EQ(res.mean_cost, 0.0);
}

TEST(Simulator, NoRebalanceKeepsHolding) {
  SimOptions opt;
  opt.trace_paths = 1;
  const PortfolioPoint start{0.0, 0.0, 0.7, 1.0};
  const auto res =
      simulate(base(1e-2), ClaimSpec::none(), Side::without_claim, {PolicyKind::no_rebalance}, 5, 20, 3, start, opt);
  EXPECT_EQ(res.mean_shares_traded, 0.0);
  for (const auto& r : res.trace) EXPECT_EQ(r.y, 0.7);
}

TEST(Simulator, TraceTableColumns) {
  SimOptions opt;
  opt.trace_paths = 2;
  const auto res = simulate(base(1e-2), ClaimSpec::none(), Side::without_claim, {}, 2, 3, 3, {0.0, 0.0, 0.0, 1.0}, opt);
  const auto t = trace_table(res);
  EXPECT_EQ(t.rows(), 8u);
  EXPECT_EQ(t.str().rfind("path,t,S,y,B,action,traded_shares,cost", 0), 0u);
}
