#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "tcindiff/bs_engine.hpp"
#include "tcindiff/errors.hpp"
#include "tcindiff/market_model.hpp"

using namespace tcindiff;

namespace {

MarketParams base(double eps = 1e-3) {
  MarketParams p;
  p.epsilon = eps;
  return p;
}

bool has_error(const ValidationReport& r, const std::string& needle) {
  for (const auto& e : r.errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Validation, LinearClaimMarginIsMertonScale) {
  const auto rep = validate_params(base(), ClaimSpec::linear(0.5));
  EXPECT_TRUE(rep.passed);
  EXPECT_NEAR(rep.margin, 0.05, 1e-15);
}

TEST(Validation, MollifiedCallMarginMatchesIndependentSup) {
  const MarketParams p = base();
  const auto rep = validate_params(p, ClaimSpec::mollified_call(1.0, 1.0));
  // ValidationReport margin uses the unshifted payoff g at maturity extension dT.
  const double sup = oracle::golden_max(
      [&](double x) {
        const double S = std::exp(x);
        return S * S * oracle::call_gamma(S, 1.0, 1.0, 0.0, oracle::kSigma());
      },
      -5.0, 5.0);
  EXPECT_NEAR(sup, 0.2820947917738782, 1e-9);  // 1/(2 sqrt(pi)) for sigma^2 dT = 2
  EXPECT_NEAR(rep.margin, 0.05 - sup, 1e-8);
  EXPECT_FALSE(rep.passed);
  bool warned = false;
  for (const auto& w : rep.warnings) warned |= w.find("margin") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(Validation, EpsilonOutOfRange) {
  auto rep = validate_params(base(1.2), ClaimSpec::none());
  EXPECT_FALSE(rep.passed);
  EXPECT_TRUE(has_error(rep, "epsilon out of (0,1)"));
  rep = validate_params(base(-0.1), ClaimSpec::none());
  EXPECT_TRUE(has_error(rep, "epsilon out of (0,1)"));
}

TEST(Validation, ZeroEpsilonAndZeroRateWarn) {
  const auto rep = validate_params(base(0.0), ClaimSpec::none());
  EXPECT_TRUE(rep.passed);
  EXPECT_EQ(rep.warnings.size(), 2u);
}

TEST(Validation, RejectsBadMarket) {
  MarketParams p = base();
  p.mu = 0.0;
  EXPECT_TRUE(has_error(validate_params(p, ClaimSpec::none()), "mu must exceed r"));
  p = base();
  p.sigma = -1.0;
  EXPECT_TRUE(has_error(validate_params(p, ClaimSpec::none()), "sigma"));
  p = base();
  p.T = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(validate_params(p, ClaimSpec::none()).passed);
}

TEST(Validation, NonFiniteCustomEvaluator) {
  auto eval = [](double S) {
    PayoffDerivatives d{0.1 * S, 0.1, 0.0, 0.0, 0.0};
    if (S > 5.0) d.g2 = std::numeric_limits<double>::quiet_NaN();
    return d;
  };
  const auto rep = validate_params(base(), ClaimSpec::custom(eval));
  EXPECT_FALSE(rep.passed);
  EXPECT_TRUE(has_error(rep, "non-finite payoff evaluator output at S="));
}

TEST(Validation, CustomWithoutEvaluator) {
  ClaimSpec c;
  c.kind = ClaimKind::custom;
  EXPECT_TRUE(has_error(validate_params(base(), c), "custom claim needs all derivative evaluators"));
}

TEST(Discount, Examples) {
  MarketParams p = base();
  EXPECT_EQ(discount_factor(p, 1.0), 1.0);
  EXPECT_EQ(discount_factor(p, 0.0), 1.0);
  p.r = 0.05;
  EXPECT_NEAR(discount_factor(p, 0.0), std::exp(-0.05), 1e-15);
  EXPECT_EQ(discount_factor(p, p.T), 1.0);
  EXPECT_THROW(discount_factor(p, -0.5), DomainError);
  EXPECT_THROW(discount_factor(p, 1.5), DomainError);
}

TEST(Utility, ExamplesMonotoneConcave) {
  EXPECT_EQ(utility(0.0, 1.0), -1.0);
  EXPECT_NEAR(utility(1.0, 2.0), -std::exp(-2.0), 1e-16);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng), g = 0.1 + std::abs(u(rng));
    const double lo = std::min(a, b), hi = std::max(a, b);
    EXPECT_LE(utility(lo, g), utility(hi, g));
    EXPECT_GE(utility(0.5 * (a + b), g), 0.5 * (utility(a, g) + utility(b, g)) - 1e-15);
  }
}

TEST(CashValue, ExamplesAndIdentity) {
  EXPECT_NEAR(cash_value(2.0, 3.0, 0.01), 5.94, 1e-14);
  EXPECT_NEAR(cash_value(-2.0, 3.0, 0.01), -6.06, 1e-14);
  EXPECT_EQ(cash_value(0.0, 3.0, 0.01), 0.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const double y = u(rng), S = std::exp(u(rng)), e = std::abs(u(rng)) / 4;
    EXPECT_NEAR(cash_value(y, S, e), y * S - e * std::abs(y) * S, 1e-12 * (1 + std::abs(y * S)));
  }
}

TEST(TerminalWealth, Examples) {
  MarketParams p = base(0.01);
  PortfolioPoint pt{1.0, 0.3, 2.0, 1.5};
  EXPECT_NEAR(terminal_wealth(pt, p, ClaimSpec::none(), Side::without_claim), 0.3 + 2.0 * 1.5 * 0.99, 1e-14);
  // Linear claim: deliver 0.5 shares' worth; y - g' = 1.5 shares liquidated.
  EXPECT_NEAR(terminal_wealth(pt, p, ClaimSpec::linear(0.5), Side::with_claim), 0.3 + 1.5 * 1.5 * 0.99, 1e-14);
  pt.y = 0.2;
  EXPECT_NEAR(terminal_wealth(pt, p, ClaimSpec::linear(0.5), Side::with_claim), 0.3 - 0.3 * 1.5 * 1.01, 1e-14);
  pt.t = 0.5;
  EXPECT_THROW(terminal_wealth(pt, p, ClaimSpec::none(), Side::without_claim), DomainError);
}

TEST(TerminalWealth, FrictionlessSettlesPayoff) {
  const MarketParams p = base(0.0);
  const auto c = ClaimSpec::mollified_call(1.0, 1.0);
  for (double S : {0.3, 1.0, 2.7}) {
    const PortfolioPoint pt{1.0, 0.1, 0.4, S};
    const double g = oracle::call_price(S, 1.0, 1.0, 0.0, oracle::kSigma());
    EXPECT_NEAR(terminal_wealth(pt, p, c, Side::with_claim), 0.1 + 0.4 * S - g, 1e-12);
  }
}

TEST(Payoff, MollifiedCallDominatesIntrinsic) {
  const MarketParams p = base();
  const auto c = ClaimSpec::mollified_call(1.0, 1.0);
  for (int i = 0; i <= 200; ++i) {
    const double S = std::exp(-3.0 + 6.0 * i / 200);
    const auto d = payoff(c, p, S);
    EXPECT_GT(d.g, std::max(S - 1.0, 0.0));
    EXPECT_NEAR(d.g, oracle::call_price(S, 1.0, 1.0, 0.0, oracle::kSigma()), 1e-13);
    EXPECT_NEAR(d.g2, oracle::call_gamma(S, 1.0, 1.0, 0.0, oracle::kSigma()), 1e-12 * (1 + d.g2));
  }
}

TEST(Payoff, PutParity) {
  MarketParams p = base();
  p.r = 0.03;
  const auto call = ClaimSpec::mollified_call(1.2, 0.5), put = ClaimSpec::mollified_put(1.2, 0.5);
  for (double S : {0.5, 1.0, 2.0}) {
    const auto c = payoff(call, p, S), q = payoff(put, p, S);
    EXPECT_NEAR(c.g - q.g, S - 1.2 * std::exp(-0.03 * 0.5), 1e-13);
    EXPECT_NEAR(c.g1 - q.g1, 1.0, 1e-13);
    EXPECT_NEAR(c.g2, q.g2, 1e-13);
  }
}
