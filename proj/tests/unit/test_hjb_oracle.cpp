#include <gtest/gtest.h>

#include <cmath>

#include "tcindiff/errors.hpp"
#include "tcindiff/expansion.hpp"
#include "tcindiff/hjb_oracle.hpp"

using namespace tcindiff;

namespace {

MarketParams base(double eps) {
  MarketParams p;
  p.epsilon = eps;
  return p;
}

const ClaimSpec kCall = ClaimSpec::mollified_call(1.0, 1.0);

GridSpec small_grid(const ClaimSpec& c) {
  GridSpec g = default_grid(c);
  g.n_S = 64;
  g.n_y = 64;
  g.n_t = 128;
  g.retained_slices = 5;
  g.window_halfwidths = 2.0;
  return g;
}

// Shared solves, computed once per test binary.
struct Fixture {
  MarketParams p = base(1e-2);
  QGrid one = solve_qvi(small_grid(kCall), p, kCall, Side::without_claim);
  QGrid with = solve_qvi(small_grid(kCall), p, kCall, Side::with_claim);
};
const Fixture& fx() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST(Oracle, FinalSliceIsFinalCondition) {
  for (const QGrid* q : {&fx().one, &fx().with}) {
    const auto& last = q->slices.back();
    ASSERT_EQ(last.t, q->params.T);
    const double a = q->params.gamma * q->params.epsilon;
    for (int i = 0; i < q->n_S(); ++i) {
      const double g1 = q->side == Side::with_claim ? payoff(kCall, q->params, q->S[i]).g1 : 0.0;
      for (int k = 0; k < q->n_y(); ++k) {
        const double want = a * q->S[i] * std::abs(q->y(i, k) - g1);
        EXPECT_NEAR(last.log_q[i * q->n_y() + k], want, 1e-14 * (1 + want));
      }
    }
  }
}

TEST(Oracle, PositiveAndGradientConstraintsHold) {
  for (const QGrid* q : {&fx().one, &fx().with}) {
    for (const auto& s : q->slices) {
      const double delta = s.delta;
      for (int i = 0; i < q->n_S(); ++i) {
        const double a = q->params.gamma * q->params.epsilon * q->S[i] / delta * q->dy[i];
        for (int k = 0; k + 1 < q->n_y(); ++k) {
          const double d = s.log_q[i * q->n_y() + k + 1] - s.log_q[i * q->n_y() + k];
          ASSERT_TRUE(std::isfinite(s.log_q[i * q->n_y() + k]));
          // buy-transform nondecreasing, sell-transform nonincreasing
          EXPECT_GE(d, -a - 1e-12 * (1 + a)) << "i=" << i << " k=" << k << " t=" << s.t;
          EXPECT_LE(d, a + 1e-12 * (1 + a)) << "i=" << i << " k=" << k << " t=" << s.t;
        }
      }
    }
  }
}

TEST(Oracle, ExtensionBeyondWindowIsExact) {
  const QGrid& q = fx().one;
  const std::size_t s = 0;
  const double a = q.params.gamma * q.params.epsilon / q.slices[s].delta;
  for (int i : {10, 32, 50}) {
    const double lo = q.y(i, 0), hi = q.y(i, q.n_y() - 1);
    const double h = 0.37;
    EXPECT_NEAR(q.column_log_q(s, i, lo - h), q.column_log_q(s, i, lo) + a * q.S[i] * h, 1e-12);
    EXPECT_NEAR(q.column_log_q(s, i, hi + h), q.column_log_q(s, i, hi) + a * q.S[i] * h, 1e-12);
    // Edge nodes agree with the extension slope to discretization accuracy.
    const double edge = q.slices[s].log_q[i * q.n_y()] - q.slices[s].log_q[i * q.n_y() + 1];
    EXPECT_NEAR(edge, a * q.S[i] * q.dy[i], 1e-6);
  }
}

TEST(Oracle, SandwichBetweenCandidates) {
  for (const QGrid* q : {&fx().one, &fx().with}) {
    const auto rep = sandwich_report(*q, q->params, kCall, q->side);
    EXPECT_GT(rep.nodes, 1000);
    EXPECT_GE(rep.fraction, 0.99) << rep.summary();
  }
}

TEST(Oracle, PriceNearExpansion) {
  const double price = oracle_price(fx().with, fx().one, 1.0, 0.0);
  const auto exp = indifference_price(fx().p, kCall, 1.0, 0.0);
  // Oracle and expansion share the leading terms; they differ at O(epsilon).
  EXPECT_GT(price, exp.v0);
  EXPECT_NEAR(price, exp.price, 5 * fx().p.epsilon);
}

TEST(Oracle, LinearClaimPriceIncludesInitialPurchaseCost) {
  const MarketParams p = base(1e-2);
  const auto lin = ClaimSpec::linear(0.5);
  const GridSpec g = small_grid(lin);
  const QGrid w = solve_qvi(g, p, lin, Side::with_claim);
  const QGrid one = solve_qvi(g, p, lin, Side::without_claim);
  // On lattice columns the identity holds to solver accuracy; between them ln S interpolation adds O(h^2).
  for (int i : {w.n_S() / 2 - 5, w.n_S() / 2, w.n_S() / 2 + 5})
    EXPECT_NEAR(oracle_price(w, one, w.S[i], 0.0), (1 + p.epsilon) * 0.5 * w.S[i], 1e-6);
  for (double S : {0.8, 1.25}) EXPECT_NEAR(oracle_price(w, one, S, 0.0), (1 + p.epsilon) * 0.5 * S, 1e-4);
}

TEST(Oracle, ZeroClaimMatchesNoClaimBitForBit) {
  const MarketParams p = base(1e-2);
  GridSpec g = small_grid(ClaimSpec::none());
  g.error_estimate = false;
  const QGrid a = solve_qvi(g, p, ClaimSpec::none(), Side::without_claim);
  const QGrid b = solve_qvi(g, p, ClaimSpec::linear(0.0), Side::with_claim);
  ASSERT_EQ(a.slices.size(), b.slices.size());
  for (std::size_t s = 0; s < a.slices.size(); ++s) EXPECT_EQ(a.slices[s].log_q, b.slices[s].log_q);
}

TEST(Oracle, RefinementConverges) {
  // Doubling every axis moves the price by a small fraction of the friction premium.
  const MarketParams p = base(1e-2);
  const double v0 = claim_v0(kCall, p, 1.0, 0.0).V0;
  double prev = NAN;
  for (int level = 0; level < 3; ++level) {
    GridSpec g = default_grid(kCall);
    g.n_S = 32 << level;
    g.n_y = 64 << level;
    g.n_t = 64 << level;
    g.window_halfwidths = 1.5;
    g.error_estimate = false;
    const double v = oracle_price(solve_qvi(g, p, kCall, Side::with_claim), solve_qvi(g, p, kCall, Side::without_claim),
                                  1.0, 0.0);
    if (level > 0) EXPECT_LT(std::abs(v - prev), 2e-3 * (v - v0)) << "level " << level;
    prev = v;
  }
}

TEST(Oracle, PenaltyModeAgreesWithProjection) {
  const MarketParams p = base(1e-2);
  GridSpec g = small_grid(kCall);
  g.error_estimate = false;
  const double proj =
      oracle_price(solve_qvi(g, p, kCall, Side::with_claim), solve_qvi(g, p, kCall, Side::without_claim), 1.0, 0.0);
  g.mode = ConstraintMode::penalty;
  const double pen =
      oracle_price(solve_qvi(g, p, kCall, Side::with_claim), solve_qvi(g, p, kCall, Side::without_claim), 1.0, 0.0);
  EXPECT_NEAR(pen, proj, 1e-4);
}

TEST(Oracle, CoarseYGridIsAResolutionError) {
  GridSpec g = small_grid(kCall);
  g.n_y = 16;
  g.window_halfwidths = 3.0;
  EXPECT_THROW(solve_qvi(g, base(1e-2), kCall, Side::without_claim), ResolutionError);
}

TEST(Oracle, RejectsBadInputs) {
  GridSpec g = small_grid(kCall);
  g.n_S = 8;
  EXPECT_THROW(solve_qvi(g, base(1e-2), kCall, Side::without_claim), DomainError);
  EXPECT_THROW(solve_qvi(small_grid(kCall), base(0.0), kCall, Side::without_claim), DomainError);
}

TEST(Oracle, QueriesOutsideLatticeThrow) {
  const QGrid& q = fx().one;
  EXPECT_THROW(q.log_Q(1e-9, 0.0, 0.0), DomainError);
  EXPECT_THROW(q.log_Q(1.0, 0.0, 0.1234), DomainError);
  EXPECT_NO_THROW(q.log_Q(1.0, 0.0, 0.5));
  EXPECT_EQ(q.slice_index(q.params.T), q.slices.size() - 1);
}

TEST(Oracle, LatticeTable) {
  const QGrid& q = fx().one;
  const auto full = lattice_table(q, true);
  EXPECT_EQ(full.rows(), q.slices.size() * q.n_S() * q.n_y());
  EXPECT_LT(lattice_table(q).rows(), full.rows());
  EXPECT_NE(full.str().find("S,y,t,Q,constraint_active\n"), std::string::npos);
}
