#pragma once

#include "tcindiff/market_model.hpp"

namespace tcindiff {

double norm_pdf(double x);
double norm_cdf(double x);  // via erfc, accurate in both tails

struct BsCall {
  double price = 0.0;
  double d_plus = 0.0;
  double d_minus = 0.0;
};

BsCall bs_call(double S, double K, double tau, double r, double sigma);

// V0 and its cash-scaled S-derivatives at one (S,t).
struct BsGreeks {
  double V0 = 0.0;
  double cash_delta = 0.0;   // S V0_S
  double cash_gamma = 0.0;   // S^2 V0_SS
  double cash_speed = 0.0;   // S^3 V0_SSS
  double cash_fourth = 0.0;  // S^4 V0_SSSS
  double theta = 0.0;        // V0_t
};

// Closed-form call (or put, by parity) greeks at total maturity tau.
BsGreeks bs_cash_greeks(bool call, double S, double K, double tau, double r, double sigma);

struct QuadratureOptions {
  int nodes = 64;
  bool check_convergence = true;  // compare against doubled node count
  double tolerance = 1e-8;        // relative change allowed under doubling
};

BsGreeks claim_v0(const ClaimSpec& c, const MarketParams& p, double S, double t,
                  const QuadratureOptions& q = {});

// Only delta and gamma, for hot loops. Returns {V0_S, V0_SS}.
struct DeltaGamma {
  double delta = 0.0;
  double gamma = 0.0;
};
DeltaGamma claim_delta_gamma(const ClaimSpec& c, const MarketParams& p, double S, double t);

// Frictionless Merton scale e^{-rT}(mu-r)/(gamma sigma^2).
double merton_scale(const MarketParams& p);

// sup_S S^2|g''(S)| (grid search refined by Brent), no safety inflation.
double sup_cash_gamma(const ClaimSpec& c, const MarketParams& p);

double assumption_margin(const ClaimSpec& c, const MarketParams& p);

}  // namespace tcindiff
