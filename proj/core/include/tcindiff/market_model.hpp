#pragma once

#include <functional>
#include <string>
#include <vector>

namespace tcindiff {

struct MarketParams {
  double mu = 0.1;
  double sigma = 1.4142135623730951;
  double r = 0.0;
  double T = 1.0;
  double gamma = 1.0;
  double epsilon = 0.0;

  // Throws DomainError for values no computation can use
  // (sigma, T, gamma <= 0, r < 0, epsilon outside [0,1), non-finite).
  void require_usable() const;
};

// Payoff and its first four derivatives at one S.
struct PayoffDerivatives {
  double g = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
  double g4 = 0.0;
};

enum class ClaimKind { none, mollified_call, mollified_put, linear, custom };

struct ClaimSpec {
  ClaimKind kind = ClaimKind::none;
  double K = 1.0;        // strike, or reference scale for custom claims
  double delta_T = 1.0;  // maturity extension used by the mollified payoffs
  double coeff = 0.0;    // slope of the linear payoff
  // Custom claims only: all five values at S. No numerical differentiation is done.
  std::function<PayoffDerivatives(double)> evaluator;

  static ClaimSpec none();
  static ClaimSpec mollified_call(double K, double delta_T);
  static ClaimSpec mollified_put(double K, double delta_T);
  static ClaimSpec linear(double coeff);
  static ClaimSpec custom(std::function<PayoffDerivatives(double)> evaluator, double scale = 1.0);

  // True when V0 is linear in S so the cash gamma vanishes identically.
  bool gamma_free() const { return kind == ClaimKind::none || kind == ClaimKind::linear; }
};

std::string to_string(ClaimKind kind);

// Settlement side: without the claim liability (j = 1) or with it (j = w).
enum class Side { without_claim, with_claim };

std::string to_string(Side side);

struct PortfolioPoint {
  double t = 0.0;
  double B = 0.0;
  double y = 0.0;
  double S = 1.0;
};

// Payoff derivatives at S. Mollified payoffs use the market r and sigma.
PayoffDerivatives payoff(const ClaimSpec& c, const MarketParams& p, double S);

struct ValidationReport {
  bool passed = false;
  bool bounds_finite = true;
  // Raw grid sups of |g - g'S|, S^2|g''|, |S^3 g'''|, S^4|g''''|.
  double sup_cash_residual = 0.0;
  double sup_cash_gamma = 0.0;
  double sup_cash_speed = 0.0;
  double sup_cash_fourth = 0.0;
  double safety_inflation = 1.05;
  double margin = 0.0;  // e^{-rT}(mu-r)/(gamma sigma^2) - sup S^2|g''|
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  std::string summary() const;
};

ValidationReport validate_params(const MarketParams& p, const ClaimSpec& c);

double discount_factor(const MarketParams& p, double s);
double utility(double x, double gamma);
double cash_value(double y, double S, double epsilon);
double terminal_wealth(const PortfolioPoint& pt, const MarketParams& p, const ClaimSpec& c, Side side);

}  // namespace tcindiff
