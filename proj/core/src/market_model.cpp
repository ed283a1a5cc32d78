#include "tcindiff/market_model.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <sstream>

#include "tcindiff/bs_engine.hpp"
#include "tcindiff/errors.hpp"

namespace tcindiff {

void MarketParams::require_usable() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(mu) || !finite(sigma) || !finite(r) || !finite(T) || !finite(gamma) || !finite(epsilon)) {
    throw DomainError("market parameters must be finite");
  }
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  if (!(T > 0.0)) throw DomainError("T must be positive");
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  if (r < 0.0) throw DomainError("r must be non-negative");
  if (epsilon < 0.0 || epsilon >= 1.0) throw DomainError("epsilon out of (0,1)");
}

ClaimSpec ClaimSpec::none() { return ClaimSpec{}; }

ClaimSpec ClaimSpec::mollified_call(double K, double delta_T) {
  ClaimSpec c;
  c.kind = ClaimKind::mollified_call;
  c.K = K;
  c.delta_T = delta_T;
  return c;
}

ClaimSpec ClaimSpec::mollified_put(double K, double delta_T) {
  ClaimSpec c = mollified_call(K, delta_T);
  c.kind = ClaimKind::mollified_put;
  return c;
}

ClaimSpec ClaimSpec::linear(double coeff) {
  ClaimSpec c;
  c.kind = ClaimKind::linear;
  c.coeff = coeff;
  return c;
}

ClaimSpec ClaimSpec::custom(std::function<PayoffDerivatives(double)> evaluator, double scale) {
  ClaimSpec c;
  c.kind = ClaimKind::custom;
  c.K = scale;
  c.evaluator = std::move(evaluator);
  return c;
}

std::string to_string(ClaimKind kind) {
  switch (kind) {
    case ClaimKind::none: return "none";
    case ClaimKind::mollified_call: return "mollified_call";
    case ClaimKind::mollified_put: return "mollified_put";
    case ClaimKind::linear: return "linear";
    case ClaimKind::custom: return "custom";
  }
  return "?";
}

std::string to_string(Side side) { return side == Side::without_claim ? "1" : "w"; }

PayoffDerivatives payoff(const ClaimSpec& c, const MarketParams& p, double S) {
  switch (c.kind) {
    case ClaimKind::none:
      return {};
    case ClaimKind::linear:
      return {c.coeff * S, c.coeff, 0.0, 0.0, 0.0};
    case ClaimKind::mollified_call:
    case ClaimKind::mollified_put: {
      const BsGreeks g = bs_cash_greeks(c.kind == ClaimKind::mollified_call, S, c.K, c.delta_T, p.r, p.sigma);
      return {g.V0, g.cash_delta / S, g.cash_gamma / (S * S), g.cash_speed / (S * S * S),
              g.cash_fourth / (S * S * S * S)};
    }
    case ClaimKind::custom:
      if (!c.evaluator) throw DomainError("custom claim without evaluator");
      return c.evaluator(S);
  }
  return {};
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << " margin=" << margin << " sup|g-g'S|=" << sup_cash_residual
     << " supS^2|g''|=" << sup_cash_gamma << " sup|S^3g'''|=" << sup_cash_speed
     << " supS^4|g''''|=" << sup_cash_fourth;
  for (const auto& e : errors) os << "; error: " << e;
  for (const auto& w : warnings) os << "; warning: " << w;
  return os.str();
}

ValidationReport validate_params(const MarketParams& p, const ClaimSpec& c) {
  ValidationReport rep;
  try {
    p.require_usable();
  } catch (const DomainError& e) {
    rep.errors.emplace_back(e.what());
    rep.passed = false;
    return rep;
  }
  if (p.r == 0.0) rep.warnings.emplace_back("r = 0 accepted although the model assumes r > 0");
  if (p.epsilon == 0.0) rep.warnings.emplace_back("epsilon = 0: frictionless limit");
  if (!(p.mu > p.r)) rep.errors.emplace_back("mu must exceed r");

  if (c.kind == ClaimKind::mollified_call || c.kind == ClaimKind::mollified_put) {
    if (!(c.K > 0.0)) rep.errors.emplace_back("strike K must be positive");
    if (!(c.delta_T > 0.0)) rep.errors.emplace_back("delta_T must be positive");
  }
  if (c.kind == ClaimKind::custom) {
    if (!c.evaluator) rep.errors.emplace_back("custom claim needs all derivative evaluators");
    if (!(c.K > 0.0)) rep.errors.emplace_back("custom claim scale K must be positive");
  }
  if (!rep.errors.empty()) {
    rep.passed = false;
    return rep;
  }

  if (!c.gamma_free()) {
    const int n = 10000;
    const double lo = std::log(c.K) + std::log(1e-4);
    const double hi = std::log(c.K) + std::log(1e4);
    for (int i = 0; i < n; ++i) {
      const double S = std::exp(lo + (hi - lo) * i / (n - 1));
      const PayoffDerivatives d = payoff(c, p, S);
      const double vals[4] = {d.g - d.g1 * S, S * S * d.g2, S * S * S * d.g3, S * S * S * S * d.g4};
      if (!std::isfinite(d.g) || !std::isfinite(d.g1) || !std::isfinite(vals[0]) || !std::isfinite(vals[1]) ||
          !std::isfinite(vals[2]) || !std::isfinite(vals[3])) {
        std::ostringstream os;
        os.precision(17);
        os << "non-finite payoff evaluator output at S=" << S;
        rep.errors.push_back(os.str());
        rep.bounds_finite = false;
        break;
      }
      if (d.g < 0.0 && c.kind == ClaimKind::custom) {
        std::ostringstream os;
        os.precision(17);
        os << "negative payoff at S=" << S;
        rep.errors.push_back(os.str());
        break;
      }
      rep.sup_cash_residual = std::max(rep.sup_cash_residual, std::abs(vals[0]));
      rep.sup_cash_gamma = std::max(rep.sup_cash_gamma, std::abs(vals[1]));
      rep.sup_cash_speed = std::max(rep.sup_cash_speed, std::abs(vals[2]));
      rep.sup_cash_fourth = std::max(rep.sup_cash_fourth, std::abs(vals[3]));
    }
  }
  if (rep.bounds_finite && rep.errors.empty()) {
    rep.margin = assumption_margin(c, p);
    rep.sup_cash_gamma = std::max(rep.sup_cash_gamma, merton_scale(p) - rep.margin);
  } else {
    rep.margin = -std::numeric_limits<double>::infinity();
  }
  rep.passed = rep.errors.empty() && rep.bounds_finite && rep.margin > 0.0;
  if (rep.errors.empty() && !(rep.margin > 0.0)) {
    rep.warnings.emplace_back("cash-gamma margin is not positive; the band can collapse where the target slope vanishes");
  }
  return rep;
}

double discount_factor(const MarketParams& p, double s) {
  const double slack = 1e-12 * std::max(1.0, p.T);
  if (!(s >= -slack && s <= p.T + slack)) throw DomainError("discount_factor: s outside [0,T]");
  return std::exp(-p.r * (p.T - std::clamp(s, 0.0, p.T)));
}

double utility(double x, double gamma) { return -std::exp(-gamma * x); }

double cash_value(double y, double S, double epsilon) {
  const double sgn = (y > 0.0) - (y < 0.0);
  return (1.0 - epsilon * sgn) * y * S;
}

double terminal_wealth(const PortfolioPoint& pt, const MarketParams& p, const ClaimSpec& c, Side side) {
  if (std::abs(pt.t - p.T) > 1e-9 * std::max(1.0, p.T)) throw DomainError("terminal_wealth: point is not at T");
  if (side == Side::without_claim) return pt.B + cash_value(pt.y, pt.S, p.epsilon);
  const PayoffDerivatives d = payoff(c, p, pt.S);
  return pt.B + cash_value(pt.y - d.g1, pt.S, p.epsilon) - (d.g - d.g1 * pt.S);
}

}  // namespace tcindiff
