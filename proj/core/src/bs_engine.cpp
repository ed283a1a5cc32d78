#include "tcindiff/bs_engine.hpp"

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tcindiff/errors.hpp"
#include "tcindiff/quadrature.hpp"

namespace tcindiff {

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

BsCall bs_call(double S, double K, double tau, double r, double sigma) {
  if (!(S > 0.0) || !(K > 0.0) || !(sigma > 0.0)) throw DomainError("bs_call: S, K, sigma must be positive");
  if (!(tau > 0.0)) throw DomainError("bs_call: tau must be positive");
  const double v = sigma * std::sqrt(tau);
  BsCall out;
  out.d_plus = (std::log(S / K) + (r + 0.5 * sigma * sigma) * tau) / v;
  out.d_minus = out.d_plus - v;
  out.price = S * norm_cdf(out.d_plus) - std::exp(-r * tau) * K * norm_cdf(out.d_minus);
  return out;
}

BsGreeks bs_cash_greeks(bool call, double S, double K, double tau, double r, double sigma) {
  const BsCall bc = bs_call(S, K, tau, r, sigma);
  const double v = sigma * std::sqrt(tau);
  const double d = bc.d_plus;
  const double phi = norm_pdf(d);
  const double disc_K = K * std::exp(-r * tau);
  const double g2 = S * phi / v;
  BsGreeks out;
  out.V0 = bc.price;
  out.cash_delta = S * norm_cdf(d);
  out.cash_gamma = g2;
  out.cash_speed = -g2 * (1.0 + d / v);
  out.cash_fourth = g2 * (2.0 + 3.0 * d / v + (d * d - 1.0) / (v * v));
  out.theta = -(S * phi * sigma / (2.0 * std::sqrt(tau)) + r * disc_K * norm_cdf(bc.d_minus));
  if (!call) {
    out.V0 = bc.price - S + disc_K;
    out.cash_delta -= S;
    out.theta += r * disc_K;
  }
  return out;
}

namespace {

void require_point(const MarketParams& p, double S, double t) {
  if (!(S > 0.0) || !std::isfinite(S)) throw DomainError("claim_v0: S must be positive and finite");
  const double slack = 1e-12 * std::max(1.0, p.T);
  if (!(t >= -slack && t <= p.T + slack)) throw DomainError("claim_v0: t outside [0,T]");
}

// S^i V^(i) = e^{-r tau} E[S_T^i g^(i)(S_T)] for i = 0..4, theta from the PDE.
BsGreeks quadrature_greeks(const ClaimSpec& c, const MarketParams& p, double S, double tau, int n) {
  const auto& rule = gauss_hermite(n);
  const double sd = p.sigma * std::sqrt(tau);
  const double drift = (p.r - 0.5 * p.sigma * p.sigma) * tau;
  double m[5] = {0, 0, 0, 0, 0};
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double ST = S * std::exp(sd * rule.nodes[k] + drift);
    const PayoffDerivatives d = c.evaluator(ST);
    const double w = rule.weights[k];
    m[0] += w * d.g;
    m[1] += w * ST * d.g1;
    m[2] += w * ST * ST * d.g2;
    m[3] += w * ST * ST * ST * d.g3;
    m[4] += w * ST * ST * ST * ST * d.g4;
  }
  const double disc = std::exp(-p.r * tau);
  BsGreeks out;
  out.V0 = disc * m[0];
  out.cash_delta = disc * m[1];
  out.cash_gamma = disc * m[2];
  out.cash_speed = disc * m[3];
  out.cash_fourth = disc * m[4];
  out.theta = p.r * out.V0 - p.r * out.cash_delta - 0.5 * p.sigma * p.sigma * out.cash_gamma;
  return out;
}

double rel_change(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

BsGreeks claim_v0(const ClaimSpec& c, const MarketParams& p, double S, double t, const QuadratureOptions& q) {
  require_point(p, S, t);
  const double remaining = std::max(0.0, p.T - t);
  switch (c.kind) {
    case ClaimKind::none:
      return BsGreeks{};
    case ClaimKind::linear: {
      BsGreeks out;
      out.V0 = c.coeff * S;
      out.cash_delta = c.coeff * S;
      return out;
    }
    case ClaimKind::mollified_call:
    case ClaimKind::mollified_put:
      return bs_cash_greeks(c.kind == ClaimKind::mollified_call, S, c.K, c.delta_T + remaining, p.r, p.sigma);
    case ClaimKind::custom: {
      if (!c.evaluator) throw DomainError("claim_v0: custom claim without evaluator");
      if (remaining <= 0.0) {
        const PayoffDerivatives d = c.evaluator(S);
        BsGreeks out;
        out.V0 = d.g;
        out.cash_delta = S * d.g1;
        out.cash_gamma = S * S * d.g2;
        out.cash_speed = S * S * S * d.g3;
        out.cash_fourth = S * S * S * S * d.g4;
        out.theta = p.r * out.V0 - p.r * out.cash_delta - 0.5 * p.sigma * p.sigma * out.cash_gamma;
        return out;
      }
      const BsGreeks base = quadrature_greeks(c, p, S, remaining, q.nodes);
      if (q.check_convergence) {
        const BsGreeks fine = quadrature_greeks(c, p, S, remaining, 2 * q.nodes);
        const double change = std::max({rel_change(base.V0, fine.V0), rel_change(base.cash_delta, fine.cash_delta),
                                        rel_change(base.cash_gamma, fine.cash_gamma),
                                        rel_change(base.cash_speed, fine.cash_speed),
                                        rel_change(base.cash_fourth, fine.cash_fourth)});
        if (!(change <= q.tolerance)) {
          throw NumericError("claim_v0: Gauss-Hermite not converged under node doubling (change " +
                                 std::to_string(change) + ")",
                             fine.V0, change);
        }
        return fine;
      }
      return base;
    }
  }
  throw DomainError("claim_v0: unknown claim kind");
}

DeltaGamma claim_delta_gamma(const ClaimSpec& c, const MarketParams& p, double S, double t) {
  switch (c.kind) {
    case ClaimKind::none:
      return {};
    case ClaimKind::linear:
      return {c.coeff, 0.0};
    case ClaimKind::mollified_call:
    case ClaimKind::mollified_put: {
      const double tau = c.delta_T + (p.T - t);
      const double v = p.sigma * std::sqrt(tau);
      const double d = (std::log(S / c.K) + (p.r + 0.5 * p.sigma * p.sigma) * tau) / v;
      double delta = norm_cdf(d);
      if (c.kind == ClaimKind::mollified_put) delta -= 1.0;
      return {delta, norm_pdf(d) / (S * v)};
    }
    case ClaimKind::custom: {
      const BsGreeks g = claim_v0(c, p, S, t, QuadratureOptions{64, false, 0.0});
      return {g.cash_delta / S, g.cash_gamma / (S * S)};
    }
  }
  return {};
}

double merton_scale(const MarketParams& p) {
  return std::exp(-p.r * p.T) * (p.mu - p.r) / (p.gamma * p.sigma * p.sigma);
}

double sup_cash_gamma(const ClaimSpec& c, const MarketParams& p) {
  if (c.gamma_free()) return 0.0;
  auto h = [&](double x) {
    const double S = std::exp(x);
    return S * S * std::abs(payoff(c, p, S).g2);
  };
  const int n = 10000;
  const double lo = std::log(c.K) + std::log(1e-4);
  const double hi = std::log(c.K) + std::log(1e4);
  const double dx = (hi - lo) / (n - 1);
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i < n; ++i) {
    const double v = h(lo + i * dx);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + std::max(0, best - 1) * dx;
  const double b = lo + std::min(n - 1, best + 1) * dx;
  const auto res = boost::math::tools::brent_find_minima([&](double x) { return -h(x); }, a, b, 52);
  return std::max(best_val, -res.second);
}

double assumption_margin(const ClaimSpec& c, const MarketParams& p) {
  return merton_scale(p) - sup_cash_gamma(c, p);
}

}  // namespace tcindiff
