#include "tcindiff/expansion.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tcindiff/errors.hpp"
#include "tcindiff/quadrature.hpp"

namespace tcindiff {

namespace {

void require_side(const ClaimSpec& c, Side side) {
  if (side == Side::with_claim && c.kind == ClaimKind::none) {
    throw DomainError("side w needs a claim (kind none given)");
  }
}

double sgn(double v) { return (v > 0.0) - (v < 0.0); }

// Merton scale at time t: delta (mu-r)/(gamma sigma^2).
double merton_at(const MarketParams& p, double t) {
  return discount_factor(p, t) * (p.mu - p.r) / (p.gamma * p.sigma * p.sigma);
}

struct TargetAndGreeks {
  TargetPartials tp;
  BsGreeks g;
};

TargetAndGreeks target_with_greeks(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t) {
  require_side(c, side);
  if (!(S > 0.0)) throw DomainError("S must be positive");
  const double m = merton_at(p, t);
  TargetAndGreeks out;
  TargetPartials& tp = out.tp;
  tp.y_star = m / S;
  tp.y_S = -m / (S * S);
  tp.y_SS = 2.0 * m / (S * S * S);
  tp.y_SSS = -6.0 * m / (S * S * S * S);
  tp.y_t = p.r * m / S;
  tp.y_St = -p.r * m / (S * S);
  if (side == Side::with_claim) {
    const BsGreeks g = claim_v0(c, p, S, t);
    out.g = g;
    const double s2 = p.sigma * p.sigma;
    const double S2 = S * S;
    tp.y_star += g.cash_delta / S;
    tp.y_S += g.cash_gamma / S2;
    tp.y_SS += g.cash_speed / (S2 * S);
    tp.y_SSS += g.cash_fourth / (S2 * S2);
    tp.y_t += -((p.r + s2) * g.cash_gamma + 0.5 * s2 * g.cash_speed) / S;
    tp.y_St += -(0.5 * s2 * g.cash_fourth + (p.r + 2.0 * s2) * g.cash_speed + (p.r + s2) * g.cash_gamma) / S2;
  }
  return out;
}

// Y^(j) and its partials.
struct HalfWidth {
  double Y, Y_S, Y_SS, Y_t;
};

HalfWidth half_width_partials(const MarketParams& p, const TargetPartials& tp, double S, double t) {
  const double Y = band_half_width(p, S, t, tp.y_S);
  const double r1 = tp.y_SS / tp.y_S;
  const double r2 = tp.y_SSS / tp.y_S;
  const double ls = (1.0 / S + 2.0 * r1) / 3.0;
  HalfWidth h;
  h.Y = Y;
  h.Y_S = Y * ls;
  h.Y_SS = Y * (ls * ls + (-1.0 / (S * S) + 2.0 * (r2 - r1 * r1)) / 3.0);
  h.Y_t = Y * (p.r + 2.0 * tp.y_St / tp.y_S) / 3.0;
  return h;
}

}  // namespace

TargetPartials target_partials(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t) {
  return target_with_greeks(p, c, side, S, t).tp;
}

double y_star(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t) {
  require_side(c, side);
  if (!(S > 0.0)) throw DomainError("S must be positive");
  double y = merton_at(p, t) / S;
  if (side == Side::with_claim) y += claim_delta_gamma(c, p, S, t).delta;
  return y;
}

double band_half_width(const MarketParams& p, double S, double t, double target_slope) {
  const double delta = discount_factor(p, t);
  const double w = S * S * target_slope;
  const double scale = std::max(1.0, std::abs(merton_at(p, t)));
  if (!(std::abs(w) > 1e-13 * scale)) {
    std::ostringstream os;
    os.precision(17);
    os << "degenerate no-trade band: target slope vanishes at S=" << S << " t=" << t;
    throw DegenerateBandError(os.str(), 0.0, std::abs(w));
  }
  return std::cbrt(1.5 * S * delta * target_slope * target_slope / p.gamma);
}

NoTradeBand band(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t) {
  require_side(c, side);
  if (!(S > 0.0)) throw DomainError("band: S must be positive");
  const double m = merton_at(p, t);
  double ys = m / S;
  double slope = -m / (S * S);
  if (side == Side::with_claim) {
    const DeltaGamma dg = claim_delta_gamma(c, p, S, t);
    ys += dg.delta;
    slope += dg.gamma;
  }
  NoTradeBand b;
  b.y_star = ys;
  b.Y = band_half_width(p, S, t, slope);
  const double half = std::cbrt(p.epsilon) * b.Y;
  b.y_minus = ys - half;
  b.y_plus = ys + half;
  return b;
}

H4Partials h4_from_target(const MarketParams& p, const TargetPartials& tp, double S, double Y, double t) {
  const double delta = discount_factor(p, t);
  const double g = p.gamma;
  const double y1 = tp.y_S;
  const double r1 = tp.y_SS / y1;
  const double r2 = tp.y_SSS / y1;
  const double rt = tp.y_St / y1;
  const double a = std::pow(1.5 * g * g * S / (delta * delta * std::abs(y1)), 2.0 / 3.0);
  const double b = g * g / (12.0 * delta * delta * y1 * y1);
  const double u = 2.0 / (3.0 * S) - 2.0 * r1 / 3.0;
  const double u_S = -2.0 / (3.0 * S * S) - 2.0 * (r2 - r1 * r1) / 3.0;
  const double a_S = a * u;
  const double a_SS = a * (u * u + u_S);
  const double a_t = a * (-2.0 * rt / 3.0 - 4.0 * p.r / 3.0);
  const double b_S = -2.0 * b * r1;
  const double b_SS = b * (6.0 * r1 * r1 - 2.0 * r2);
  const double b_t = b * (-2.0 * p.r - 2.0 * rt);
  const double Y2 = Y * Y;
  const double Y3 = Y2 * Y;
  const double Y4 = Y2 * Y2;
  H4Partials h;
  h.H4 = 0.5 * Y2 * a - Y4 * b;
  h.H4_Y = Y * a - 4.0 * Y3 * b;
  h.H4_YY = a - 12.0 * Y2 * b;
  h.H4_S = 0.5 * Y2 * a_S - Y4 * b_S;
  h.H4_YS = Y * a_S - 4.0 * Y3 * b_S;
  h.H4_SS = 0.5 * Y2 * a_SS - Y4 * b_SS;
  h.H4_t = 0.5 * Y2 * a_t - Y4 * b_t;
  return h;
}

H4Partials h4_partials(const MarketParams& p, const ClaimSpec& c, Side side, double S, double Y, double t) {
  const TargetPartials tp = target_partials(p, c, side, S, t);
  const double Yj = band_half_width(p, S, t, tp.y_S);
  if (std::abs(Y) > Yj * (1.0 + 1e-12)) throw DomainError("h4_partials: |Y| exceeds the band half-width");
  return h4_from_target(p, tp, S, Y, t);
}

// ---------------------------------------------------------------------------
// H2

H2Field::H2Field(MarketParams p, ClaimSpec c, Side side, H2Options opt)
    : p_(p), c_(std::move(c)), side_(side), opt_(opt) {
  require_side(c_, side_);
  closed_form_ = (side_ == Side::without_claim || c_.gamma_free()) && !opt_.force_heat_kernel;
}

double H2Field::closed_form_value(double t) const {
  const double mr = p_.mu - p_.r;
  return std::pow(1.5 / p_.sigma, 2.0 / 3.0) * std::pow(mr, 4.0 / 3.0) * (p_.T - t) / 2.0;
}

double H2Field::source(double S, double t) const {
  const double delta = discount_factor(p_, t);
  double w = -merton_at(p_, t);
  if (side_ == Side::with_claim) w += S * S * claim_delta_gamma(c_, p_, S, t).gamma;
  const double C = 0.5 * std::pow(1.5 * p_.gamma * p_.gamma * p_.sigma * p_.sigma * p_.sigma / (delta * delta),
                                  2.0 / 3.0);
  return C * std::pow(std::abs(w), 4.0 / 3.0);
}

double H2Field::source_cash_slope(double S, double t) const {
  if (side_ == Side::without_claim) return 0.0;
  const double delta = discount_factor(p_, t);
  const double m = merton_at(p_, t);
  const BsGreeks g = claim_v0(c_, p_, S, t, QuadratureOptions{64, false, 0.0});
  const double w = g.cash_gamma - m;
  const double s3y2 = g.cash_speed + 2.0 * m;
  const double C = 0.5 * std::pow(1.5 * p_.gamma * p_.gamma * p_.sigma * p_.sigma * p_.sigma / (delta * delta),
                                  2.0 / 3.0);
  return C * (4.0 / 3.0) * std::cbrt(std::abs(w)) * sgn(w) * (2.0 * w + s3y2);
}

namespace {

// Inner Gaussian expectation E[(Z or 1) e^{c1 y} f(y)], y = x + c Z. Smooth sources use
// Gauss-Hermite; when the source has kinks (zeros of the target slope) inside the window
// the z-line is split there and integrated piecewise with Gauss-Legendre.
template <class F>
double gaussian_expectation(const F& f, double x, double c, double c1, bool weight_z,
                            const std::vector<double>& kinks, int gh_nodes) {
  if (c <= 0.0) return weight_z ? 0.0 : std::exp(c1 * x) * f(x);
  constexpr double zmax = 10.0;
  std::vector<double> cuts;
  for (double k : kinks) {
    const double z = (k - x) / c;
    if (z > -zmax && z < zmax) cuts.push_back(z);
  }
  if (cuts.empty()) {
    const auto& rule = gauss_hermite(gh_nodes);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double z = rule.nodes[i];
      const double y = x + c * z;
      acc += rule.weights[i] * (weight_z ? z : 1.0) * std::exp(c1 * y) * f(y);
    }
    return acc;
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.insert(cuts.begin(), -zmax);
  cuts.push_back(zmax);
  const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  auto h = [&](double z) {
    const double y = x + c * z;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z + c1 * y) * (weight_z ? z : 1.0) * f(y);
  };
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / 2.0)));
    const double wdt = (b - a) / pieces;
    for (int j = 0; j < pieces; ++j) {
      acc += boost::math::quadrature::gauss<double, 20>::integrate(h, a + j * wdt, a + (j + 1) * wdt);
    }
  }
  return acc;
}

}  // namespace

H2Field::SourceSlice H2Field::slice(double t) const {
  SourceSlice sl;
  const double delta = discount_factor(p_, t);
  sl.t = t;
  sl.m = merton_at(p_, t);
  sl.C = 0.5 * std::pow(1.5 * p_.gamma * p_.gamma * p_.sigma * p_.sigma * p_.sigma / (delta * delta), 2.0 / 3.0);
  sl.mollified = side_ == Side::with_claim &&
                 (c_.kind == ClaimKind::mollified_call || c_.kind == ClaimKind::mollified_put);
  if (sl.mollified) {
    const double tau = c_.delta_T + (p_.T - t);
    sl.v = p_.sigma * std::sqrt(tau);
    sl.a = std::log(c_.K) - (p_.r + 0.5 * p_.sigma * p_.sigma) * tau;
    // ln(S^2 gamma) = x - (x-a)^2/(2 v^2) - ln(v sqrt(2 pi)) is a parabola in x = ln S;
    // the source has kinks where it crosses ln m.
    const double rhs = sl.a - std::log(sl.v * std::sqrt(2.0 * std::numbers::pi) * sl.m);
    const double v2 = sl.v * sl.v;
    const double disc = v2 * v2 + 2.0 * v2 * rhs;
    if (disc > 0.0) {
      const double root = std::sqrt(disc);
      sl.kinks = {sl.a + v2 - root, sl.a + v2 + root};
    }
  }
  return sl;
}

double H2Field::SourceSlice::eval(const H2Field& field, double x) const {
  double w;
  if (mollified) {
    const double d = (x - a) / v;
    w = std::exp(x - 0.5 * d * d) / (v * std::sqrt(2.0 * std::numbers::pi)) - m;
  } else {
    const double S = std::exp(x);
    w = -m;
    if (field.side_ == Side::with_claim) w += S * S * claim_delta_gamma(field.c_, field.p_, S, t).gamma;
  }
  return C * std::pow(std::abs(w), 4.0 / 3.0);
}

double H2Field::transformed_integral(const std::function<double(double, double)>* f, double tau, double x,
                                     bool x_derivative) const {
  if (tau <= 0.0) return 0.0;
  const double s2 = p_.sigma * p_.sigma;
  const double k = 2.0 * p_.r / s2;
  const double c1 = 0.5 * (k - 1.0);
  const double c2 = 0.25 * (k - 1.0) * (k - 1.0);
  const std::vector<double> none;
  auto G = [&](double s) {
    const double c = std::sqrt(std::max(0.0, 2.0 * (tau - s)));
    const double t_cal = std::clamp(p_.T - 2.0 * s / s2, 0.0, p_.T);
    double e;
    if (f) {
      e = gaussian_expectation([&](double y) { return (*f)(std::exp(y), t_cal); }, x, c, c1, x_derivative, none,
                               opt_.inner_nodes);
    } else {
      const SourceSlice sl = slice(t_cal);
      e = gaussian_expectation([&](double y) { return sl.eval(*this, y); }, x, c, c1, x_derivative, sl.kinks,
                               opt_.inner_nodes);
    }
    return (2.0 / s2) * std::exp(c2 * s) * e;
  };
  // s = tau - u^2. For the x-derivative, E[F_y(x + c Z)] = E[Z F(x + c Z)] / c with c = sqrt(2) u,
  // which cancels the Jacobian 2u and leaves a bounded integrand.
  auto integrand = [&](double u) {
    return x_derivative ? std::numbers::sqrt2 * G(tau - u * u) : 2.0 * u * G(tau - u * u);
  };
  double err = 0.0;
  double l1 = 0.0;
  const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, std::sqrt(tau), opt_.max_depth, opt_.tolerance, &err, &l1);
  if (!std::isfinite(val) || err > 1e-6 * l1 + 1e-15) {
    throw NumericError("H2 heat-kernel quadrature did not converge", val, err);
  }
  return val;
}

double H2Field::cached(int which, double tau, double x) const {
  const std::pair<long long, long long> key{std::llround(tau * 1e12), std::llround(x * 1e12)};
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_[which].find(key);
    if (it != cache_[which].end()) return it->second;
  }
  // Evaluate at the rounded key so the result does not depend on which query filled the slot.
  const double tk = static_cast<double>(key.first) * 1e-12;
  const double xk = static_cast<double>(key.second) * 1e-12;
  const double v = transformed_integral(nullptr, tk, xk, which == 1);
  std::lock_guard<std::mutex> lock(mu_);
  cache_[which].emplace(key, v);
  return v;
}

double H2Field::transformed(double tau, double x) const { return cached(0, tau, x); }

double H2Field::value(double S, double t) const {
  if (!(S > 0.0)) throw DomainError("h2: S must be positive");
  discount_factor(p_, t);  // range check
  if (closed_form_) return closed_form_value(t);
  const double tau = 0.5 * p_.sigma * p_.sigma * (p_.T - t);
  if (tau <= 0.0) return 0.0;
  const double k = 2.0 * p_.r / (p_.sigma * p_.sigma);
  const double x = std::log(S);
  return std::exp(-0.5 * (k - 1.0) * x - 0.25 * (k - 1.0) * (k - 1.0) * tau) * cached(0, tau, x);
}

double H2Field::cash_slope(double S, double t) const {
  if (!(S > 0.0)) throw DomainError("h2: S must be positive");
  discount_factor(p_, t);
  if (closed_form_) return 0.0;
  const double tau = 0.5 * p_.sigma * p_.sigma * (p_.T - t);
  if (tau <= 0.0) return 0.0;
  const double k = 2.0 * p_.r / (p_.sigma * p_.sigma);
  const double c1 = 0.5 * (k - 1.0);
  const double x = std::log(S);
  // H2 = e^{-c1 x - c2 tau} u(tau, x), so S H2_S = e^{-c1 x - c2 tau} (u_x - c1 u).
  return std::exp(-c1 * x - 0.25 * (k - 1.0) * (k - 1.0) * tau) * (cached(1, tau, x) - c1 * cached(0, tau, x));
}

double H2Field::cash_curvature(double S, double t) const {
  if (closed_form_) return 0.0;
  const double h = 1e-3;
  const double up = cash_slope(S * std::exp(h), t);
  const double dn = cash_slope(S * std::exp(-h), t);
  return (up - dn) / (2.0 * h) - cash_slope(S, t);
}

double H2Field::solve_with_source(const std::function<double(double, double)>& f, double S, double t) const {
  const double tau = 0.5 * p_.sigma * p_.sigma * (p_.T - t);
  const double k = 2.0 * p_.r / (p_.sigma * p_.sigma);
  const double x = std::log(S);
  return std::exp(-0.5 * (k - 1.0) * x - 0.25 * (k - 1.0) * (k - 1.0) * tau) * transformed_integral(&f, tau, x, false);
}

double h2(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t) {
  return H2Field(p, c, side).value(S, t);
}

double h2_cash_slope(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t) {
  return H2Field(p, c, side).cash_slope(S, t);
}

// ---------------------------------------------------------------------------
// H3

double h3_offset_constant(const MarketParams& p) {
  return 4.0 * std::exp(p.r * p.T) * (p.mu - p.r) / (p.sigma * p.sigma) + 2.0;
}

double h3(const H3Constants& k, const MarketParams& p, double t, int sign) {
  return -static_cast<double>(sign) * (k.M * (p.T - t) + k.M1);
}

std::string to_string(Region r) {
  switch (r) {
    case Region::buy: return "buy";
    case Region::sell: return "sell";
    case Region::no_trade: return "none";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Expansion

struct Expansion::Shared {
  Shared(const MarketParams& p, ClaimSpec c, Side s, H2Options opt)
      : claim(c), side(s), field(p, std::move(c), s, opt) {}
  ClaimSpec claim;
  Side side;
  H2Field field;
  std::once_flag m_once;
  H3Constants k;
};

Expansion::Expansion(const MarketParams& p, const ClaimSpec& c, Side side, H2Options opt) : p_(p) {
  p.require_usable();
  require_side(c, side);
  shared_ = std::make_shared<Shared>(p, c, side, opt);
}

Expansion Expansion::with_epsilon(double epsilon) const {
  Expansion e = *this;
  e.p_.epsilon = epsilon;
  e.p_.require_usable();
  return e;
}

const ClaimSpec& Expansion::claim() const { return shared_->claim; }
Side Expansion::side() const { return shared_->side; }
const H2Field& Expansion::h2_field() const { return shared_->field; }

TargetPartials Expansion::target(double S, double t) const {
  return target_partials(p_, shared_->claim, shared_->side, S, t);
}

NoTradeBand Expansion::band(double S, double t) const { return tcindiff::band(p_, shared_->claim, shared_->side, S, t); }

H3Constants Expansion::h3_constants() const {
  std::call_once(shared_->m_once, [this] {
    const MarketParams& p = p_;
    const double center = (shared_->side == Side::with_claim) ? shared_->claim.K : 1.0;
    double sup = 0.0;
    const int nS = 64, nt = 32, nY = 17;
    for (int i = 0; i < nS; ++i) {
      const double S = center * std::pow(10.0, -2.0 + 4.0 * i / (nS - 1));
      for (int j = 0; j < nt; ++j) {
        const double t = p.T * j / (nt - 1);
        const TargetPartials tp = target(S, t);
        double Yj;
        try {
          Yj = band_half_width(p, S, t, tp.y_S);
        } catch (const DegenerateBandError&) {
          continue;
        }
        const double delta = discount_factor(p, t);
        const double cs = shared_->field.cash_slope(S, t);
        const double s2 = p.sigma * p.sigma;
        for (int l = 0; l < nY; ++l) {
          const double Y = -Yj + 2.0 * Yj * l / (nY - 1);
          const H4Partials h = h4_from_target(p, tp, S, Y, t);
          const double e = s2 * S * p.gamma * Y * cs / delta - s2 * S * tp.y_S * h.H4_Y +
                           s2 * S * S * tp.y_S * h.H4_YS;
          if (std::isfinite(e)) sup = std::max(sup, std::abs(e));
        }
      }
    }
    shared_->k.M = 1.1 * (sup + 1.0);
    shared_->k.M1 = h3_offset_constant(p);
  });
  return shared_->k;
}

ExpansionBundle Expansion::bundle(double S, double Y, double t) const {
  const TargetAndGreeks tg = target_with_greeks(p_, shared_->claim, shared_->side, S, t);
  const double Yj = band_half_width(p_, S, t, tg.tp.y_S);
  if (std::abs(Y) > Yj * (1.0 + 1e-12)) throw DomainError("bundle: |Y| exceeds the band half-width");
  const double delta = discount_factor(p_, t);
  ExpansionBundle b;
  b.H0 = -(p_.mu - p_.r) * (p_.mu - p_.r) * (p_.T - t) / (2.0 * p_.sigma * p_.sigma);
  if (shared_->side == Side::with_claim) b.H0 += p_.gamma * tg.g.V0 / delta;
  b.H2 = shared_->field.value(S, t);
  b.S_H2_S = shared_->field.cash_slope(S, t);
  const H3Constants k = h3_constants();
  b.M = k.M;
  b.M1 = k.M1;
  b.H3_plus = h3(k, p_, t, +1);
  b.H3_minus = h3(k, p_, t, -1);
  b.h4 = h4_from_target(p_, tg.tp, S, Y, t);
  return b;
}

LogQ Expansion::log_q_no_trade(double S, double y, double t, Bound bd, const TargetPartials& tp, const BsGreeks& g,
                               double Yj, double Yc) const {
  (void)Yj;
  const MarketParams& p = p_;
  const double eps = p.epsilon;
  const double e2 = std::cbrt(eps * eps);
  const double e4 = eps * std::cbrt(eps);
  const double delta = discount_factor(p, t);
  const double s2 = p.sigma * p.sigma;
  const bool w = shared_->side == Side::with_claim;
  const double mr = p.mu - p.r;

  const double H0 = -mr * mr * (p.T - t) / (2.0 * s2) + (w ? p.gamma * g.V0 / delta : 0.0);
  const double H0_t = mr * mr / (2.0 * s2) + (w ? p.gamma * (g.theta - p.r * g.V0) / delta : 0.0);
  const double H0_S = w ? p.gamma * g.cash_delta / (S * delta) : 0.0;
  const double H0_SS = w ? p.gamma * g.cash_gamma / (S * S * delta) : 0.0;

  double H2 = 0.0, H2_S = 0.0, H2_SS = 0.0, H2_t = 0.0;
  if (eps > 0.0) {
    const H2Field& f = shared_->field;
    H2 = f.value(S, t);
    const double cs = f.cash_slope(S, t);
    const double cc = f.cash_curvature(S, t);
    H2_S = cs / S;
    H2_SS = cc / (S * S);
    H2_t = -p.r * cs - 0.5 * s2 * cc - f.source(S, t);
  }

  double H3 = 0.0, H3_t = 0.0;
  if (eps > 0.0) {
    const H3Constants k = h3_constants();
    const int sign = bd == Bound::plus ? 1 : -1;
    H3 = h3(k, p, t, sign);
    H3_t = sign * k.M;
  }

  const H4Partials h = h4_from_target(p, tp, S, Yc, t);
  const double y1 = tp.y_S;
  const double y2 = tp.y_SS;

  LogQ l;
  l.region = Region::no_trade;
  l.L = -p.gamma * S * y / delta + H0 + e2 * H2 + eps * H3 + e4 * h.H4;
  l.L_y = -p.gamma * S / delta + eps * h.H4_Y;
  l.L_yy = e2 * h.H4_YY;
  l.L_S = -p.gamma * y / delta + H0_S + e2 * H2_S + e4 * h.H4_S - eps * y1 * h.H4_Y;
  l.L_yS = -p.gamma / delta + eps * h.H4_YS - e2 * y1 * h.H4_YY;
  l.L_SS = H0_SS + e2 * H2_SS + e4 * h.H4_SS - 2.0 * eps * y1 * h.H4_YS - eps * y2 * h.H4_Y +
           e2 * y1 * y1 * h.H4_YY;
  l.L_t = p.r * p.gamma * S * y / delta + H0_t + e2 * H2_t + eps * H3_t + e4 * h.H4_t - eps * tp.y_t * h.H4_Y;
  return l;
}

LogQ Expansion::log_q(double S, double y, double t, Bound bd) const { return log_q_as(S, y, t, bd, std::nullopt); }

LogQ Expansion::log_q_as(double S, double y, double t, Bound bd, std::optional<Region> force) const {
  if (!(S > 0.0)) throw DomainError("q: S must be positive");
  const TargetAndGreeks tg = target_with_greeks(p_, shared_->claim, shared_->side, S, t);
  const TargetPartials& tp = tg.tp;
  const double e3 = std::cbrt(p_.epsilon);
  const double Yj = band_half_width(p_, S, t, tp.y_S);
  const double y_lo = tp.y_star - e3 * Yj;
  const double y_hi = tp.y_star + e3 * Yj;
  Region region = Region::no_trade;
  if (force) {
    region = *force;
  } else if (y < y_lo) {
    region = Region::buy;
  } else if (y > y_hi) {
    region = Region::sell;
  }
  if (region == Region::no_trade) {
    // A forced evaluation continues the band polynomial past the edge (for one-sided differences).
    double Yc = e3 > 0.0 ? (y - tp.y_star) / e3 : 0.0;
    if (!force) Yc = std::clamp(Yc, -Yj, Yj);
    return log_q_no_trade(S, y, t, bd, tp, tg.g, Yj, Yc);
  }
  const bool buy = region == Region::buy;
  const double yb = buy ? y_lo : y_hi;
  const LogQ lb = log_q_no_trade(S, yb, t, bd, tp, tg.g, Yj, buy ? -Yj : Yj);
  const HalfWidth hw = half_width_partials(p_, tp, S, t);
  const double sgn_b = buy ? -1.0 : 1.0;
  const double yb_S = tp.y_S + sgn_b * e3 * hw.Y_S;
  const double yb_SS = tp.y_SS + sgn_b * e3 * hw.Y_SS;
  const double yb_t = tp.y_t + sgn_b * e3 * hw.Y_t;
  // Total derivatives of the anchor value along the moving boundary.
  const double Lb_S = lb.L_S + lb.L_y * yb_S;
  const double Lb_SS = lb.L_SS + 2.0 * lb.L_yS * yb_S + lb.L_yy * yb_S * yb_S + lb.L_y * yb_SS;
  const double Lb_t = lb.L_t + lb.L_y * yb_t;
  const double delta = discount_factor(p_, t);
  const double kappa = p_.gamma * (buy ? 1.0 + p_.epsilon : 1.0 - p_.epsilon) / delta;
  const double dy = y - yb;
  LogQ l;
  l.region = region;
  l.L = -kappa * S * dy + lb.L;
  l.L_y = -kappa * S;
  l.L_yy = 0.0;
  l.L_S = -kappa * dy + kappa * S * yb_S + Lb_S;
  l.L_yS = -kappa;
  l.L_SS = 2.0 * kappa * yb_S + kappa * S * yb_SS + Lb_SS;
  l.L_t = p_.r * kappa * S * dy + kappa * S * yb_t + Lb_t;
  return l;
}

double Expansion::q(double S, double y, double t, Bound b) const { return std::exp(log_q(S, y, t, b).L); }

double Expansion::generator_ratio(const LogQ& l, const MarketParams& p, double S) {
  return l.L_t + p.mu * S * l.L_S + 0.5 * p.sigma * p.sigma * S * S * (l.L_SS + l.L_S * l.L_S);
}

double Expansion::generator_ratio(double S, double y, double t, Bound b) const {
  return generator_ratio(log_q(S, y, t, b), p_, S);
}

double q_pm(const MarketParams& p, const ClaimSpec& c, Side side, double S, double y, double t, Bound b) {
  return Expansion(p, c, side).q(S, y, t, b);
}

ValueEstimate value_function(const MarketParams& p, const ClaimSpec& c, Side side, double t, double B, double y,
                             double S) {
  p.require_usable();
  require_side(c, side);
  if (!(S > 0.0)) throw DomainError("value_function: S must be positive");
  const double delta = discount_factor(p, t);
  double H0 = -(p.mu - p.r) * (p.mu - p.r) * (p.T - t) / (2.0 * p.sigma * p.sigma);
  if (side == Side::with_claim) H0 += p.gamma * claim_v0(c, p, S, t).V0 / delta;
  double L = -p.gamma * S * y / delta + H0;
  if (p.epsilon > 0.0) L += std::cbrt(p.epsilon * p.epsilon) * h2(p, c, side, S, t);
  ValueEstimate v;
  v.log_q = L;
  v.V = -std::exp(-p.gamma * B / delta + L);
  v.certainty_equivalent = B - delta * L / p.gamma;
  return v;
}

PriceEstimate indifference_price(const MarketParams& p, const ClaimSpec& c, double S, double t) {
  p.require_usable();
  if (!(S > 0.0)) throw DomainError("indifference_price: S must be positive");
  PriceEstimate out;
  out.v0 = claim_v0(c, p, S, t).V0;
  out.price = out.v0;
  if (p.epsilon > 0.0 && c.kind != ClaimKind::none) {
    const double delta = discount_factor(p, t);
    out.h2_with = h2(p, c, Side::with_claim, S, t);
    out.h2_without = h2(p, c, Side::without_claim, S, t);
    out.correction = delta / p.gamma * std::cbrt(p.epsilon * p.epsilon) * (out.h2_with - out.h2_without);
    out.price += out.correction;
  }
  return out;
}

}  // namespace tcindiff
