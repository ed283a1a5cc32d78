#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tcindiff/bs_engine.hpp"
#include "tcindiff/market_model.hpp"

namespace tcindiff {

// Frictionless target holding and the partials the expansion needs.
struct TargetPartials {
  double y_star = 0.0;
  double y_S = 0.0;
  double y_SS = 0.0;
  double y_SSS = 0.0;
  double y_t = 0.0;
  double y_St = 0.0;
};

TargetPartials target_partials(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t);
double y_star(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t);

struct NoTradeBand {
  double y_star = 0.0;
  double Y = 0.0;  // half-width before the epsilon^{1/3} scaling
  double y_minus = 0.0;
  double y_plus = 0.0;
};

// Needs only delta and gamma of the claim; cheap enough for simulation loops.
NoTradeBand band(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t);

// Band half-width Y^(j) from the target slope. Throws DegenerateBandError when S^2 y_S vanishes.
double band_half_width(const MarketParams& p, double S, double t, double target_slope);

struct H4Partials {
  double H4 = 0.0;
  double H4_Y = 0.0;
  double H4_YY = 0.0;
  double H4_S = 0.0;
  double H4_YS = 0.0;
  double H4_SS = 0.0;
  double H4_t = 0.0;
};

// Y is the band-relative coordinate; requires |Y| <= Y^(j)(S,t).
H4Partials h4_partials(const MarketParams& p, const ClaimSpec& c, Side side, double S, double Y, double t);
H4Partials h4_from_target(const MarketParams& p, const TargetPartials& tp, double S, double Y, double t);

struct H2Options {
  int inner_nodes = 64;
  double tolerance = 1e-7;   // relative, outer adaptive integral
  int max_depth = 18;
  bool force_heat_kernel = false;  // skip the closed form (no claim or gamma-free claim)
};

// Second-order correction term. Closed form when the target slope is -m/S^2
// (no claim, or a claim with zero gamma), heat-kernel quadrature otherwise.
class H2Field {
 public:
  H2Field(MarketParams p, ClaimSpec c, Side side, H2Options opt = {});

  bool closed_form() const { return closed_form_; }
  double value(double S, double t) const;
  double cash_slope(double S, double t) const;  // S * dH2/dS
  // S^2 d2H2/dS2 via a central difference of the cash slope in ln S.
  double cash_curvature(double S, double t) const;
  // Heat-equation variable: tau = sigma^2 (T-t)/2, x = ln S.
  double transformed(double tau, double x) const;
  double source(double S, double t) const;
  double source_cash_slope(double S, double t) const;

  // Solution of H_t + r S H_S + 1/2 sigma^2 S^2 H_SS + f = 0, H(.,T) = 0, for any source f(S,t).
  double solve_with_source(const std::function<double(double, double)>& f, double S, double t) const;

  const MarketParams& params() const { return p_; }

 private:
  // Source restricted to one calendar time; kinks are the ln S where the target slope vanishes.
  struct SourceSlice {
    double t = 0.0, C = 0.0, m = 0.0, v = 0.0, a = 0.0;
    bool mollified = false;
    std::vector<double> kinks;
    double eval(const H2Field& field, double x) const;
  };
  SourceSlice slice(double t) const;
  // f == nullptr integrates the built-in source.
  double transformed_integral(const std::function<double(double, double)>* f, double tau, double x,
                              bool x_derivative) const;
  double cached(int which, double tau, double x) const;
  double closed_form_value(double t) const;

  MarketParams p_;
  ClaimSpec c_;
  Side side_;
  H2Options opt_;
  bool closed_form_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<long long, long long>, double> cache_[2];
};

double h2(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t);
double h2_cash_slope(const MarketParams& p, const ClaimSpec& c, Side side, double S, double t);

struct H3Constants {
  double M = 0.0;
  double M1 = 0.0;
};

double h3_offset_constant(const MarketParams& p);  // M1
// Sign +1 gives the lower (subsolution) candidate, -1 the upper.
double h3(const H3Constants& k, const MarketParams& p, double t, int sign);

enum class Bound { plus, minus };  // Q+ (below the value) and Q- (above)
enum class Region { buy, no_trade, sell };
std::string to_string(Region r);

struct ExpansionBundle {
  double H0 = 0.0;
  double H2 = 0.0;
  double S_H2_S = 0.0;
  double H3_plus = 0.0;
  double H3_minus = 0.0;
  double M = 0.0;
  double M1 = 0.0;
  H4Partials h4;
};

// ln Q and its partials at one (S, y, t).
struct LogQ {
  double L = 0.0;
  double L_y = 0.0;
  double L_yy = 0.0;
  double L_S = 0.0;
  double L_yS = 0.0;
  double L_SS = 0.0;
  double L_t = 0.0;
  Region region = Region::no_trade;
};

// Candidate functions Q+ and Q- for one (params, claim, side).
// Copies share the H2 field and the lazily computed constant M.
class Expansion {
 public:
  Expansion(const MarketParams& p, const ClaimSpec& c, Side side, H2Options opt = {});

  Expansion with_epsilon(double epsilon) const;

  const MarketParams& params() const { return p_; }
  const ClaimSpec& claim() const;
  Side side() const;
  const H2Field& h2_field() const;

  TargetPartials target(double S, double t) const;
  NoTradeBand band(double S, double t) const;
  H3Constants h3_constants() const;  // first call computes M on a 64x32x17 grid
  ExpansionBundle bundle(double S, double Y, double t) const;

  LogQ log_q(double S, double y, double t, Bound b) const;
  // Evaluates the formula of the given region even outside it (one-sided limits at the band edges).
  LogQ log_q_as(double S, double y, double t, Bound b, std::optional<Region> region) const;
  double q(double S, double y, double t, Bound b) const;
  // (dQ/dt + mu S dQ/dS + 1/2 sigma^2 S^2 d2Q/dS2) / Q
  double generator_ratio(double S, double y, double t, Bound b) const;
  static double generator_ratio(const LogQ& l, const MarketParams& p, double S);

 private:
  struct Shared;
  LogQ log_q_no_trade(double S, double y, double t, Bound b, const TargetPartials& tp, const BsGreeks& g,
                      double Yj, double Yc) const;
  std::shared_ptr<Shared> shared_;
  MarketParams p_;
};

double q_pm(const MarketParams& p, const ClaimSpec& c, Side side, double S, double y, double t, Bound b);

struct ValueEstimate {
  double V = 0.0;
  double certainty_equivalent = 0.0;
  double log_q = 0.0;
  const char* error_order = "O(epsilon)";
};

ValueEstimate value_function(const MarketParams& p, const ClaimSpec& c, Side side, double t, double B, double y,
                             double S);

struct PriceEstimate {
  double price = 0.0;
  double v0 = 0.0;
  double correction = 0.0;  // (delta/gamma) eps^{2/3} (H2^w - H2^1)
  double h2_with = 0.0;
  double h2_without = 0.0;
  const char* error_order = "O(epsilon)";
};

PriceEstimate indifference_price(const MarketParams& p, const ClaimSpec& c, double S, double t);

}  // namespace tcindiff
