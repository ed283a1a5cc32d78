#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tcindiff/csv.hpp"
#include "tcindiff/market_model.hpp"

namespace tcindiff {

class Expansion;

enum class ConstraintMode { projection, penalty };
enum class BoundaryMode { zero_curvature, zero_slope };
std::string to_string(ConstraintMode m);
std::string to_string(BoundaryMode m);

struct GridSpec {
  // Reporting window; the lattice adds `padding_decades` on each side.
  double S_min = 1.0 / 3.1622776601683795;
  double S_max = 3.1622776601683795;
  double padding_decades = 1.5;
  int n_S = 128;
  int n_y = 96;
  int n_t = 512;
  int retained_slices = 9;       // evenly spaced in t, both ends included
  double window_halfwidths = 3.0;  // y-window = band +- this many band half-widths
  int min_band_nodes = 8;
  ConstraintMode mode = ConstraintMode::projection;
  double penalty = 1e8;  // only for mode == penalty
  BoundaryMode boundary = BoundaryMode::zero_curvature;
  int rannacher_steps = 2;
  double solver_tolerance = 1e-13;
  bool error_estimate = true;  // extra half-resolution solve
  std::string describe() const;
};

GridSpec default_grid(const ClaimSpec& c);

// One retained time slice.
struct QSlice {
  double t = 0.0;
  double delta = 1.0;
  std::vector<double> log_q;         // [i * n_y + k], reduced variable
  std::vector<double> error;         // |log Q_h - log Q_2h|, empty without estimate
  std::vector<signed char> active;   // -1 buy, +1 sell, 0 none
  std::vector<double> v0;            // claim value per column (zero for side 1)
  std::vector<double> hedge;         // claim delta per column
};

// Finite-difference solution of the reduced QVI.
// Q(S,y,t) = exp(-gamma (S y - V0 1_w) / delta) * q(S,y,t); q is what the lattice stores.
// Beyond a column's y-window q follows the exact buy/sell extension.
struct QGrid {
  GridSpec spec;
  MarketParams params;
  ClaimSpec claim;
  Side side = Side::without_claim;
  double h = 0.0;  // ln S spacing
  std::vector<double> S;
  std::vector<double> y_lo, dy;  // per-column uniform y grid
  std::vector<QSlice> slices;
  double max_projection_change = 0.0;
  double max_solver_residual = 0.0;
  int max_solver_iterations = 0;
  int min_band_nodes_seen = 0;
  long exempt_band_points = 0;
  double runtime_seconds = 0.0;

  int n_S() const { return spec.n_S; }
  int n_y() const { return spec.n_y; }
  double y(int i, int k) const { return y_lo[i] + k * dy[i]; }
  // Log of the reduced variable in column i at slice s, any y.
  double column_log_q(std::size_t s, int i, double y) const;
  double log_Q_node(std::size_t s, int i, int k) const;
  // Bilinear in (ln S, y) on the reduced variable; throws DomainError outside the S-range or off a slice.
  double log_Q(double S, double y, double t) const;
  std::size_t slice_index(double t) const;
};

QGrid solve_qvi(const GridSpec& grid, const MarketParams& p, const ClaimSpec& c, Side side);

// (delta/gamma) ln(Q^w(S,0,t) / Q^1(S,0,t)).
double oracle_price(const QGrid& with_claim, const QGrid& without_claim, double S, double t);

struct SandwichReport {
  long nodes = 0;
  long satisfied = 0;
  long skipped = 0;  // degenerate band, no candidate defined
  double fraction = 0.0;
  double worst_excess = 0.0;  // max over nodes of violation / tolerance, <= 1 means inside
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;  // quantiles of the excess ratio
  double tolerance_factor = 3.0;
  double worst_S = 0.0, worst_y = 0.0, worst_t = 0.0;
  std::vector<signed char> indicator;  // per checked node, 1 inside
  std::string summary() const;
};

// Q+ <= Q_FD <= Q- at interior nodes of the reporting window, violations measured
// against `factor` times the per-node discretization-error estimate.
SandwichReport sandwich_report(const QGrid& q, const Expansion& e, double factor = 3.0);
SandwichReport sandwich_report(const QGrid& q, const MarketParams& p, const ClaimSpec& c, Side side,
                               double factor = 3.0);

// Columns S, y, t, Q, constraint_active; reporting window only unless full.
CsvTable lattice_table(const QGrid& q, bool full = false);

}  // namespace tcindiff
