#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcindiff/csv.hpp"
#include "tcindiff/expansion.hpp"

namespace tcindiff {

struct CheckReport {
  std::string name;
  std::string grid;
  double worst_violation = 0.0;
  double tolerance = 0.0;
  double S = 0.0, y = 0.0, t = 0.0;  // location of the worst violation
  std::size_t points = 0;
  bool passed = false;
  std::string note;
};

// (S, band coordinate, t) grid over the no-trade band. S is log-spaced.
struct VerifyGrid {
  double S_min = 0.0;
  double S_max = 0.0;
  int n_S = 32;
  int n_Y = 32;
  int n_t = 9;
  std::string describe() const;
};

// One decade centred on the strike (or on S = 1 without a claim).
VerifyGrid default_verify_grid(const Expansion& e);

// +DQ+/Q+ >= -tol (plus) or DQ-/Q- <= tol (minus) on the band grid. Analytic partials are
// checked against central differences first and an InternalConsistencyError is thrown on mismatch.
CheckReport verify_pde_sign(const Expansion& e, const VerifyGrid& g, Bound b, double tol = 1e-8);
// Same on the buy or sell extension (3 half-widths beyond the band edge).
CheckReport verify_pde_sign_region(const Expansion& e, const VerifyGrid& g, Bound b, Region region,
                                   double tol = 1e-8);

// Residual with the constant-M part removed must shrink by at least min_ratio when epsilon -> epsilon/8.
CheckReport verify_epsilon_scaling(const Expansion& e, const VerifyGrid& g, Bound b, double min_ratio = 6.0);

CheckReport verify_gradient_constraints(const Expansion& e, const VerifyGrid& g, Region region, Bound b,
                                        double tol = 1e-8);

CheckReport verify_final_time(const Expansion& e, const VerifyGrid& g, double tol = 1e-10);

CheckReport verify_smooth_pasting(const Expansion& e, int samples, std::uint64_t seed, double tol = 1e-8);

// Largest epsilon in [lo, hi] (log bisection) at which both generator signs hold on the grid.
double admissible_epsilon(const Expansion& e, const VerifyGrid& g, double lo, double hi, int iterations = 12);

// All checks for one expansion, in a fixed order.
std::vector<CheckReport> verify_all(const Expansion& e, const VerifyGrid& g, int pasting_samples,
                                    std::uint64_t seed);

CsvTable reports_table(const std::vector<CheckReport>& reports);
std::string reports_summary(const std::vector<CheckReport>& reports);

}  // namespace tcindiff
