#include "tcindiff/hjb_oracle.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "tcindiff/bs_engine.hpp"
#include "tcindiff/errors.hpp"
#include "tcindiff/expansion.hpp"

namespace tcindiff {

std::string to_string(ConstraintMode m) { return m == ConstraintMode::projection ? "projection" : "penalty"; }
std::string to_string(BoundaryMode m) { return m == BoundaryMode::zero_curvature ? "zero_curvature" : "zero_slope"; }

std::string GridSpec::describe() const {
  std::ostringstream os;
  os << n_S << "x" << n_y << "x" << n_t << " S=[" << S_min << "," << S_max << "]+" << padding_decades << "dec "
     << to_string(mode) << " " << to_string(boundary);
  return os.str();
}

GridSpec default_grid(const ClaimSpec& c) {
  GridSpec g;
  const double center = (c.kind == ClaimKind::mollified_call || c.kind == ClaimKind::mollified_put) ? c.K : 1.0;
  g.S_min = center / std::sqrt(10.0);
  g.S_max = center * std::sqrt(10.0);
  return g;
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

struct Layout {
  int n_S = 0, n_y = 0;
  double x_lo = 0.0, h = 0.0;
  std::vector<double> S, y_lo, dy;
  double y(int i, int k) const { return y_lo[i] + k * dy[i]; }
};

void check_spec(const GridSpec& g) {
  if (g.n_S < 16 || g.n_y < 16) throw DomainError("grid: n_S and n_y must be >= 16");
  if (g.n_t < 2) throw DomainError("grid: n_t must be >= 2");
  if (!(g.S_min > 0.0 && g.S_max > g.S_min)) throw DomainError("grid: bad S window");
  if (g.retained_slices < 2) throw DomainError("grid: need at least 2 retained slices");
  if (g.n_t % (g.retained_slices - 1) != 0) throw DomainError("grid: n_t must be a multiple of retained_slices-1");
  if (!(g.padding_decades >= 0.0) || !(g.window_halfwidths > 0.0)) throw DomainError("grid: bad padding/window");
  if (g.mode == ConstraintMode::penalty && !(g.penalty > 0.0)) throw DomainError("grid: penalty must be positive");
}

// ln S nodes with the window center on node n_S/2; halving n_S keeps the nodes nested.
void place_columns(const GridSpec& g, Layout& L) {
  L.n_S = g.n_S;
  L.n_y = g.n_y;
  const double x_c = 0.5 * (std::log(g.S_min) + std::log(g.S_max));
  L.x_lo = std::log(g.S_min) - g.padding_decades * std::log(10.0);
  L.h = (x_c - L.x_lo) / (g.n_S / 2);
  L.S.resize(g.n_S);
  for (int i = 0; i < g.n_S; ++i) L.S[i] = std::exp(L.x_lo + i * L.h);
}

// Static y-window per column: union over t of the band, widened on both sides.
void place_windows(const GridSpec& g, const MarketParams& p, const ClaimSpec& c, Side side, Layout& L) {
  const int n_samples = 33;
  L.y_lo.resize(L.n_S);
  L.dy.resize(L.n_S);
  for (int i = 0; i < L.n_S; ++i) {
    const double S = L.S[i];
    double lo = 1e300, hi = -1e300, half = 0.0;
    for (int s = 0; s < n_samples; ++s) {
      const double t = p.T * s / (n_samples - 1);
      double ys, a, b;
      try {
        const NoTradeBand nb = band(p, c, side, S, t);
        ys = nb.y_star;
        a = nb.y_minus;
        b = nb.y_plus;
        half = std::max(half, 0.5 * (b - a));
      } catch (const DegenerateBandError&) {
        ys = y_star(p, c, side, S, t);
        a = b = ys;
      }
      lo = std::min(lo, a);
      hi = std::max(hi, b);
    }
    half = std::max(half, 1e-6 * (1.0 + std::abs(0.5 * (lo + hi))));
    lo -= g.window_halfwidths * half;
    hi += g.window_halfwidths * half;
    L.y_lo[i] = lo;
    L.dy[i] = (hi - lo) / (L.n_y - 1);
  }
}

// Nodes inside the band at each retained time; throws when under-resolved.
void check_resolution(const GridSpec& g, const MarketParams& p, const ClaimSpec& c, Side side, const Layout& L,
                      const std::vector<double>& times, int& min_seen, long& exempt) {
  const double margin = side == Side::with_claim ? assumption_margin(c, p) : 1.0;
  min_seen = 1 << 30;
  exempt = 0;
  for (int i = 0; i < L.n_S; ++i) {
    for (double t : times) {
      const double S = L.S[i];
      int count = 0;
      try {
        const NoTradeBand nb = band(p, c, side, S, t);
        const double k0 = std::ceil((nb.y_minus - L.y_lo[i]) / L.dy[i] - 1e-9);
        const double k1 = std::floor((nb.y_plus - L.y_lo[i]) / L.dy[i] + 1e-9);
        count = static_cast<int>(std::max(0.0, k1 - k0 + 1));
      } catch (const DegenerateBandError&) {
        count = 0;
      }
      if (count < g.min_band_nodes) {
        // A pinched band is expected where the claim gamma cancels the Merton slope,
        // which only happens when the claim violates the cash-gamma margin.
        const TargetPartials tp = target_partials(p, c, side, S, t);
        const double m = std::abs(merton_scale(p) * std::exp(p.r * t));
        if (margin <= 0.0 && std::abs(S * S * tp.y_S) <= 0.5 * m) {
          ++exempt;
          continue;
        }
        std::ostringstream os;
        os << "no-trade band resolved by " << count << " y-nodes (< " << g.min_band_nodes << ") at S=" << S
           << " t=" << t << "; epsilon too large or n_y too small for this grid";
        throw ResolutionError(os.str(), count, g.min_band_nodes);
      }
      min_seen = std::min(min_seen, count);
    }
  }
}

struct Interp {
  int idx[2] = {0, 0};
  double w[2] = {0.0, 0.0};
  int n = 0;
};

// Reduced variable of column j at height y, as weights on that column's nodes.
Interp column_weights(const Layout& L, int j, double y, double a_ext) {
  Interp r;
  const double pos = (y - L.y_lo[j]) / L.dy[j];
  const int base = j * L.n_y;
  if (pos <= 0.0) {
    r.n = 1;
    r.idx[0] = base;
    r.w[0] = std::exp(a_ext * (L.y_lo[j] - y));
  } else if (pos >= L.n_y - 1) {
    r.n = 1;
    r.idx[0] = base + L.n_y - 1;
    r.w[0] = std::exp(a_ext * (y - L.y(j, L.n_y - 1)));
  } else {
    const int k = std::min(static_cast<int>(pos), L.n_y - 2);
    const double f = pos - k;
    r.n = 2;
    r.idx[0] = base + k;
    r.idx[1] = base + k + 1;
    r.w[0] = 1.0 - f;
    r.w[1] = f;
  }
  return r;
}

class Stepper {
 public:
  Stepper(const GridSpec& g, const MarketParams& p, const ClaimSpec& c, Side side, const Layout& L)
      : g_(g), p_(p), c_(c), side_(side), L_(L), N_(L.n_S * L.n_y) {}

  // Generator of the reduced equation at time t.
  SpMat generator(double t) const {
    const double delta = discount_factor(p_, t);
    const double D = 0.5 * p_.sigma * p_.sigma;
    const double h = L_.h;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N_) * 5);
    for (int i = 0; i < L_.n_S; ++i) {
      const double S = L_.S[i];
      const double hedge = side_ == Side::with_claim ? claim_delta_gamma(c_, p_, S, t).delta : 0.0;
      for (int k = 0; k < L_.n_y; ++k) {
        const int row = i * L_.n_y + k;
        const double y = L_.y(i, k);
        const double u = p_.gamma * S * (y - hedge) / delta;
        const double b = p_.mu - D - 2.0 * D * u;
        const double c0 = D * u * u - (p_.mu - p_.r) * u;
        double diag = c0, cm = 0.0, cp = 0.0;
        if (i == 0) {
          if (g_.boundary == BoundaryMode::zero_curvature) {
            diag += -b / h;
            cp = b / h;
          } else {
            diag += -2.0 * D / (h * h);
            cp = 2.0 * D / (h * h);
          }
        } else if (i == L_.n_S - 1) {
          if (g_.boundary == BoundaryMode::zero_curvature) {
            diag += b / h;
            cm = -b / h;
          } else {
            diag += -2.0 * D / (h * h);
            cm = 2.0 * D / (h * h);
          }
        } else {
          diag += -2.0 * D / (h * h);
          cm = D / (h * h) - b / (2.0 * h);
          cp = D / (h * h) + b / (2.0 * h);
        }
        trip.emplace_back(row, row, diag);
        auto add = [&](int j, double coef) {
          if (coef == 0.0) return;
          const Interp w = column_weights(L_, j, y, p_.gamma * p_.epsilon * L_.S[j] / delta);
          for (int m = 0; m < w.n; ++m) trip.emplace_back(row, w.idx[m], coef * w.w[m]);
        };
        if (i > 0) add(i - 1, cm);
        if (i < L_.n_S - 1) add(i + 1, cp);
      }
    }
    SpMat A(N_, N_);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  // One theta-step backwards over dt with the generator frozen at t_mid.
  void theta_step(Vec& q, double t_mid, double dt, double theta) {
    const SpMat A = generator(t_mid);
    Vec rhs = q;
    if (theta < 1.0) rhs += (1.0 - theta) * dt * (A * q);
    SpMat M(N_, N_);
    M.setIdentity();
    M -= theta * dt * A;
    Eigen::BiCGSTAB<SpMat> solver;
    solver.setTolerance(g_.solver_tolerance);
    solver.setMaxIterations(1000);
    solver.compute(M);
    Vec next = solver.solveWithGuess(rhs, q);
    if (solver.info() != Eigen::Success || !next.allFinite()) {
      std::ostringstream os;
      os << "oracle linear solve failed at t=" << t_mid << " after " << solver.iterations()
         << " iterations, residual " << solver.error();
      throw NumericError(os.str(), solver.error(), g_.solver_tolerance);
    }
    if (next.minCoeff() <= 0.0) {
      std::ostringstream os;
      os << "oracle lost positivity at t=" << t_mid << " (min " << next.minCoeff() << ")";
      throw NumericError(os.str(), next.minCoeff(), 0.0);
    }
    max_iterations = std::max(max_iterations, static_cast<int>(solver.iterations()));
    max_residual = std::max(max_residual, solver.error());
    q = std::move(next);
  }

  // Both gradient constraints, column by column. Returns max |change in ln q|.
  double constrain(Vec& q, double t) const {
    const double delta = discount_factor(p_, t);
    double change = 0.0;
    for (int i = 0; i < L_.n_S; ++i) {
      const double f = std::exp(p_.gamma * p_.epsilon * L_.S[i] * L_.dy[i] / delta);
      double* col = q.data() + static_cast<std::ptrdiff_t>(i) * L_.n_y;
      for (int pass = 0; pass < 2; ++pass) {
        // buy: descending; sell: ascending
        const bool buy = pass == 0;
        for (int s = 1; s < L_.n_y; ++s) {
          const int k = buy ? L_.n_y - 1 - s : s;
          const int nb = buy ? k + 1 : k - 1;
          const double bound = col[nb] * f;
          if (col[k] > bound) {
            const double old = col[k];
            if (g_.mode == ConstraintMode::projection) {
              col[k] = bound;
            } else {
              const double rho = g_.penalty * dt_;
              col[k] = (col[k] + rho * bound) / (1.0 + rho);
            }
            change = std::max(change, std::log(old / col[k]));
          }
        }
      }
    }
    return change;
  }

  void set_dt(double dt) { dt_ = dt; }

  int max_iterations = 0;
  double max_residual = 0.0;

 private:
  const GridSpec& g_;
  const MarketParams& p_;
  const ClaimSpec& c_;
  Side side_;
  const Layout& L_;
  int N_;
  double dt_ = 0.0;
};

QSlice make_slice(const QGrid& out, const Layout& L, const Vec& q, double t, const MarketParams& p,
                  const ClaimSpec& c, Side side) {
  QSlice s;
  s.t = t;
  s.delta = discount_factor(p, t);
  const int N = L.n_S * L.n_y;
  s.log_q.resize(N);
  for (int n = 0; n < N; ++n) s.log_q[n] = std::log(q[n]);
  s.active.assign(N, 0);
  s.v0.assign(L.n_S, 0.0);
  s.hedge.assign(L.n_S, 0.0);
  for (int i = 0; i < L.n_S; ++i) {
    if (side == Side::with_claim) {
      const BsGreeks gk = claim_v0(c, p, L.S[i], t);
      s.v0[i] = gk.V0;
      s.hedge[i] = gk.cash_delta / L.S[i];
    }
    const double a = p.gamma * p.epsilon * L.S[i] * L.dy[i] / s.delta;
    const double* lq = &s.log_q[static_cast<std::size_t>(i) * L.n_y];
    for (int k = 0; k < L.n_y; ++k) {
      const double tol = 1e-12 * (1.0 + std::abs(lq[k]));
      if (k + 1 < L.n_y && lq[k] >= lq[k + 1] + a - tol) s.active[i * L.n_y + k] = -1;
      else if (k > 0 && lq[k] >= lq[k - 1] + a - tol) s.active[i * L.n_y + k] = 1;
    }
  }
  (void)out;
  return s;
}

QGrid run(const GridSpec& g, const MarketParams& p, const ClaimSpec& c, Side side, bool check) {
  const auto t_start = std::chrono::steady_clock::now();
  check_spec(g);
  p.require_usable();
  if (!(p.epsilon > 0.0)) throw DomainError("solve_qvi: epsilon must be positive");
  if (side == Side::with_claim && c.kind == ClaimKind::none) throw DomainError("side w needs a claim");

  Layout L;
  place_columns(g, L);
  place_windows(g, p, c, side, L);

  QGrid out;
  out.spec = g;
  out.params = p;
  out.claim = c;
  out.side = side;
  out.h = L.h;
  out.S = L.S;
  out.y_lo = L.y_lo;
  out.dy = L.dy;

  const int every = g.n_t / (g.retained_slices - 1);
  const double dt = p.T / g.n_t;
  std::vector<double> times;
  for (int s = 0; s < g.retained_slices; ++s) times.push_back(p.T * s / (g.retained_slices - 1));
  if (check) check_resolution(g, p, c, side, L, times, out.min_band_nodes_seen, out.exempt_band_points);

  const int N = L.n_S * L.n_y;
  Vec q(N);
  for (int i = 0; i < L.n_S; ++i) {
    const double hedge = side == Side::with_claim ? payoff(c, p, L.S[i]).g1 : 0.0;
    for (int k = 0; k < L.n_y; ++k)
      q[i * L.n_y + k] = std::exp(p.gamma * p.epsilon * L.S[i] * std::abs(L.y(i, k) - hedge));
  }

  Stepper st(g, p, c, side, L);
  st.set_dt(dt);
  std::vector<QSlice> slices(g.retained_slices);
  slices.back() = make_slice(out, L, q, p.T, p, c, side);
  for (int n = g.n_t - 1; n >= 0; --n) {
    const double t0 = n * dt, t1 = (n + 1) * dt;
    if (g.n_t - 1 - n < g.rannacher_steps) {
      st.theta_step(q, t1 - 0.25 * dt, 0.5 * dt, 1.0);
      st.theta_step(q, t0 + 0.25 * dt, 0.5 * dt, 1.0);
    } else {
      st.theta_step(q, 0.5 * (t0 + t1), dt, 0.5);
    }
    out.max_projection_change = std::max(out.max_projection_change, st.constrain(q, t0));
    if (n % every == 0) slices[n / every] = make_slice(out, L, q, n == 0 ? 0.0 : t0, p, c, side);
  }
  out.slices = std::move(slices);
  out.max_solver_iterations = st.max_iterations;
  out.max_solver_residual = st.max_residual;
  out.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

}  // namespace

double QGrid::column_log_q(std::size_t s, int i, double yq) const {
  const QSlice& sl = slices.at(s);
  const double a = params.gamma * params.epsilon * S[i] / sl.delta;
  const double* lq = &sl.log_q[static_cast<std::size_t>(i) * n_y()];
  const double pos = (yq - y_lo[i]) / dy[i];
  if (pos <= 0.0) return lq[0] + a * (y_lo[i] - yq);
  if (pos >= n_y() - 1) return lq[n_y() - 1] + a * (yq - y(i, n_y() - 1));
  const int k = std::min(static_cast<int>(pos), n_y() - 2);
  const double f = pos - k;
  return (1.0 - f) * lq[k] + f * lq[k + 1];
}

double QGrid::log_Q_node(std::size_t s, int i, int k) const {
  const QSlice& sl = slices.at(s);
  return -params.gamma * (S[i] * y(i, k) - sl.v0[i]) / sl.delta + sl.log_q[static_cast<std::size_t>(i) * n_y() + k];
}

std::size_t QGrid::slice_index(double t) const {
  for (std::size_t s = 0; s < slices.size(); ++s)
    if (std::abs(slices[s].t - t) <= 1e-12 * std::max(1.0, params.T)) return s;
  std::ostringstream os;
  os << "t=" << t << " is not a retained slice of the oracle lattice";
  throw DomainError(os.str());
}

double QGrid::log_Q(double Sq, double yq, double t) const {
  const std::size_t s = slice_index(t);
  const double x = std::log(Sq);
  const double x0 = std::log(S.front());
  const double pos = (x - x0) / h;
  if (!(Sq > 0.0) || pos < -1e-9 || pos > n_S() - 1 + 1e-9) {
    std::ostringstream os;
    os << "S=" << Sq << " outside the oracle lattice [" << S.front() << ", " << S.back() << "]";
    throw DomainError(os.str());
  }
  const int i = std::clamp(static_cast<int>(pos), 0, n_S() - 2);
  const double f = std::clamp(pos - i, 0.0, 1.0);
  const double lq = (1.0 - f) * column_log_q(s, i, yq) + f * column_log_q(s, i + 1, yq);
  const double v0 = side == Side::with_claim ? claim_v0(claim, params, Sq, t).V0 : 0.0;
  return -params.gamma * (Sq * yq - v0) / slices[s].delta + lq;
}

QGrid solve_qvi(const GridSpec& grid, const MarketParams& p, const ClaimSpec& c, Side side) {
  QGrid fine = run(grid, p, c, side, true);
  if (!grid.error_estimate) return fine;
  if (grid.n_S % 4 != 0 || grid.n_y % 2 != 0 || grid.n_t % (2 * (grid.retained_slices - 1)) != 0)
    throw DomainError("grid: error estimate needs n_S % 4 == 0, even n_y and n_t/2 divisible by slices-1");
  GridSpec half = grid;
  half.n_S /= 2;
  half.n_y /= 2;
  half.n_t /= 2;
  half.error_estimate = false;
  const QGrid coarse = run(half, p, c, side, false);
  // Coarse columns are every other fine column and share the same y-windows.
  for (std::size_t s = 0; s < fine.slices.size(); ++s) {
    QSlice& sl = fine.slices[s];
    sl.error.resize(sl.log_q.size());
    for (int i = 0; i < fine.n_S(); ++i) {
      for (int k = 0; k < fine.n_y(); ++k) {
        const double yq = fine.y(i, k);
        double lc;
        if (i % 2 == 0) {
          lc = coarse.column_log_q(s, i / 2, yq);
        } else if (i / 2 + 1 < coarse.n_S()) {
          lc = 0.5 * (coarse.column_log_q(s, i / 2, yq) + coarse.column_log_q(s, i / 2 + 1, yq));
        } else {
          lc = coarse.column_log_q(s, i / 2, yq);
        }
        const std::size_t n = static_cast<std::size_t>(i) * fine.n_y() + k;
        sl.error[n] = std::abs(sl.log_q[n] - lc);
      }
    }
  }
  fine.runtime_seconds += coarse.runtime_seconds;
  return fine;
}

double oracle_price(const QGrid& w, const QGrid& one, double S, double t) {
  if (w.side != Side::with_claim || one.side != Side::without_claim)
    throw DomainError("oracle_price: expects (with-claim, without-claim) lattices");
  if (w.spec.n_S != one.spec.n_S || w.spec.n_y != one.spec.n_y || w.spec.n_t != one.spec.n_t ||
      w.S.front() != one.S.front() || w.h != one.h || w.params.epsilon != one.params.epsilon)
    throw DomainError("oracle_price: lattices do not share a grid");
  const double delta = discount_factor(w.params, t);
  return delta / w.params.gamma * (w.log_Q(S, 0.0, t) - one.log_Q(S, 0.0, t));
}

std::string SandwichReport::summary() const {
  std::ostringstream os;
  os.precision(6);
  os << satisfied << "/" << nodes << " nodes inside (" << 100.0 * fraction << "%), worst excess " << worst_excess
     << " at S=" << worst_S << " y=" << worst_y << " t=" << worst_t << ", q99 " << q99;
  if (skipped) os << ", " << skipped << " skipped";
  return os.str();
}

SandwichReport sandwich_report(const QGrid& q, const Expansion& e, double factor) {
  if (e.side() != q.side || e.params().epsilon != q.params.epsilon)
    throw DomainError("sandwich_report: expansion does not match the lattice");
  SandwichReport rep;
  rep.tolerance_factor = factor;
  std::vector<double> excess;
  const double lo = q.spec.S_min * (1 - 1e-12), hi = q.spec.S_max * (1 + 1e-12);
  for (std::size_t s = 0; s < q.slices.size(); ++s) {
    const QSlice& sl = q.slices[s];
    if (sl.t >= q.params.T) continue;
    for (int i = 1; i < q.n_S() - 1; ++i) {
      if (q.S[i] < lo || q.S[i] > hi) continue;
      for (int k = 1; k < q.n_y() - 1; ++k) {
        const double yq = q.y(i, k);
        double Lp, Lm;
        try {
          Lp = e.log_q(q.S[i], yq, sl.t, Bound::plus).L;
          Lm = e.log_q(q.S[i], yq, sl.t, Bound::minus).L;
        } catch (const DegenerateBandError&) {
          ++rep.skipped;
          continue;
        }
        const double L = q.log_Q_node(s, i, k);
        const std::size_t n = static_cast<std::size_t>(i) * q.n_y() + k;
        const double err = sl.error.empty() ? 0.0 : sl.error[n];
        const double tol = factor * err + 1e-12 * (1.0 + std::abs(L));
        const double viol = std::max({Lp - L, L - Lm, 0.0});
        const double ratio = viol / tol;
        ++rep.nodes;
        const bool ok = viol <= tol;
        rep.indicator.push_back(ok ? 1 : 0);
        if (ok) ++rep.satisfied;
        excess.push_back(ratio);
        if (ratio > rep.worst_excess || rep.nodes == 1) {
          rep.worst_excess = ratio;
          rep.worst_S = q.S[i];
          rep.worst_y = yq;
          rep.worst_t = sl.t;
        }
      }
    }
  }
  rep.fraction = rep.nodes ? static_cast<double>(rep.satisfied) / rep.nodes : 0.0;
  auto quant = [&](double qq) {
    if (excess.empty()) return 0.0;
    std::vector<double> v = excess;
    const std::size_t idx = std::min(v.size() - 1, static_cast<std::size_t>(qq * (v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + idx, v.end());
    return v[idx];
  };
  rep.q50 = quant(0.5);
  rep.q90 = quant(0.9);
  rep.q99 = quant(0.99);
  return rep;
}

SandwichReport sandwich_report(const QGrid& q, const MarketParams& p, const ClaimSpec& c, Side side,
                               double factor) {
  return sandwich_report(q, Expansion(p, c, side), factor);
}

CsvTable lattice_table(const QGrid& q, bool full) {
  CsvTable tab({"S", "y", "t", "Q", "constraint_active"});
  const double lo = q.spec.S_min * (1 - 1e-12), hi = q.spec.S_max * (1 + 1e-12);
  for (std::size_t s = 0; s < q.slices.size(); ++s) {
    const QSlice& sl = q.slices[s];
    for (int i = 0; i < q.n_S(); ++i) {
      if (!full && (q.S[i] < lo || q.S[i] > hi)) continue;
      for (int k = 0; k < q.n_y(); ++k) {
        const signed char a = sl.active[static_cast<std::size_t>(i) * q.n_y() + k];
        tab.row({format_double(q.S[i]), format_double(q.y(i, k)), format_double(sl.t),
                 format_double(std::exp(q.log_Q_node(s, i, k))), a < 0 ? "buy" : a > 0 ? "sell" : "none"});
      }
    }
  }
  return tab;
}

}  // namespace tcindiff
