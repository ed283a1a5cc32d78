#include "tcindiff/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "tcindiff/errors.hpp"
#include "tcindiff/expansion.hpp"

namespace tcindiff {

std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::band: return "band";
    case PolicyKind::frictionless_target: return "frictionless_target";
    case PolicyKind::no_rebalance: return "no_rebalance";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "band") return PolicyKind::band;
  if (name == "frictionless_target" || name == "frictionless") return PolicyKind::frictionless_target;
  if (name == "no_rebalance" || name == "none") return PolicyKind::no_rebalance;
  throw DomainError("unknown policy '" + name + "'");
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Pairwise sum; result depends only on the order of v.
double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

double pairwise_mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
}

struct PathOutcome {
  double wealth = 0.0;
  double cost = 0.0;
  double traded = 0.0;
  int trade_steps = 0;
  int degenerate_steps = 0;
};

struct Walker {
  const MarketParams& p;
  const ClaimSpec& c;
  Side side;
  Policy policy;
  int n_steps;
  PortfolioPoint start;

  // Target interval at (S, t); zero width where the band degenerates.
  std::pair<double, double> interval(double S, double t, bool& degenerate) const {
    degenerate = false;
    if (policy.kind == PolicyKind::frictionless_target) {
      const double ys = y_star(p, c, side, S, t);
      return {ys, ys};
    }
    try {
      const NoTradeBand b = band(p, c, side, S, t);
      return {b.y_minus, b.y_plus};
    } catch (const DegenerateBandError&) {
      degenerate = true;
      const double ys = y_star(p, c, side, S, t);
      return {ys, ys};
    }
  }

  PathOutcome run(std::mt19937_64& rng, double sign, int path, std::vector<TraceRow>* trace) const {
    std::normal_distribution<double> normal;
    const double dt = (p.T - start.t) / n_steps;
    const double drift = (p.mu - 0.5 * p.sigma * p.sigma) * dt;
    const double vol = p.sigma * std::sqrt(dt);
    const double growth = std::exp(p.r * dt);
    PathState st{start.t, start.B, start.y, start.S, 0.0, 0.0, 0.0};
    PathOutcome out;
    for (int k = 0; k <= n_steps; ++k) {
      st.t = (k == n_steps) ? p.T : start.t + k * dt;
      if (k > 0) {
        const double xi = sign * normal(rng);
        st.S *= std::exp(drift + vol * xi);
        st.B *= growth;
      }
      double traded = 0.0;
      if (k < n_steps && policy.kind != PolicyKind::no_rebalance) {
        bool degenerate = false;
        const auto [lo, hi] = interval(st.S, st.t, degenerate);
        if (degenerate) ++out.degenerate_steps;
        if (st.y < lo) traded = lo - st.y;
        else if (st.y > hi) traded = hi - st.y;
      }
      double cost = 0.0;
      if (traded != 0.0) {
        // dB = -(1+eps) S dL + (1-eps) S dM
        cost = p.epsilon * st.S * std::abs(traded);
        st.B -= traded * st.S + cost;
        st.y += traded;
        if (traded > 0.0) st.L_cum += traded;
        else st.M_cum -= traded;
        st.cost_paid += cost;
        ++out.trade_steps;
      }
      if (trace) {
        const char* action = traded > 0.0 ? "buy" : traded < 0.0 ? "sell" : "hold";
        trace->push_back({path, st.t, st.S, st.y, st.B, action, traded, cost});
      }
    }
    PortfolioPoint end{p.T, st.B, st.y, st.S};
    out.wealth = terminal_wealth(end, p, c, side);
    out.cost = st.cost_paid;
    out.traded = st.L_cum + st.M_cum;
    return out;
  }
};

}  // namespace

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
  std::uint64_t x = seed;
  const std::uint64_t a = splitmix64(x);
  x = a ^ (path * 0xD1B54A32D192ED03ull);
  splitmix64(x);
  return splitmix64(x);
}

SimResult simulate(const MarketParams& p, const ClaimSpec& c, Side side, Policy policy, long n_paths, int n_steps,
                   std::uint64_t seed, const PortfolioPoint& start, const SimOptions& opt) {
  p.require_usable();
  if (side == Side::with_claim && c.kind == ClaimKind::none) throw DomainError("side w needs a claim");
  if (n_steps < 1) throw DomainError("simulate: n_steps must be >= 1");
  if (n_paths < 1) throw DomainError("simulate: n_paths must be >= 1");
  if (!(start.S > 0.0) || !std::isfinite(start.S)) throw DomainError("simulate: start S must be positive");
  if (!(start.t >= 0.0 && start.t < p.T)) throw DomainError("simulate: start t must lie in [0,T)");
  if (!std::isfinite(start.B) || !std::isfinite(start.y)) throw DomainError("simulate: start state not finite");
  if (opt.antithetic && n_paths % 2 != 0) throw DomainError("simulate: antithetic needs an even path count");

  const Walker walker{p, c, side, policy, n_steps, start};
  std::vector<PathOutcome> outcomes(static_cast<std::size_t>(n_paths));
  SimResult res;
  const int n_trace = static_cast<int>(std::min<long>(std::max(opt.trace_paths, 0), n_paths));
  std::vector<std::vector<TraceRow>> traces(n_trace);

  auto one_path = [&](long i) {
    const long stream = opt.antithetic ? i / 2 : i;
    const double sign = (opt.antithetic && (i % 2 == 1)) ? -1.0 : 1.0;
    std::mt19937_64 rng(path_seed(seed, static_cast<std::uint64_t>(stream)));
    outcomes[i] = walker.run(rng, sign, static_cast<int>(i), i < n_trace ? &traces[i] : nullptr);
  };

  unsigned n_threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<long>(n_threads, n_paths));
  if (n_threads <= 1) {
    for (long i = 0; i < n_paths; ++i) one_path(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (long i = w; i < n_paths; i += n_threads) one_path(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Aggregate in path order so thread count never changes the bits.
  const std::size_t n = outcomes.size();
  std::vector<double> a(n), tmp(n);
  double amax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = -p.gamma * outcomes[i].wealth;
    if (!std::isfinite(a[i])) throw NumericError("simulate: non-finite terminal wealth", a[i], 0.0);
    amax = std::max(amax, a[i]);
  }
  for (std::size_t i = 0; i < n; ++i) tmp[i] = std::exp(a[i] - amax);
  const double mean_e = pairwise_mean(tmp);

  // Antithetic pairs are averaged before the variance estimate.
  std::vector<double> units;
  if (opt.antithetic) {
    units.resize(n / 2);
    for (std::size_t i = 0; i < n / 2; ++i) units[i] = 0.5 * (tmp[2 * i] + tmp[2 * i + 1]);
  } else {
    units = tmp;
  }
  for (auto& u : units) u = (u - mean_e) * (u - mean_e);
  const double m = static_cast<double>(units.size());
  const double var = m > 1 ? pairwise_sum(units.data(), units.size()) / (m - 1.0) : 0.0;

  res.n_paths = n_paths;
  res.n_steps = n_steps;
  res.t0 = start.t;
  res.gamma = p.gamma;
  res.delta = discount_factor(p, start.t);
  res.log_neg_mean_utility = amax + std::log(mean_e);
  res.mean_utility = -std::exp(res.log_neg_mean_utility);
  res.rel_std_error = std::sqrt(var / m) / mean_e;
  res.std_error = res.rel_std_error * std::abs(res.mean_utility);

  for (std::size_t i = 0; i < n; ++i) tmp[i] = outcomes[i].wealth;
  res.mean_wealth = pairwise_mean(tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = outcomes[i].cost;
  res.mean_cost = pairwise_mean(tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = outcomes[i].traded;
  res.mean_shares_traded = pairwise_mean(tmp);
  double trade_steps = 0.0, degenerate = 0.0;
  for (const auto& o : outcomes) {
    trade_steps += o.trade_steps;
    degenerate += o.degenerate_steps;
  }
  res.trade_step_fraction = trade_steps / (static_cast<double>(n) * n_steps);
  res.degenerate_band_steps = degenerate;
  for (auto& t : traces) res.trace.insert(res.trace.end(), t.begin(), t.end());
  return res;
}

CertaintyEquivalent certainty_equivalent(const SimResult& res, const MarketParams& p, double t) {
  if (!std::isfinite(res.log_neg_mean_utility))
    throw InternalConsistencyError("certainty_equivalent: mean utility is not in (-inf, 0)", res.mean_utility, 0.0);
  const double delta = discount_factor(p, t);
  CertaintyEquivalent ce;
  ce.value = -delta / p.gamma * res.log_neg_mean_utility;
  ce.std_error = delta / p.gamma * res.rel_std_error;
  return ce;
}

CsvTable trace_table(const SimResult& res) {
  CsvTable tab({"path", "t", "S", "y", "B", "action", "traded_shares", "cost"});
  for (const auto& r : res.trace)
    tab.row({std::to_string(r.path), format_double(r.t), format_double(r.S), format_double(r.y), format_double(r.B),
             r.action, format_double(r.traded), format_double(r.cost)});
  return tab;
}

}  // namespace tcindiff
