#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "tcindiff/bs_engine.hpp"
#include "tcindiff/csv.hpp"
#include "tcindiff/errors.hpp"
#include "tcindiff/expansion.hpp"
#include "tcindiff/hjb_oracle.hpp"
#include "tcindiff/simulator.hpp"
#include "tcindiff/verifier.hpp"

namespace tcindiff::cli {

namespace {

class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  const ScenarioConfig& cfg;
  const RunOptions& opt;
  std::string command;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void say(const std::string& s) const {
    if (opt.log) *opt.log << s << "\n";
  }

  void stamp(CsvTable& tab) const {
    char h[32];
    std::snprintf(h, sizeof h, "%016llx", static_cast<unsigned long long>(cfg.hash()));
    if (!opt.deterministic) {
      const std::time_t now = std::time(nullptr);
      char buf[64];
      std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      tab.comment_front(std::string("generated ") + buf + " elapsed_s=" + format_double(el));
    }
    tab.comment_front("tcindiff " + command + " config_hash=" + h + " seed=" + std::to_string(cfg.seed));
  }

  std::string save(CsvTable& tab, const std::string& name) const {
    stamp(tab);
    std::filesystem::create_directories(opt.out_dir);
    const std::string path = (std::filesystem::path(opt.out_dir) / name).string();
    tab.save(path);
    say("wrote " + path);
    return path;
  }
};

ClaimSpec effective_claim(const ScenarioConfig& cfg) {
  switch (cfg.claim.kind) {
    case ClaimKind::mollified_call: return ClaimSpec::mollified_call(cfg.claim.K, cfg.claim.delta_T);
    case ClaimKind::mollified_put: return ClaimSpec::mollified_put(cfg.claim.K, cfg.claim.delta_T);
    case ClaimKind::linear: return ClaimSpec::linear(cfg.claim.coeff);
    default: return ClaimSpec::none();
  }
}

// Range problems are configuration errors; a failed assumption is reported separately.
void check_config(const ScenarioConfig& cfg) {
  try {
    cfg.market.require_usable();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("market: ") + e.what());
  }
  const bool mollified = cfg.claim.kind == ClaimKind::mollified_call || cfg.claim.kind == ClaimKind::mollified_put;
  if (mollified && !(cfg.claim.K > 0.0 && std::isfinite(cfg.claim.K))) throw ConfigError("claim.K must be positive");
  if (mollified && !(cfg.claim.delta_T > 0.0 && std::isfinite(cfg.claim.delta_T)))
    throw ConfigError("claim.delta_T must be positive");
  if (!std::isfinite(cfg.claim.coeff)) throw ConfigError("claim.coeff must be finite");
  if (cfg.sides.empty()) throw ConfigError("side is empty");
  for (Side s : cfg.sides)
    if (s == Side::with_claim && cfg.claim.kind == ClaimKind::none)
      throw ConfigError("side w needs claim.kind other than none");
  if (!(cfg.S > 0.0)) throw ConfigError("point.S must be positive");
  if (!(cfg.t >= 0.0 && cfg.t <= cfg.market.T)) throw ConfigError("point.t must lie in [0, market.T]");
}

// Returns false when the assumption check fails and strict mode asks to stop.
bool check_assumptions(const Context& ctx, const ClaimSpec& c) {
  const ValidationReport rep = validate_params(ctx.cfg.market, c);
  for (const auto& w : rep.warnings) ctx.say("warning: " + w);
  if (rep.passed) return true;
  ctx.say("assumption check failed: " + rep.summary());
  if (ctx.cfg.strict) return false;
  ctx.say("continuing (validation.strict = false)");
  return true;
}

int cmd_price(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ClaimSpec c = effective_claim(cfg);
  const PriceEstimate pe = indifference_price(cfg.market, c, cfg.S, cfg.t);
  CsvTable tab({"S", "t", "epsilon", "price", "v0", "correction", "h2_with", "h2_without", "error_order"});
  tab.row({format_double(cfg.S), format_double(cfg.t), format_double(cfg.market.epsilon), format_double(pe.price),
           format_double(pe.v0), format_double(pe.correction), format_double(pe.h2_with),
           format_double(pe.h2_without), pe.error_order});
  ctx.save(tab, "price.csv");
  ctx.say("price " + format_double(pe.price) + " = V0 " + format_double(pe.v0) + " + " +
          format_double(pe.correction));
  return exit_ok;
}

std::vector<double> log_space(double a, double b, int n) {
  std::vector<double> v;
  if (n == 1) return {a};
  for (int i = 0; i < n; ++i) v.push_back(std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / (n - 1)));
  return v;
}

int cmd_band(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (!(cfg.band_S_min > 0.0 && cfg.band_S_max >= cfg.band_S_min))
    throw ConfigError("band.S_min/S_max must satisfy 0 < S_min <= S_max");
  const ClaimSpec c = effective_claim(cfg);
  CsvTable tab({"side", "S", "t", "y_minus", "y_star", "y_plus", "Y", "status"});
  std::vector<double> ts;
  if (cfg.band_n_t == 1) ts = {cfg.t};
  else
    for (int k = 0; k < cfg.band_n_t; ++k) ts.push_back(cfg.market.T * k / (cfg.band_n_t - 1));
  for (Side side : cfg.sides) {
    for (double t : ts) {
      for (double S : log_space(cfg.band_S_min, cfg.band_S_max, cfg.band_n_S)) {
        try {
          const NoTradeBand b = band(cfg.market, c, side, S, t);
          tab.row({to_string(side), format_double(S), format_double(t), format_double(b.y_minus),
                   format_double(b.y_star), format_double(b.y_plus), format_double(b.Y), "ok"});
        } catch (const DegenerateBandError&) {
          const double ys = y_star(cfg.market, c, side, S, t);
          tab.row({to_string(side), format_double(S), format_double(t), format_double(ys), format_double(ys),
                   format_double(ys), "0", "degenerate"});
        }
      }
    }
  }
  ctx.save(tab, "band.csv");
  return exit_ok;
}

int cmd_simulate(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ClaimSpec c = effective_claim(cfg);
  CsvTable tab({"side", "policy", "epsilon", "paths", "steps", "seed", "start_y", "mean_utility", "utility_se",
                "ce", "ce_se", "expansion_ce", "mean_wealth", "mean_cost", "mean_shares_traded",
                "trade_step_fraction", "degenerate_band_steps"});
  for (Side side : cfg.sides) {
    PortfolioPoint start{cfg.t, cfg.B, cfg.y, cfg.S};
    if (cfg.y_at_target) start.y = y_star(cfg.market, c, side, cfg.S, cfg.t);
    SimOptions so;
    so.antithetic = cfg.antithetic;
    so.threads = cfg.threads;
    so.trace_paths = cfg.trace_paths;
    const SimResult r = simulate(cfg.market, c, side, Policy{cfg.policy}, cfg.paths, cfg.steps, cfg.seed, start, so);
    const CertaintyEquivalent ce = certainty_equivalent(r, cfg.market, cfg.t);
    const ValueEstimate ve = value_function(cfg.market, c, side, cfg.t, start.B, start.y, start.S);
    tab.row({to_string(side), to_string(cfg.policy), format_double(cfg.market.epsilon), std::to_string(r.n_paths),
             std::to_string(r.n_steps), std::to_string(cfg.seed), format_double(start.y),
             format_double(r.mean_utility), format_double(r.std_error), format_double(ce.value),
             format_double(ce.std_error), format_double(ve.certainty_equivalent), format_double(r.mean_wealth),
             format_double(r.mean_cost), format_double(r.mean_shares_traded), format_double(r.trade_step_fraction),
             format_double(r.degenerate_band_steps)});
    ctx.say("side " + to_string(side) + ": CE " + format_double(ce.value) + " +- " + format_double(ce.std_error) +
            ", expansion " + format_double(ve.certainty_equivalent));
    if (cfg.trace_paths > 0) {
      CsvTable tr = trace_table(r);
      ctx.save(tr, "simulate_trace_" + to_string(side) + ".csv");
    }
  }
  ctx.save(tab, "simulate.csv");
  return exit_ok;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int cmd_oracle(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ClaimSpec c = effective_claim(cfg);
  std::vector<double> eps = cfg.oracle_epsilons;
  if (eps.empty()) eps = {cfg.market.epsilon};
  for (double e : eps)
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("oracle epsilons must lie in (0,1)");
  const bool priced = c.kind != ClaimKind::none;

  CsvTable stats({"epsilon", "side", "grid", "sandwich_nodes", "sandwich_inside", "sandwich_fraction",
                  "worst_excess", "excess_q99", "skipped", "max_projection_change", "min_band_nodes",
                  "exempt_band_points"});
  CsvTable prices({"epsilon", "S", "t", "oracle_price", "v0", "expansion_price", "oracle_minus_v0"});
  std::vector<double> fit_eps, fit_excess;
  bool sandwich_ok = true;
  for (double e : eps) {
    MarketParams p = cfg.market;
    p.epsilon = e;
    std::map<Side, QGrid> grids;
    std::vector<Side> sides = priced ? std::vector<Side>{Side::without_claim, Side::with_claim} : cfg.sides;
    for (Side side : sides) {
      QGrid q = solve_qvi(cfg.oracle, p, c, side);
      const SandwichReport rep = sandwich_report(q, Expansion(p, c, side), cfg.sandwich_factor);
      if (rep.fraction < cfg.sandwich_min_fraction) sandwich_ok = false;
      stats.row({format_double(e), to_string(side), cfg.oracle.describe(), std::to_string(rep.nodes),
                 std::to_string(rep.satisfied), format_double(rep.fraction), format_double(rep.worst_excess),
                 format_double(rep.q99), std::to_string(rep.skipped), format_double(q.max_projection_change),
                 std::to_string(q.min_band_nodes_seen), std::to_string(q.exempt_band_points)});
      ctx.say("eps " + format_double(e) + " side " + to_string(side) + ": " + rep.summary());
      if (cfg.oracle_lattice) {
        CsvTable lat = lattice_table(q);
        ctx.save(lat, "oracle_lattice_" + format_double(e) + "_" + to_string(side) + ".csv");
      }
      grids.emplace(side, std::move(q));
    }
    if (priced) {
      const double price = oracle_price(grids.at(Side::with_claim), grids.at(Side::without_claim), cfg.S, cfg.t);
      const PriceEstimate pe = indifference_price(p, c, cfg.S, cfg.t);
      prices.row({format_double(e), format_double(cfg.S), format_double(cfg.t), format_double(price),
                  format_double(pe.v0), format_double(pe.price), format_double(price - pe.v0)});
      fit_eps.push_back(e);
      fit_excess.push_back(price - pe.v0);
    }
  }
  ctx.save(stats, "oracle.csv");
  if (priced) {
    bool positive = fit_eps.size() >= 2;
    for (double d : fit_excess) positive = positive && d > 0.0;
    if (positive) prices.comment("loglog_slope=" + format_double(loglog_slope(fit_eps, fit_excess)));
    ctx.save(prices, "oracle_price.csv");
  }
  if (!sandwich_ok) throw CheckFailed("sandwich fraction below oracle.sandwich_min_fraction");
  return exit_ok;
}

int cmd_verify(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ClaimSpec c = effective_claim(cfg);
  CsvTable tab({"side", "check", "grid", "points", "worst_violation", "tolerance", "S", "y", "t", "passed", "note"});
  bool all = true;
  for (Side side : cfg.sides) {
    const Expansion e(cfg.market, c, side);
    VerifyGrid g = default_verify_grid(e);
    if (cfg.verify_S_min > 0.0) g.S_min = cfg.verify_S_min;
    if (cfg.verify_S_max > 0.0) g.S_max = cfg.verify_S_max;
    if (!(g.S_max > g.S_min)) throw ConfigError("verify.S_max must exceed verify.S_min");
    g.n_S = cfg.verify_n_S;
    g.n_Y = cfg.verify_n_y;
    g.n_t = cfg.verify_n_t;
    const auto reports = verify_all(e, g, cfg.pasting_samples, cfg.seed);
    for (const auto& r : reports) {
      all = all && r.passed;
      tab.row({to_string(side), r.name, r.grid, std::to_string(r.points), format_double(r.worst_violation),
               format_double(r.tolerance), format_double(r.S), format_double(r.y), format_double(r.t),
               r.passed ? "true" : "false", r.note});
    }
    ctx.say("side " + to_string(side) + ":\n" + reports_summary(reports));
  }
  ctx.save(tab, "verify.csv");
  if (!all) throw CheckFailed("verification checks failed");
  return exit_ok;
}

int cmd_figure1(const Context& ctx) {
  MarketParams p;
  p.mu = 0.1;
  p.sigma = std::sqrt(2.0);
  p.r = 0.0;
  p.T = 1.0;
  p.gamma = 1.0;
  p.epsilon = 0.0;
  const double tau = 0.5 * p.sigma * p.sigma * p.T;
  CsvTable tab({"delta_T", "tau", "x", "H2_tilde", "H2_at_S1_t0"});
  for (double dT : {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0}) {
    const H2Field f(p, ClaimSpec::mollified_call(1.0, dT), Side::with_claim);
    tab.row({format_double(dT), format_double(tau), "0", format_double(f.transformed(tau, 0.0)),
             format_double(f.value(1.0, 0.0))});
  }
  ctx.save(tab, "figure1.csv");
  return exit_ok;
}

const std::map<std::string, std::function<int(const Context&)>>& table() {
  static const std::map<std::string, std::function<int(const Context&)>> t = {
      {"price", cmd_price},   {"band", cmd_band},     {"simulate", cmd_simulate},
      {"oracle", cmd_oracle}, {"verify", cmd_verify}, {"figure1", cmd_figure1},
  };
  return t;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> n = {"price", "band", "simulate", "oracle", "verify", "figure1"};
  return n;
}

int run_command(const std::string& command, ScenarioConfig cfg, const RunOptions& opt) {
  auto err = [&](const std::string& kind, const std::string& what) {
    if (opt.log) *opt.log << kind << ": " << what << "\n";
  };
  const auto it = table().find(command);
  if (it == table().end()) {
    err("config error", "unknown command '" + command + "'");
    return exit_config;
  }
  if (opt.seed) cfg.seed = *opt.seed;
  Context ctx{cfg, opt, command};
  try {
    if (command != "figure1") {
      check_config(cfg);
      if (!check_assumptions(ctx, effective_claim(cfg))) return exit_assumption;
    }
    return it->second(ctx);
  } catch (const ConfigError& e) {
    err("config error", e.what());
    return exit_config;
  } catch (const DomainError& e) {
    err("config error", e.what());
    return exit_config;
  } catch (const CheckFailed& e) {
    err("check failed", e.what());
    return exit_check;
  } catch (const NumericError& e) {
    err("numeric failure", std::string(e.what()) + " (estimate " + format_double(e.estimate()) + ", bound " +
                               format_double(e.error_bound()) + ")");
    return exit_numeric;
  } catch (const std::exception& e) {
    err("numeric failure", e.what());
    return exit_numeric;
  }
}

}  // namespace tcindiff::cli
