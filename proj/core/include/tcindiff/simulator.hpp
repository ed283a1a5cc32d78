#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcindiff/csv.hpp"
#include "tcindiff/market_model.hpp"

namespace tcindiff {

enum class PolicyKind { band, frictionless_target, no_rebalance };
std::string to_string(PolicyKind k);
PolicyKind parse_policy(const std::string& name);

struct Policy {
  PolicyKind kind = PolicyKind::band;
};

struct PathState {
  double t = 0.0;
  double B = 0.0;
  double y = 0.0;
  double S = 0.0;
  double L_cum = 0.0;  // shares bought
  double M_cum = 0.0;  // shares sold
  double cost_paid = 0.0;
};

struct SimOptions {
  bool antithetic = false;
  unsigned threads = 0;  // 0: hardware concurrency
  int trace_paths = 0;   // record the first k paths
};

struct TraceRow {
  int path = 0;
  double t = 0.0, S = 0.0, y = 0.0, B = 0.0;
  const char* action = "hold";
  double traded = 0.0;  // signed shares
  double cost = 0.0;
};

struct SimResult {
  long n_paths = 0;
  int n_steps = 0;
  double t0 = 0.0;
  double gamma = 1.0;
  double delta = 1.0;  // discount factor at t0
  // Utilities are -exp(-gamma W); stored in log form to survive large wealth.
  double log_neg_mean_utility = 0.0;
  double mean_utility = 0.0;
  double std_error = 0.0;  // of the mean utility
  double rel_std_error = 0.0;  // std_error / |mean utility|
  double mean_wealth = 0.0;
  double mean_cost = 0.0;
  double mean_shares_traded = 0.0;
  double trade_step_fraction = 0.0;  // steps with a rebalance, over all paths
  double degenerate_band_steps = 0.0;
  std::vector<TraceRow> trace;
};

// Walks n_paths paths from start to T. Deterministic in (seed, path index).
SimResult simulate(const MarketParams& p, const ClaimSpec& c, Side side, Policy policy, long n_paths, int n_steps,
                   std::uint64_t seed, const PortfolioPoint& start, const SimOptions& opt = {});

struct CertaintyEquivalent {
  double value = 0.0;
  double std_error = 0.0;
};
// -(delta(T,t)/gamma) ln(-mean utility), delta-method error.
CertaintyEquivalent certainty_equivalent(const SimResult& res, const MarketParams& p, double t);

CsvTable trace_table(const SimResult& res);

// Counter-based stream seed for one path.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path);

}  // namespace tcindiff
