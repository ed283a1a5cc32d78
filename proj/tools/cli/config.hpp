#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcindiff/hjb_oracle.hpp"
#include "tcindiff/market_model.hpp"
#include "tcindiff/simulator.hpp"
#include "tcindiff/verifier.hpp"

namespace tcindiff::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  MarketParams market;
  ClaimSpec claim;
  std::vector<Side> sides;  // from side = 1 | w | both

  double S = 1.0, t = 0.0, B = 0.0;
  bool y_at_target = true;  // start.y = target
  double y = 0.0;

  // band
  double band_S_min = 0.5, band_S_max = 2.0;
  int band_n_S = 7, band_n_t = 3;

  // simulate
  PolicyKind policy = PolicyKind::band;
  long paths = 10000;
  int steps = 250;
  bool antithetic = false;
  unsigned threads = 0;
  int trace_paths = 0;

  // oracle
  GridSpec oracle;
  std::vector<double> oracle_epsilons;  // empty: market.epsilon only
  bool oracle_lattice = false;
  double sandwich_min_fraction = 0.99;
  double sandwich_factor = 3.0;

  // verify
  int verify_n_S = 32, verify_n_y = 32, verify_n_t = 9;
  double verify_S_min = 0.0, verify_S_max = 0.0;  // 0: one decade around the strike
  int pasting_samples = 1000;

  bool strict = true;  // failed assumption check aborts with exit 3
  std::uint64_t seed = 42;

  // Canonical key=value dump after defaults and overrides.
  std::string canonical() const;
  std::uint64_t hash() const;
};

// Flat "key = value" lines, '#' comments, dotted keys. Unknown keys are errors.
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ScenarioConfig load_config(const std::string& path);
// "key=value" overrides applied on top of a parsed config.
void apply_override(ScenarioConfig& cfg, const std::string& assignment);
std::vector<std::string> known_keys();

}  // namespace tcindiff::cli
