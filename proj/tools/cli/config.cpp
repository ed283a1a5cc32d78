#include "config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "tcindiff/csv.hpp"

namespace tcindiff::cli {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  // the CLI never calls setlocale, so strtod sees the "C" locale
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE) throw ConfigError("expected a number, got '" + v + "'");
  return d;
}

double parse_number(const std::string& v) {
  if (v == "sqrt2" || v == "sqrt(2)") return std::sqrt(2.0);
  return to_double(v);
}

long long parse_int(const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected an unsigned integer, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

int positive_int(const std::string& v) {
  const long long x = parse_int(v);
  if (x < 1 || x > 1'000'000'000) throw ConfigError("expected a positive integer, got '" + v + "'");
  return static_cast<int>(x);
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number(item));
  }
  return out;
}

std::string num(double x) { return format_double(x); }

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

ClaimKind parse_kind(const std::string& v) {
  if (v == "none") return ClaimKind::none;
  if (v == "mollified_call" || v == "call") return ClaimKind::mollified_call;
  if (v == "mollified_put" || v == "put") return ClaimKind::mollified_put;
  if (v == "linear") return ClaimKind::linear;
  throw ConfigError("claim.kind must be none, mollified_call, mollified_put or linear (custom payoffs need the API)");
}

std::vector<Side> parse_sides(const std::string& v) {
  if (v == "1") return {Side::without_claim};
  if (v == "w") return {Side::with_claim};
  if (v == "both") return {Side::without_claim, Side::with_claim};
  throw ConfigError("side must be 1, w or both");
}

std::string sides_str(const std::vector<Side>& s) {
  if (s.size() == 2) return "both";
  return s.empty() ? "" : to_string(s.front());
}

struct Key {
  const char* name;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

const std::vector<Key>& keys() {
  using C = ScenarioConfig;
  static const std::vector<Key> k = {
      {"market.mu", [](C& c, const std::string& v) { c.market.mu = parse_number(v); },
       [](const C& c) { return num(c.market.mu); }},
      {"market.sigma", [](C& c, const std::string& v) { c.market.sigma = parse_number(v); },
       [](const C& c) { return num(c.market.sigma); }},
      {"market.r", [](C& c, const std::string& v) { c.market.r = parse_number(v); },
       [](const C& c) { return num(c.market.r); }},
      {"market.T", [](C& c, const std::string& v) { c.market.T = parse_number(v); },
       [](const C& c) { return num(c.market.T); }},
      {"market.gamma", [](C& c, const std::string& v) { c.market.gamma = parse_number(v); },
       [](const C& c) { return num(c.market.gamma); }},
      {"market.epsilon", [](C& c, const std::string& v) { c.market.epsilon = parse_number(v); },
       [](const C& c) { return num(c.market.epsilon); }},
      {"claim.kind", [](C& c, const std::string& v) { c.claim.kind = parse_kind(v); },
       [](const C& c) { return to_string(c.claim.kind); }},
      {"claim.K", [](C& c, const std::string& v) { c.claim.K = parse_number(v); },
       [](const C& c) { return num(c.claim.K); }},
      {"claim.delta_T", [](C& c, const std::string& v) { c.claim.delta_T = parse_number(v); },
       [](const C& c) { return num(c.claim.delta_T); }},
      {"claim.coeff", [](C& c, const std::string& v) { c.claim.coeff = parse_number(v); },
       [](const C& c) { return num(c.claim.coeff); }},
      {"side", [](C& c, const std::string& v) { c.sides = parse_sides(v); },
       [](const C& c) { return sides_str(c.sides); }},
      {"point.S", [](C& c, const std::string& v) { c.S = parse_number(v); }, [](const C& c) { return num(c.S); }},
      {"point.t", [](C& c, const std::string& v) { c.t = parse_number(v); }, [](const C& c) { return num(c.t); }},
      {"point.B", [](C& c, const std::string& v) { c.B = parse_number(v); }, [](const C& c) { return num(c.B); }},
      {"point.y",
       [](C& c, const std::string& v) {
         if (v == "target") {
           c.y_at_target = true;
         } else {
           c.y_at_target = false;
           c.y = parse_number(v);
         }
       },
       [](const C& c) { return c.y_at_target ? std::string("target") : num(c.y); }},
      {"band.S_min", [](C& c, const std::string& v) { c.band_S_min = parse_number(v); },
       [](const C& c) { return num(c.band_S_min); }},
      {"band.S_max", [](C& c, const std::string& v) { c.band_S_max = parse_number(v); },
       [](const C& c) { return num(c.band_S_max); }},
      {"band.n_S", [](C& c, const std::string& v) { c.band_n_S = positive_int(v); },
       [](const C& c) { return std::to_string(c.band_n_S); }},
      {"band.n_t", [](C& c, const std::string& v) { c.band_n_t = positive_int(v); },
       [](const C& c) { return std::to_string(c.band_n_t); }},
      {"simulate.policy", [](C& c, const std::string& v) { c.policy = parse_policy(v); },
       [](const C& c) { return to_string(c.policy); }},
      {"simulate.paths", [](C& c, const std::string& v) { c.paths = positive_int(v); },
       [](const C& c) { return std::to_string(c.paths); }},
      {"simulate.steps", [](C& c, const std::string& v) { c.steps = positive_int(v); },
       [](const C& c) { return std::to_string(c.steps); }},
      {"simulate.antithetic", [](C& c, const std::string& v) { c.antithetic = parse_bool(v); },
       [](const C& c) { return std::string(c.antithetic ? "true" : "false"); }},
      // thread count never changes results, so it stays out of the hash
      {"simulate.threads", [](C& c, const std::string& v) { c.threads = static_cast<unsigned>(parse_int(v)); },
       nullptr},
      {"simulate.trace_paths", [](C& c, const std::string& v) { c.trace_paths = static_cast<int>(parse_int(v)); },
       [](const C& c) { return std::to_string(c.trace_paths); }},
      {"simulate.seed", [](C& c, const std::string& v) { c.seed = parse_u64(v); },
       [](const C& c) { return std::to_string(c.seed); }},
      {"oracle.n_S", [](C& c, const std::string& v) { c.oracle.n_S = positive_int(v); },
       [](const C& c) { return std::to_string(c.oracle.n_S); }},
      {"oracle.n_y", [](C& c, const std::string& v) { c.oracle.n_y = positive_int(v); },
       [](const C& c) { return std::to_string(c.oracle.n_y); }},
      {"oracle.n_t", [](C& c, const std::string& v) { c.oracle.n_t = positive_int(v); },
       [](const C& c) { return std::to_string(c.oracle.n_t); }},
      {"oracle.S_min", [](C& c, const std::string& v) { c.oracle.S_min = parse_number(v); },
       [](const C& c) { return num(c.oracle.S_min); }},
      {"oracle.S_max", [](C& c, const std::string& v) { c.oracle.S_max = parse_number(v); },
       [](const C& c) { return num(c.oracle.S_max); }},
      {"oracle.padding_decades", [](C& c, const std::string& v) { c.oracle.padding_decades = parse_number(v); },
       [](const C& c) { return num(c.oracle.padding_decades); }},
      {"oracle.retained_slices", [](C& c, const std::string& v) { c.oracle.retained_slices = positive_int(v); },
       [](const C& c) { return std::to_string(c.oracle.retained_slices); }},
      {"oracle.mode",
       [](C& c, const std::string& v) {
         if (v == "projection") c.oracle.mode = ConstraintMode::projection;
         else if (v == "penalty") c.oracle.mode = ConstraintMode::penalty;
         else throw ConfigError("oracle.mode must be projection or penalty");
       },
       [](const C& c) { return to_string(c.oracle.mode); }},
      {"oracle.penalty", [](C& c, const std::string& v) { c.oracle.penalty = parse_number(v); },
       [](const C& c) { return num(c.oracle.penalty); }},
      {"oracle.boundary",
       [](C& c, const std::string& v) {
         if (v == "zero_curvature") c.oracle.boundary = BoundaryMode::zero_curvature;
         else if (v == "zero_slope") c.oracle.boundary = BoundaryMode::zero_slope;
         else throw ConfigError("oracle.boundary must be zero_curvature or zero_slope");
       },
       [](const C& c) { return to_string(c.oracle.boundary); }},
      {"oracle.error_estimate", [](C& c, const std::string& v) { c.oracle.error_estimate = parse_bool(v); },
       [](const C& c) { return std::string(c.oracle.error_estimate ? "true" : "false"); }},
      {"oracle.epsilons", [](C& c, const std::string& v) { c.oracle_epsilons = parse_list(v); },
       [](const C& c) { return list(c.oracle_epsilons); }},
      {"oracle.lattice", [](C& c, const std::string& v) { c.oracle_lattice = parse_bool(v); },
       [](const C& c) { return std::string(c.oracle_lattice ? "true" : "false"); }},
      {"oracle.sandwich_min_fraction", [](C& c, const std::string& v) { c.sandwich_min_fraction = parse_number(v); },
       [](const C& c) { return num(c.sandwich_min_fraction); }},
      {"oracle.sandwich_factor", [](C& c, const std::string& v) { c.sandwich_factor = parse_number(v); },
       [](const C& c) { return num(c.sandwich_factor); }},
      {"verify.n_S", [](C& c, const std::string& v) { c.verify_n_S = positive_int(v); },
       [](const C& c) { return std::to_string(c.verify_n_S); }},
      {"verify.n_y", [](C& c, const std::string& v) { c.verify_n_y = positive_int(v); },
       [](const C& c) { return std::to_string(c.verify_n_y); }},
      {"verify.n_t", [](C& c, const std::string& v) { c.verify_n_t = positive_int(v); },
       [](const C& c) { return std::to_string(c.verify_n_t); }},
      {"verify.S_min", [](C& c, const std::string& v) { c.verify_S_min = parse_number(v); },
       [](const C& c) { return num(c.verify_S_min); }},
      {"verify.S_max", [](C& c, const std::string& v) { c.verify_S_max = parse_number(v); },
       [](const C& c) { return num(c.verify_S_max); }},
      {"verify.pasting_samples", [](C& c, const std::string& v) { c.pasting_samples = positive_int(v); },
       [](const C& c) { return std::to_string(c.pasting_samples); }},
      {"validation.strict", [](C& c, const std::string& v) { c.strict = parse_bool(v); },
       [](const C& c) { return std::string(c.strict ? "true" : "false"); }},
  };
  return k;
}

void set_key(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : keys()) {
    if (key == k.name) {
      try {
        k.set(cfg, value);
      } catch (const ConfigError& e) {
        throw ConfigError(key + ": " + e.what());
      } catch (const std::exception& e) {
        throw ConfigError(key + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown key '" + key + "'");
}

}  // namespace

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.emplace_back(k.name);
  return out;
}

std::string ScenarioConfig::canonical() const {
  std::vector<std::string> lines;
  for (const auto& k : keys())
    if (k.get) lines.push_back(std::string(k.name) + "=" + k.get(*this));
  std::sort(lines.begin(), lines.end());
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::uint64_t ScenarioConfig::hash() const { return fnv1a(canonical()); }

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
  ScenarioConfig cfg;
  cfg.claim = ClaimSpec::none();
  cfg.sides = {Side::without_claim};
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_key(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_override(ScenarioConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

}  // namespace tcindiff::cli
