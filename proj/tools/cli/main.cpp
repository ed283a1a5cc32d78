#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace tcindiff::cli;
  CLI::App app{"Indifference prices under proportional transaction costs"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  RunOptions opt;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--out", opt.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (unsigned decimal)");
  app.add_flag("--deterministic", opt.deterministic, "omit timestamp/elapsed comments from CSV output");
  app.add_option("--set", overrides, "override one config key (key=value), repeatable");

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"price", "indifference price and its components"},
      {"band", "no-trade band over an (S, t) grid"},
      {"simulate", "Monte Carlo of the band strategy and baselines"},
      {"oracle", "finite-difference QVI solve, sandwich check and price"},
      {"verify", "sub/supersolution check suite"},
      {"figure1", "transformed second-order term against the mollification horizon"},
  };
  for (const auto& [name, help] : subs) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : exit_config;
  }
  if (*seed_opt) opt.seed = seed;
  opt.log = &std::cerr;

  ScenarioConfig cfg;
  try {
    cfg = config_path.empty() ? parse_config("") : load_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  }
  return run_command(app.get_subcommands().front()->get_name(), cfg, opt);
}
