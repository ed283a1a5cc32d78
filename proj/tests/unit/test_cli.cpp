#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"

using namespace tcindiff;
using namespace tcindiff::cli;
namespace fs = std::filesystem;

namespace {

struct Csv {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("no column " + name);
  }
  double num(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(col(name))); }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    else if (ch == ',' && !quoted) {
      out.push_back(cell);
      cell.clear();
    } else cell += ch;
  }
  out.push_back(cell);
  return out;
}

Csv read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("missing " + p.string());
  Csv c;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind('#', 0) == 0) c.comments.push_back(line);
    else if (c.header.empty()) c.header = split(line);
    else if (!line.empty()) c.rows.push_back(split(line));
  }
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("tcindiff_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    opt.out_dir = dir.string();
    opt.deterministic = true;
  }
  void TearDown() override { fs::remove_all(dir); }

  int run(const std::string& cmd, const std::string& text) { return run_command(cmd, parse_config(text), opt); }

  fs::path dir;
  RunOptions opt;
};

const char* kBase = "market.epsilon = 1e-3\nside = 1\n";

}  // namespace

TEST(Config, ParsesKeysCommentsAndSqrt2) {
  const auto c = parse_config(
      "# scenario\nmarket.mu = 0.2\nmarket.sigma = sqrt2   # inline\nclaim.kind = mollified_call\n"
      "claim.K = 1.5\nside = both\noracle.epsilons = 0.004, 0.008\npoint.y = target\n");
  EXPECT_EQ(c.market.mu, 0.2);
  EXPECT_EQ(c.market.sigma, std::sqrt(2.0));
  EXPECT_EQ(c.claim.kind, ClaimKind::mollified_call);
  EXPECT_EQ(c.claim.K, 1.5);
  EXPECT_EQ(c.sides.size(), 2u);
  EXPECT_EQ(c.oracle_epsilons, (std::vector<double>{0.004, 0.008}));
  EXPECT_TRUE(c.y_at_target);
}

TEST(Config, UnknownKeyReportsLine) {
  try {
    parse_config("market.mu = 0.1\n\nmarket.muu = 0.2\n", "scenario.conf");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("scenario.conf:3"), std::string::npos) << w;
    EXPECT_NE(w.find("market.muu"), std::string::npos) << w;
  }
  EXPECT_THROW(parse_config("market.mu 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config("market.mu = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("oracle.n_S = -4\n"), ConfigError);
  EXPECT_THROW(parse_config("side = x\n"), ConfigError);
}

TEST(Config, HashTracksCanonicalContent) {
  const auto a = parse_config("market.mu = 0.1\n");
  const auto b = parse_config("# different text, same content\nmarket.mu=0.10\n");
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(a.hash(), b.hash());
  auto c = a;
  apply_override(c, "market.mu=0.11");
  EXPECT_NE(a.hash(), c.hash());
  auto d = a;
  apply_override(d, "simulate.threads=3");
  EXPECT_EQ(a.hash(), d.hash());
  EXPECT_THROW(apply_override(d, "market.mu"), ConfigError);
  const auto keys = known_keys();
  EXPECT_NE(std::find(keys.begin(), keys.end(), "oracle.epsilons"), keys.end());
}

TEST_F(CliTest, Figure1Decreasing) {
  ASSERT_EQ(run("figure1", ""), exit_ok);
  const auto csv = read_csv(dir / "figure1.csv");
  ASSERT_EQ(csv.rows.size(), 7u);
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const double v = csv.num(i, "H2_tilde");
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
    if (i > 0) {
      EXPECT_GT(csv.num(i, "delta_T"), csv.num(i - 1, "delta_T"));
      EXPECT_LT(v, csv.num(i - 1, "H2_tilde"));
    }
  }
  EXPECT_EQ(csv.comments.front().rfind("# tcindiff figure1 config_hash=", 0), 0u);
}

TEST_F(CliTest, BandBaseCase) {
  ASSERT_EQ(run("band", std::string(kBase) + "band.S_min = 1\nband.S_max = 1\nband.n_S = 1\nband.n_t = 1\n"), exit_ok);
  const auto csv = read_csv(dir / "band.csv");
  ASSERT_EQ(csv.rows.size(), 1u);
  EXPECT_NEAR(csv.num(0, "y_minus"), 0.0344638, 5e-8);
  EXPECT_NEAR(csv.num(0, "y_plus"), 0.0655362, 5e-8);
}

TEST_F(CliTest, PriceWithoutFrictionIsClaimValue) {
  ASSERT_EQ(run("price", "market.epsilon = 0\nclaim.kind = linear\nclaim.coeff = 0.5\nside = w\n"), exit_ok);
  const auto csv = read_csv(dir / "price.csv");
  EXPECT_EQ(csv.rows.at(0).at(csv.col("price")), csv.rows.at(0).at(csv.col("v0")));
  EXPECT_EQ(csv.num(0, "price"), 0.5);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run("price", "market.epsilon = 1.2\n"), exit_config);
  EXPECT_EQ(run("band", std::string(kBase) + "band.S_min = 2\nband.S_max = 1\n"), exit_config);
  // The mollified call fails the cash-gamma assumption under the base market.
  EXPECT_EQ(run("price", "market.epsilon = 1e-3\nclaim.kind = mollified_call\nside = both\n"), exit_assumption);
  EXPECT_EQ(run("price", "market.epsilon = 1e-3\nclaim.kind = mollified_call\nside = both\nvalidation.strict = false\n"),
            exit_ok);
  // Band unresolved on a 16-node y grid.
  EXPECT_EQ(run("oracle", std::string(kBase) + "market.epsilon = 1e-2\noracle.n_S = 32\noracle.n_y = 16\noracle.n_t = 16\n"),
            exit_numeric);
  // A sandwich threshold above one can never be met.
  EXPECT_EQ(run("oracle", std::string(kBase) +
                              "market.epsilon = 1e-2\noracle.n_S = 32\noracle.n_y = 64\noracle.n_t = 32\n"
                              "oracle.error_estimate = false\noracle.sandwich_min_fraction = 1.5\n"),
            exit_check);
  EXPECT_EQ(run_command("nonsense", parse_config(""), opt), exit_config);
}

TEST_F(CliTest, VerifyPassesBaseCase) {
  ASSERT_EQ(run("verify", std::string(kBase) + "verify.n_S = 8\nverify.n_y = 8\nverify.n_t = 3\nverify.pasting_samples = 50\n"),
            exit_ok);
  const auto csv = read_csv(dir / "verify.csv");
  EXPECT_EQ(csv.rows.size(), 14u);
  for (std::size_t i = 0; i < csv.rows.size(); ++i) EXPECT_EQ(csv.rows[i][csv.col("passed")], "true");
}

TEST_F(CliTest, SimulateDeterministicOutput) {
  const std::string cfg = std::string(kBase) + "market.epsilon = 1e-2\nsimulate.paths = 200\nsimulate.steps = 20\n";
  ASSERT_EQ(run("simulate", cfg), exit_ok);
  const std::string first = slurp(dir / "simulate.csv");
  ASSERT_EQ(run("simulate", cfg + "simulate.threads = 2\n"), exit_ok);
  EXPECT_EQ(first, slurp(dir / "simulate.csv"));
  EXPECT_EQ(first.find("generated"), std::string::npos);
  opt.deterministic = false;
  ASSERT_EQ(run("simulate", cfg), exit_ok);
  EXPECT_NE(slurp(dir / "simulate.csv").find("generated"), std::string::npos);
  opt.seed = 43;
  opt.deterministic = true;
  ASSERT_EQ(run("simulate", cfg), exit_ok);
  EXPECT_NE(first, slurp(dir / "simulate.csv"));
  const auto csv = read_csv(dir / "simulate.csv");
  EXPECT_EQ(csv.rows.at(0).at(csv.col("seed")), "43");
}

TEST_F(CliTest, SimulateWritesTrace) {
  ASSERT_EQ(run("simulate", std::string(kBase) + "simulate.paths = 10\nsimulate.steps = 5\nsimulate.trace_paths = 2\n"),
            exit_ok);
  EXPECT_EQ(read_csv(dir / "simulate_trace_1.csv").rows.size(), 12u);
}
