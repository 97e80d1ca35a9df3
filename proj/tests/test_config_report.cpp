#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "fedrep/report.hpp"

using namespace fedrep;
namespace fs = std::filesystem;

namespace {

const char* kSmall =
    "sim.clients = 5\n"
    "sim.rounds = 3\n"
    "train.hidden = none\n"
    "train.local_epochs = 1\n"
    "data.features = 8\n"
    "data.samples_per_class = 40\n"
    "attack.fraction = 0.2\n";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fedrep_config_report_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FEDREP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const auto cfg = parse_config("");
  EXPECT_EQ(cfg.sim.clients, 10u);
  EXPECT_EQ(cfg.sim.rounds, 100u);
  EXPECT_EQ(cfg.aggregator_name, "reputation");
  EXPECT_EQ(cfg.sim.hidden, (std::vector<std::size_t>{64, 32}));
  EXPECT_DOUBLE_EQ(cfg.reputation.positive_weight, 0.3);
  EXPECT_DOUBLE_EQ(cfg.reputation.negative_weight, 0.7);
  EXPECT_EQ(cfg.reputation.window, 10u);
  EXPECT_DOUBLE_EQ(cfg.robust.confidence_threshold, 0.1);
  EXPECT_EQ(cfg.values.size(), config_defaults().size() + 1);
}

TEST(Config, KappaDerivesEta) {
  const auto cfg = parse_config("reputation.kappa = 0.4  # reward\n");
  EXPECT_DOUBLE_EQ(cfg.reputation.negative_weight, 0.6);
  EXPECT_DOUBLE_EQ(cfg.theory.eta, 0.6);
}

TEST(Config, ErrorsNameTheKeyAndLine) {
  const auto unknown = error_of("sim.clients = 4\nsim.colour = red\n");
  EXPECT_NE(unknown.find("sim.colour"), std::string::npos);
  EXPECT_NE(unknown.find("line 2"), std::string::npos);
  const auto bad = error_of("\n\nsim.rounds = many\n");
  EXPECT_NE(bad.find("sim.rounds"), std::string::npos);
  EXPECT_NE(bad.find("line 3"), std::string::npos);
  EXPECT_FALSE(error_of("sim.aggregator = trimmed_mean\nsim.trim_beta = 5\n").empty());
  EXPECT_FALSE(error_of("sim.seed = 1\nsim.seed = 2\n").empty());
  EXPECT_FALSE(error_of("just words\n").empty());
  EXPECT_FALSE(error_of("attack.schedule = weekly\n").empty());
  EXPECT_FALSE(error_of("attack.fraction = 0.7\n").empty());
}

TEST(Config, OverridesWinOverText) {
  const auto cfg = parse_config("sim.seed = 3\n", {{"sim.seed", "9"}, {"sim.aggregator", "median"}});
  EXPECT_EQ(cfg.sim.seed, 9u);
  EXPECT_TRUE(std::holds_alternative<MedianRule>(cfg.sim.aggregator));
  EXPECT_THROW(parse_config("", {{"nope.key", "1"}}), Error);
}

TEST(Report, WritesOneRowPerRoundAndRoundTrips) {
  const auto cfg = parse_config(kSmall);
  const auto dir = scratch("roundtrip");
  const auto series = run_and_report(cfg, dir, false);
  ASSERT_EQ(series.size(), 3u);

  std::ifstream in(dir / "rounds.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 4u);

  const auto back = read_rounds_csv(dir / "rounds.csv");
  ASSERT_EQ(back.size(), series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    EXPECT_EQ(back[t].round, series[t].round);
    EXPECT_NEAR(back[t].accuracy, series[t].accuracy, 5e-7);
    EXPECT_NEAR(back[t].loss, series[t].loss, 5e-7);
    EXPECT_EQ(back[t].attack_active, series[t].attack_active);
    ASSERT_EQ(back[t].clients.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_NEAR(back[t].clients[i].windowed, series[t].clients[i].windowed, 5e-7);
      EXPECT_NEAR(back[t].clients[i].weight, series[t].clients[i].weight, 5e-7);
    }
  }

  const auto sidecar = nlohmann::json::parse(slurp(dir / "config.json"));
  EXPECT_EQ(sidecar["config"]["sim"]["clients"], 5);
  EXPECT_EQ(sidecar["attackers"].size(), 1u);
  EXPECT_EQ(slurp(dir / "reputation.csv").substr(0, 15), "round,client_0,");
}

TEST(Report, RefusesExistingDirectoryWithoutForce) {
  const auto cfg = parse_config(kSmall);
  const auto dir = scratch("existing");
  run_and_report(cfg, dir, false);
  EXPECT_THROW(run_and_report(cfg, dir, false), Error);
  EXPECT_NO_THROW(run_and_report(cfg, dir, true));
}

TEST(Report, EqualRunsAreByteIdentical) {
  const auto cfg = parse_config(kSmall);
  const auto a = scratch("same_a"), b = scratch("same_b");
  run_and_report(cfg, a, false);
  run_and_report(cfg, b, false);
  EXPECT_EQ(slurp(a / "rounds.csv"), slurp(b / "rounds.csv"));
  EXPECT_EQ(slurp(a / "reputation.csv"), slurp(b / "reputation.csv"));
  EXPECT_EQ(slurp(a / "config.json"), slurp(b / "config.json"));
}

TEST(Report, BaselineRunsWriteHeaderOnlyReputation) {
  const auto cfg = parse_config(std::string(kSmall) + "sim.aggregator = fedavg\n");
  const auto dir = scratch("baseline");
  run_and_report(cfg, dir, false);
  EXPECT_EQ(slurp(dir / "reputation.csv"), "round,client_0,client_1,client_2,client_3,client_4\n");
  EXPECT_EQ(slurp(dir / "rounds.csv").substr(0, slurp(dir / "rounds.csv").find('\n')),
            "round,acc,asr,loss,attack_active");
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "small.cfg") << kSmall;
    std::ofstream(dir / "broken.cfg") << "sim.clients = lots\n";
  }
  const auto cfg = (dir / "small.cfg").string();
  EXPECT_EQ(run_cli("simulate " + cfg + " --quiet --out " + (dir / "run").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "rounds.csv"));
  EXPECT_NE(run_cli("simulate " + cfg + " --quiet --out " + (dir / "run").string()), 0);
  EXPECT_EQ(run_cli("simulate " + cfg + " --quiet --force --out " + (dir / "run").string()), 0);
  EXPECT_NE(run_cli("simulate " + (dir / "broken.cfg").string() + " --out " + (dir / "x").string()), 0);
  EXPECT_EQ(run_cli("bound " + cfg), 0);
  EXPECT_EQ(run_cli("gen-data " + cfg + " --out " + (dir / "data.csv").string()), 0);
  EXPECT_EQ(load_csv(dir / "data.csv").size(), 80u);
  EXPECT_EQ(run_cli("sweep " + cfg + " --param sim.seed --values 1,2 --out " + (dir / "sweep").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "sweep" / "sim.seed=2" / "rounds.csv"));
  EXPECT_NE(run_cli("no-such-command"), 0);
}
