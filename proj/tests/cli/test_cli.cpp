// Drives the super_relay binary end to end.

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "super/metrics.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = SUPER_RELAY_BIN;
const std::string kConfigs = SUPER_CONFIG_DIR;

struct Run {
  int code = -1;
  std::string out;
};

// Runs the binary with `args`; stdout is captured, stderr goes to `err_file`.
Run run(const std::string& args, const std::string& env = "SUPER_LOG=warn", const std::string& err_file = "/dev/null") {
  const std::string cmd = env + " " + kBin + " " + args + " 2>" + err_file;
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512];
  while (std::fgets(buf, sizeof(buf), pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("super_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.ini";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("configuration errors exit with status 2") {
  const auto dir = scratch("badcfg");
  const auto unknown = write_config(dir, "[trainer]\nlearning_rat = 0.1\n");
  auto r = run("train --config " + unknown.string() + " --out " + (dir / "o").string(), "SUPER_LOG=error",
               (dir / "err.txt").string());
  CHECK(r.code == 2);
  CHECK(slurp(dir / "err.txt").find("trainer.learning_rat") != std::string::npos);

  const auto bad_value = write_config(dir, "[selection]\nbandwidth_beta = 1.5\n");
  CHECK(run("train --config " + bad_value.string() + " --out " + (dir / "o").string()).code == 2);
  CHECK(run("train --config " + (dir / "missing.ini").string() + " --out " + (dir / "o").string()).code == 2);
  CHECK(run("train --out " + (dir / "o").string()).code == 2);
  CHECK(run("sweep --config " + kConfigs + "/tiny.ini --betas 0.1,2 --strategies quantile --out " +
            (dir / "s").string())
            .code == 2);
  CHECK(run("sweep --config " + kConfigs + "/tiny.ini --betas 0.1 --strategies psychic --out " +
            (dir / "s").string())
            .code == 2);
  CHECK(run("eval --checkpoint " + (dir / "nowhere").string() + " --episodes 2").code == 2);
  CHECK(run("").code == 2);
}

TEST_CASE("train is reproducible, evaluates and plots") {
  const auto dir = scratch("train");
  const std::string cfg = kConfigs + "/tiny.ini";
  const auto a = run("train --config " + cfg + " --out " + (dir / "a").string() + " --seed 1");
  const auto b = run("train --config " + cfg + " --out " + (dir / "b").string() + " --seed 1");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out.find("final_team_return_mean") != std::string::npos);
  CHECK(a.out == b.out);
  const auto csv = slurp(dir / "a" / "seed1.csv");
  CHECK(!csv.empty());
  CHECK(csv == slurp(dir / "b" / "seed1.csv"));
  CHECK_FALSE(fs::exists(dir / "a" / "seed0.csv"));
  CHECK(fs::exists(dir / "a" / "summary.csv"));
  CHECK(fs::exists(dir / "a" / "experiment.ini"));

  const auto table = super::read_metrics_csv((dir / "a" / "seed1.csv").string());
  CHECK(table.columns == super::metrics_columns(2));
  CHECK(table.rows.size() > 5);
  for (double ts : table.values("timestep")) CHECK(static_cast<long>(ts) % 500 == 0);

  const auto ckpt = (dir / "a" / "checkpoint_seed1").string();
  const auto e1 = run("eval --checkpoint " + ckpt + " --episodes 3");
  const auto e2 = run("eval --checkpoint " + ckpt + " --episodes 3");
  REQUIRE(e1.code == 0);
  CHECK(e1.out.find("agent1_mean_return") != std::string::npos);
  CHECK(e1.out.find("team_mean_return") != std::string::npos);
  CHECK(e1.out == e2.out);

  const auto trace = dir / "trace.jsonl";
  REQUIRE(run("eval --checkpoint " + ckpt + " --episodes 1 --trace " + trace.string()).code == 0);
  std::istringstream lines(slurp(trace));
  std::string line;
  std::size_t steps = 0;
  while (std::getline(lines, line)) {
    CHECK(line.front() == '{');
    CHECK(line.find("\"step\":") != std::string::npos);
    CHECK(line.find("\"pursuers\"") != std::string::npos);
    CHECK(line.find("\"rewards\"") != std::string::npos);
    ++steps;
  }
  CHECK(steps >= 1);
  CHECK(steps <= 100);

  const auto svg = dir / "curves.svg";
  CHECK(run("plot --in " + (dir / "a" / "summary.csv").string() + " " + (dir / "b" / "summary.csv").string() +
            " --alpha 0.3 --out " + svg.string())
            .code == 0);
  CHECK(slurp(svg).rfind("<svg", 0) == 0);
  CHECK(run("plot --in " + (dir / "a" / "summary.csv").string() + " " + (dir / "a" / "seed1.csv").string() +
            " --alpha 0.3 --out " + svg.string())
            .code == 2);
  CHECK(run("plot --in " + (dir / "a" / "summary.csv").string() + " --alpha 0 --out " + svg.string()).code == 2);
}

TEST_CASE("sweep endpoints run the no-sharing and share-all cells once") {
  const auto dir = scratch("sweep");
  const auto cfg = write_config(dir,
                                "[experiment]\ntotal_env_steps = 600\nseeds = 0\nreport_interval_steps = 200\n"
                                "[environment]\npreset = mini\n"
                                "[trainer]\nlearning_starts = 100\nbuffer_capacity = 2000\n"
                                "[network]\nhidden_layers = 8\n");
  const auto r = run("sweep --config " + cfg.string() + " --betas 0,1 --strategies quantile,gaussian --out " +
                     (dir / "s").string());
  REQUIRE(r.code == 0);
  std::istringstream sweep(slurp(dir / "s" / "sweep.csv"));
  std::string header, none_row, all_row, extra;
  std::getline(sweep, header);
  std::getline(sweep, none_row);
  std::getline(sweep, all_row);
  CHECK_FALSE(std::getline(sweep, extra));
  CHECK(header == "strategy,beta,mode,seeds,final_team_return_mean,final_team_return_std,realized_bandwidth");
  CHECK(none_row.rfind("none,0,independent,1,", 0) == 0);
  CHECK(none_row.substr(none_row.rfind(',') + 1) == "0");
  CHECK(all_row.rfind("all,1,super,1,", 0) == 0);
  CHECK(all_row.substr(all_row.rfind(',') + 1) == "1");
  CHECK(fs::exists(dir / "s" / "none_beta0" / "seed0.csv"));
  CHECK(fs::exists(dir / "s" / "all_beta1" / "seed0.csv"));
}

TEST_CASE("divergence exits with status 3") {
  const auto dir = scratch("diverge");
  const auto cfg = write_config(dir,
                                "[experiment]\ntotal_env_steps = 4000\nseeds = 0\n"
                                "[environment]\npreset = mini\n"
                                "[trainer]\noptimizer = sgd\nlearning_rate = 1e30\ngrad_clip_norm = 0\n"
                                "learning_starts = 64\n"
                                "[network]\nhidden_layers = 8\n");
  CHECK(run("train --config " + cfg.string() + " --out " + (dir / "o").string()).code == 3);
}

TEST_CASE("SUPER_LOG controls verbosity") {
  const auto dir = scratch("log");
  const auto cfg = write_config(dir,
                                "[experiment]\ntotal_env_steps = 200\nseeds = 0\n"
                                "[environment]\npreset = mini\n[network]\nhidden_layers = 8\n");
  const std::string args = "train --config " + cfg.string() + " --out " + (dir / "o").string();
  REQUIRE(run(args, "SUPER_LOG=info", (dir / "info.txt").string()).code == 0);
  REQUIRE(run(args, "SUPER_LOG=off", (dir / "off.txt").string()).code == 0);
  CHECK(slurp(dir / "info.txt").find("[info]") != std::string::npos);
  CHECK(slurp(dir / "off.txt").empty());
}
