// Command-line front end.
//
//   super_relay train --config <file> --out <dir> [--seed <n>]
//   super_relay sweep --config <file> --betas <list> --strategies <list> --out <dir>
//   super_relay plot  --in <csv...> --alpha <f> --out <file>
//   super_relay eval  --checkpoint <dir> --episodes <n> [--seed <n>] [--trace <file>]
//
// Exit codes: 0 success, 2 configuration or input error, 3 training diverged.
// SUPER_LOG sets the log level (trace, debug, info, warn, error, off).

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "super/errors.hpp"
#include "super/experiment.hpp"
#include "super/plot.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

// Logs go to stderr; stdout carries only results.
void configure_logging() {
  spdlog::set_default_logger(spdlog::stderr_color_mt("super_relay"));
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
  const char* level = std::getenv("SUPER_LOG");
  if (!level || !*level) {
    spdlog::set_level(spdlog::level::info);
    return;
  }
  const auto parsed = spdlog::level::from_str(level);
  // from_str maps unknown names to off; only accept "off" when asked for.
  if (parsed == spdlog::level::off && std::string(level) != "off") {
    spdlog::set_level(spdlog::level::info);
    spdlog::warn("SUPER_LOG: unknown level '{}', using info", level);
    return;
  }
  spdlog::set_level(parsed);
}

std::vector<super::SelectionStrategy> parse_strategies(const std::string& text) {
  std::vector<super::SelectionStrategy> out;
  std::string item;
  for (std::size_t start = 0; start <= text.size();) {
    const auto end = std::min(text.find(',', start), text.size());
    item = text.substr(start, end - start);
    if (!item.empty()) out.push_back(super::parse_selection_strategy(item));
    start = end + 1;
  }
  if (out.empty()) throw super::ConfigError("--strategies: at least one strategy required");
  return out;
}

const super::ProgressFn kProgress = [](const std::string& msg) { spdlog::info("{}", msg); };

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Selective experience relay for multi-agent DQN"};
  app.require_subcommand(1);

  std::string config_path, out_dir, betas_text, strategies_text, checkpoint_dir, plot_out;
  std::vector<std::string> plot_inputs;
  std::uint64_t seed = 0;
  std::uint64_t eval_seed = 12345;
  std::size_t episodes = 10;
  std::string trace_path;
  double alpha = 0.3;

  auto* train = app.add_subcommand("train", "Train every configured seed and write metrics");
  train->add_option("--config", config_path, "experiment INI file")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  auto* seed_opt = train->add_option("--seed", seed, "run only this seed");

  auto* sweep = app.add_subcommand("sweep", "Grid over bandwidths and selection strategies");
  sweep->add_option("--config", config_path, "base experiment INI file")->required();
  sweep->add_option("--betas", betas_text, "comma-separated bandwidths in [0, 1]")->required();
  sweep->add_option("--strategies", strategies_text, "comma-separated strategies")->required();
  sweep->add_option("--out", out_dir, "output directory")->required();

  auto* plot = app.add_subcommand("plot", "Smoothed learning curves as SVG");
  plot->add_option("--in", plot_inputs, "metrics or summary CSV files")->required()->expected(1, -1);
  plot->add_option("--alpha", alpha, "exponential smoothing factor in (0, 1]");
  plot->add_option("--out", plot_out, "output SVG file")->required();

  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval->add_option("--checkpoint", checkpoint_dir, "checkpoint directory")->required();
  eval->add_option("--episodes", episodes, "number of episodes")->required();
  eval->add_option("--seed", eval_seed, "environment seed");
  eval->add_option("--trace", trace_path, "write a JSON line per environment step to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train) {
      auto config = super::load_experiment_config(config_path);
      if (*seed_opt) config.seeds = {seed};
      spdlog::info("training {} seed(s), mode {}, strategy {}, {} env steps", config.seeds.size(),
                   super::to_string(config.mode), super::to_string(config.trainer.selection.strategy),
                   config.total_env_steps);
      const auto result = super::run_experiment(config, out_dir, kProgress);
      for (const auto& s : result.seeds) {
        spdlog::info("seed {}: final team return {:.4f}, realized bandwidth {:.4f}", s.seed, s.final_team_return,
                     s.realized_bandwidth);
      }
      std::cout << "final_team_return_mean " << result.final_mean << "\nfinal_team_return_std " << result.final_std
                << '\n';
    } else if (*sweep) {
      const auto config = super::load_experiment_config(config_path);
      std::vector<double> betas;
      try {
        betas = super::parse_double_list(betas_text);
      } catch (const super::ConfigError& e) {
        throw super::ConfigError(std::string("--betas: ") + e.what());
      }
      const auto cells = super::run_sweep(config, betas, parse_strategies(strategies_text), out_dir, kProgress);
      for (const auto& c : cells) {
        std::cout << c.strategy << " beta " << c.beta << " final " << c.result.final_mean << " +- "
                  << c.result.final_std << " bandwidth " << c.realized_bandwidth << '\n';
      }
    } else if (*plot) {
      super::plot_learning_curves(plot_inputs, alpha, plot_out);
      spdlog::info("wrote {}", plot_out);
    } else if (*eval) {
      std::ofstream trace;
      if (!trace_path.empty()) {
        trace.open(trace_path);
        if (!trace) throw super::ConfigError("--trace: cannot open " + trace_path);
      }
      const auto ev = super::evaluate_checkpoint(checkpoint_dir, episodes, eval_seed,
                                                 trace_path.empty() ? nullptr : &trace);
      for (std::size_t i = 0; i < ev.result.agent_mean_returns.size(); ++i) {
        std::cout << "agent" << i << "_mean_return " << ev.result.agent_mean_returns[i] << '\n';
      }
      std::cout << "team_mean_return " << ev.result.team_mean_return << '\n';
    }
  } catch (const super::ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const super::FormatError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const super::TrainingDivergence& e) {
    spdlog::error("training diverged at step {}: {}", e.step(), e.what());
    return kExitDiverged;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
