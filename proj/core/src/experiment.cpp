#include "super/experiment.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "super/errors.hpp"
#include "super/metrics.hpp"
#include "super/pursuit.hpp"

namespace super {
namespace fs = std::filesystem;

namespace {

std::ofstream open_text(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void write_config_file(const fs::path& p, const ExperimentConfig& config) {
  auto os = open_text(p);
  write_experiment_config(os, config);
}

std::pair<double, double> mean_and_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const fs::path& csv_path,
                    const fs::path& checkpoint_dir, const ProgressFn& progress) {
  TrainerConfig tc = config.trainer;
  tc.seed = seed;
  Trainer trainer(std::make_unique<PursuitGame>(config.environment, seed), tc, config.mode,
                  TrainerOptions{config.parallel_learning});
  const std::size_t n = trainer.agent_count();

  auto csv = open_text(csv_path);
  write_metrics_header(csv, n);
  MetricsRecorder recorder(n, config.report_interval_steps);
  std::uint64_t next_progress = config.report_interval_steps;
  double last_team = std::nan("");

  while (trainer.env_steps() < config.total_env_steps) {
    IterationReport report;
    try {
      report = trainer.train_iteration();
    } catch (const TrainingDivergence&) {
      csv.flush();
      throw;
    }
    for (const auto& row : recorder.observe(report, trainer.channel())) {
      write_metrics_row(csv, row);
      last_team = row.team_return;
    }
    if (progress && trainer.env_steps() >= next_progress) {
      next_progress += config.report_interval_steps;
      progress("seed " + std::to_string(seed) + " step " + std::to_string(trainer.env_steps()) +
               " epsilon " + fmt(trainer.epsilon()) + " last team return " + fmt(last_team));
    }
  }
  csv.close();

  SeedResult result;
  result.seed = seed;
  result.csv = csv_path;
  result.final_team_return = final_team_return(read_metrics_csv(csv_path.string()), config.total_env_steps);
  double bw = 0.0;
  for (std::size_t i = 0; i < n; ++i) bw += trainer.channel().counters(static_cast<AgentId>(i)).actual_bandwidth();
  result.realized_bandwidth = bw / static_cast<double>(n);

  if (config.eval_episodes > 0 && progress) {
    PursuitGame eval_env(config.environment, seed);
    const auto ev = trainer.evaluate(eval_env, config.eval_episodes, seed + 1);
    progress("seed " + std::to_string(seed) + " greedy evaluation team return " + fmt(ev.team_mean_return));
  }
  if (!checkpoint_dir.empty()) {
    trainer.save_checkpoint(checkpoint_dir);
    ExperimentConfig single = config;
    single.seeds = {seed};
    write_config_file(checkpoint_dir / "experiment.ini", single);
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out, const ProgressFn& progress) {
  config.validate();
  fs::create_directories(out);
  write_config_file(out / "experiment.ini", config);

  ExperimentResult result;
  std::vector<IntervalSeries> curves;
  for (auto seed : config.seeds) {
    const fs::path csv = out / ("seed" + std::to_string(seed) + ".csv");
    const fs::path ckpt = config.checkpoint ? out / ("checkpoint_seed" + std::to_string(seed)) : fs::path{};
    result.seeds.push_back(run_seed(config, seed, csv, ckpt, progress));
    curves.push_back(interval_means(read_metrics_csv(csv.string()), "team_return"));
  }

  auto os = open_text(out / "summary.csv");
  write_summary_csv(os, summarize(curves));

  std::vector<double> finals;
  for (const auto& s : result.seeds) finals.push_back(s.final_team_return);
  std::tie(result.final_mean, result.final_std) = mean_and_std(finals);
  return result;
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const std::vector<double>& betas,
                                 const std::vector<SelectionStrategy>& strategies, const fs::path& out,
                                 const ProgressFn& progress) {
  for (double b : betas) {
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("sweep.betas: every beta must lie in [0, 1]");
  }
  if (betas.empty()) throw ConfigError("sweep.betas: at least one beta required");
  if (strategies.empty()) throw ConfigError("sweep.strategies: at least one strategy required");

  std::vector<SweepCell> cells;
  bool have_none = false;
  bool have_all = false;
  for (auto strategy : strategies) {
    for (double beta : betas) {
      SweepCell cell;
      cell.beta = beta;
      if (beta == 0.0 || strategy == SelectionStrategy::None) {
        if (have_none) continue;
        have_none = true;
        cell.strategy = "none";
        cell.beta = 0.0;
        cell.mode = RunMode::IndependentDQN;
      } else if (beta == 1.0 || strategy == SelectionStrategy::ShareAll) {
        if (have_all) continue;
        have_all = true;
        cell.strategy = "all";
        cell.beta = 1.0;
      } else {
        cell.strategy = std::string(to_string(strategy));
      }
      cells.push_back(std::move(cell));
    }
  }

  fs::create_directories(out);
  auto csv = open_text(out / "sweep.csv");
  csv << "strategy,beta,mode,seeds,final_team_return_mean,final_team_return_std,realized_bandwidth\n";
  for (auto& cell : cells) {
    ExperimentConfig cfg = base;
    cfg.mode = cell.mode;
    if (cell.strategy == "all") {
      cfg.trainer.selection.strategy = SelectionStrategy::ShareAll;
    } else if (cell.strategy != "none") {
      cfg.trainer.selection.strategy = parse_selection_strategy(cell.strategy);
    }
    cfg.trainer.selection.bandwidth_beta = cell.beta;

    std::ostringstream dir;
    dir << cell.strategy << "_beta" << cell.beta;
    if (progress) progress("sweep cell " + dir.str());
    cell.result = run_experiment(cfg, out / dir.str(), progress);
    double bw = 0.0;
    for (const auto& s : cell.result.seeds) bw += s.realized_bandwidth;
    cell.realized_bandwidth = bw / static_cast<double>(cell.result.seeds.size());

    csv << cell.strategy << ',' << cell.beta << ',' << to_string(cell.mode) << ',' << cell.result.seeds.size()
        << ',' << fmt(cell.result.final_mean) << ',' << fmt(cell.result.final_std) << ','
        << fmt(cell.realized_bandwidth) << '\n';
    csv.flush();
  }
  return cells;
}

CheckpointEvaluation evaluate_checkpoint(const fs::path& dir, std::size_t episodes, std::uint64_t seed,
                                         std::ostream* trace) {
  const auto config = load_experiment_config((dir / "experiment.ini").string());
  auto trainer = Trainer::load_checkpoint(dir, std::make_unique<PursuitGame>(config.environment, 0),
                                          TrainerOptions{});
  PursuitGame env(config.environment, seed);
  env.set_trace(trace);
  return {trainer.evaluate(env, episodes, seed), episodes};
}

}  // namespace super
