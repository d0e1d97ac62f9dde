#pragma once

// Training metrics: one row per finished episode, written as CSV.
//
// Columns (stable, always present):
//   timestep, env_steps, episode,
//   return_agent<i>..., team_return,
//   shared_count_agent<i>..., actual_bandwidth_agent<i>...,
//   mean_abs_td, epsilon, loss
// timestep is env_steps rounded down to the report interval. shared counts and
// bandwidths are cumulative since the start of the run. mean_abs_td and loss
// average the iterations since the previous row; loss is nan before the
// first gradient step.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "super/relay_channel.hpp"
#include "super/trainer.hpp"

namespace super {

struct MetricsRow {
  std::uint64_t timestep = 0;
  std::uint64_t env_steps = 0;
  std::uint64_t episode = 0;
  std::vector<double> agent_returns;
  double team_return = 0.0;
  std::vector<std::uint64_t> shared_counts;
  std::vector<double> actual_bandwidths;
  double mean_abs_td = 0.0;
  double epsilon = 0.0;
  double loss = 0.0;  // nan when no agent has trained yet
};

std::vector<std::string> metrics_columns(std::size_t agent_count);
void write_metrics_header(std::ostream& os, std::size_t agent_count);
void write_metrics_row(std::ostream& os, const MetricsRow& row);

/// Turns iteration reports into rows. Feed every report in order.
class MetricsRecorder {
 public:
  MetricsRecorder(std::size_t agent_count, std::uint64_t report_interval);

  /// Rows for the episodes that finished in this iteration.
  std::vector<MetricsRow> observe(const IterationReport& report, const RelayChannel& channel);

 private:
  std::size_t agent_count_;
  std::uint64_t interval_;
  std::uint64_t episodes_ = 0;
  double td_sum_ = 0.0;
  std::size_t td_count_ = 0;
  double loss_sum_ = 0.0;
  std::size_t loss_count_ = 0;
};

/// A parsed metrics CSV: header plus numeric cells (nan allowed).
struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Throws FormatError when the column is absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

MetricsTable read_metrics_csv(std::istream& is);
MetricsTable read_metrics_csv(const std::string& path);

/// Mean of `column` within each interval (keyed by the timestep column), in
/// increasing timestep order.
struct IntervalSeries {
  std::vector<std::uint64_t> timesteps;
  std::vector<double> values;
};
IntervalSeries interval_means(const MetricsTable& table, const std::string& column);

/// Cross-seed aggregate: per-seed interval means first, then mean and
/// population standard deviation over the seeds that report the interval.
struct SummaryRow {
  std::uint64_t timestep = 0;
  std::size_t seeds = 0;
  double mean = 0.0;
  double stddev = 0.0;
};
std::vector<SummaryRow> summarize(const std::vector<IntervalSeries>& per_seed);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

/// y_0 = x_0, y_t = alpha * x_t + (1 - alpha) * y_{t-1}.
std::vector<double> exponential_smoothing(const std::vector<double>& x, double alpha);

/// Mean team return over rows whose env_steps lie in the last `fraction` of
/// the budget; falls back to the last row when none do. nan for an empty table.
double final_team_return(const MetricsTable& table, std::uint64_t total_env_steps, double fraction = 0.1);

/// True when smoothing keeps the order of two curves' final values, or when
/// their unsmoothed final gap is within the pooled standard deviation.
bool smoothing_preserves_order(const std::vector<double>& a, double std_a, const std::vector<double>& b,
                               double std_b, double alpha);

}  // namespace super
