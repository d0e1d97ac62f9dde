#include "super/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "super/errors.hpp"

namespace super {
namespace {

// Shortest round-trip text, so CSVs are byte-stable and lossless.
std::string fmt_num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_cell(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw FormatError("metrics csv: bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<std::string> metrics_columns(std::size_t agent_count) {
  std::vector<std::string> cols{"timestep", "env_steps", "episode"};
  for (std::size_t i = 0; i < agent_count; ++i) cols.push_back("return_agent" + std::to_string(i));
  cols.emplace_back("team_return");
  for (std::size_t i = 0; i < agent_count; ++i) cols.push_back("shared_count_agent" + std::to_string(i));
  for (std::size_t i = 0; i < agent_count; ++i) cols.push_back("actual_bandwidth_agent" + std::to_string(i));
  cols.insert(cols.end(), {"mean_abs_td", "epsilon", "loss"});
  return cols;
}

void write_metrics_header(std::ostream& os, std::size_t agent_count) {
  const auto cols = metrics_columns(agent_count);
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
}

void write_metrics_row(std::ostream& os, const MetricsRow& row) {
  os << row.timestep << ',' << row.env_steps << ',' << row.episode;
  for (double r : row.agent_returns) os << ',' << fmt_num(r);
  os << ',' << fmt_num(row.team_return);
  for (auto s : row.shared_counts) os << ',' << s;
  for (double b : row.actual_bandwidths) os << ',' << fmt_num(b);
  os << ',' << fmt_num(row.mean_abs_td) << ',' << fmt_num(row.epsilon) << ',' << fmt_num(row.loss) << '\n';
}

MetricsRecorder::MetricsRecorder(std::size_t agent_count, std::uint64_t report_interval)
    : agent_count_(agent_count), interval_(report_interval) {
  if (report_interval == 0) throw ContractViolation("report interval must be positive");
}

std::vector<MetricsRow> MetricsRecorder::observe(const IterationReport& report, const RelayChannel& channel) {
  if (report.agents.size() != agent_count_) throw ContractViolation("report agent count mismatch");
  for (const auto& a : report.agents) {
    td_sum_ += a.mean_abs_td;
    ++td_count_;
    if (a.loss) {
      loss_sum_ += *a.loss;
      ++loss_count_;
    }
  }

  std::vector<MetricsRow> rows;
  for (std::size_t e = 0; e < report.completed_team_returns.size(); ++e) {
    MetricsRow row;
    row.env_steps = report.env_steps;
    row.timestep = report.env_steps / interval_ * interval_;
    row.episode = ++episodes_;
    for (std::size_t i = 0; i < agent_count_; ++i) {
      row.agent_returns.push_back(report.agents[i].completed_returns.at(e));
      const auto c = channel.counters(static_cast<AgentId>(i));
      row.shared_counts.push_back(c.shared);
      row.actual_bandwidths.push_back(c.actual_bandwidth());
    }
    row.team_return = report.completed_team_returns[e];
    row.mean_abs_td = td_count_ ? td_sum_ / static_cast<double>(td_count_) : 0.0;
    row.epsilon = report.epsilon;
    row.loss = loss_count_ ? loss_sum_ / static_cast<double>(loss_count_) : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(std::move(row));
  }
  if (!rows.empty()) {
    td_sum_ = loss_sum_ = 0.0;
    td_count_ = loss_count_ = 0;
  }
  return rows;
}

std::size_t MetricsTable::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw FormatError("metrics csv: missing column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> MetricsTable::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

MetricsTable read_metrics_csv(std::istream& is) {
  MetricsTable t;
  std::string line;
  if (!std::getline(is, line) || line.empty()) throw FormatError("metrics csv: missing header");
  t.columns = split(line, ',');
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != t.columns.size()) throw FormatError("metrics csv: row width does not match header");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

MetricsTable read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  return read_metrics_csv(is);
}

IntervalSeries interval_means(const MetricsTable& table, const std::string& column) {
  const std::size_t tc = table.column("timestep");
  const std::size_t vc = table.column(column);
  std::map<std::uint64_t, std::pair<double, std::size_t>> acc;
  for (const auto& r : table.rows) {
    auto& [sum, n] = acc[static_cast<std::uint64_t>(r[tc])];
    sum += r[vc];
    ++n;
  }
  IntervalSeries s;
  for (const auto& [t, a] : acc) {
    s.timesteps.push_back(t);
    s.values.push_back(a.first / static_cast<double>(a.second));
  }
  return s;
}

std::vector<SummaryRow> summarize(const std::vector<IntervalSeries>& per_seed) {
  std::map<std::uint64_t, std::vector<double>> by_step;
  for (const auto& s : per_seed) {
    for (std::size_t i = 0; i < s.timesteps.size(); ++i) by_step[s.timesteps[i]].push_back(s.values[i]);
  }
  std::vector<SummaryRow> out;
  for (const auto& [t, v] : by_step) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out.push_back({t, v.size(), mean, std::sqrt(ss / n)});
  }
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "timestep,seeds,team_return_mean,team_return_std\n";
  for (const auto& r : rows) os << r.timestep << ',' << r.seeds << ',' << fmt_num(r.mean) << ',' << fmt_num(r.stddev) << '\n';
}

std::vector<double> exponential_smoothing(const std::vector<double>& x, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("smoothing alpha must lie in (0, 1]");
  std::vector<double> y;
  y.reserve(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) y.push_back(t == 0 ? x[0] : alpha * x[t] + (1.0 - alpha) * y.back());
  return y;
}

double final_team_return(const MetricsTable& table, std::uint64_t total_env_steps, double fraction) {
  if (table.rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t sc = table.column("env_steps");
  const std::size_t rc = table.column("team_return");
  const double cutoff = static_cast<double>(total_env_steps) * (1.0 - fraction);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : table.rows) {
    if (r[sc] > cutoff) {
      sum += r[rc];
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : table.rows.back()[rc];
}

bool smoothing_preserves_order(const std::vector<double>& a, double std_a, const std::vector<double>& b,
                               double std_b, double alpha) {
  if (a.empty() || b.empty()) return true;
  const double gap = a.back() - b.back();
  const double pooled = std::sqrt(0.5 * (std_a * std_a + std_b * std_b));
  if (std::abs(gap) <= pooled) return true;
  const double smoothed_gap = exponential_smoothing(a, alpha).back() - exponential_smoothing(b, alpha).back();
  return (gap > 0) == (smoothed_gap > 0);
}

}  // namespace super
