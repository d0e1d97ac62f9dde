#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "super/metrics.hpp"

namespace super {

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> stddev;  // band half-width, same length as mean
};

/// Builds a curve from a summary CSV (team_return_mean / team_return_std) or a
/// per-seed metrics CSV (interval means of team_return, zero band).
Curve curve_from_table(const MetricsTable& table, std::string label);

/// Smooths mean and band independently with the exponential recurrence.
Curve smooth_curve(const Curve& curve, double alpha);

/// Self-contained SVG with one line and +-1 std band per curve.
void write_svg(std::ostream& os, const std::vector<Curve>& curves, const std::string& title,
               const std::string& x_label = "environment steps", const std::string& y_label = "team return");

/// Reads every CSV, checks that they share a schema (ConfigError otherwise),
/// smooths and writes the SVG to `out`.
void plot_learning_curves(const std::vector<std::string>& csv_paths, double alpha, const std::string& out);

}  // namespace super
