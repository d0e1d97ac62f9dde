#include "super/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include "super/errors.hpp"

namespace super {
namespace {

constexpr double kWidth = 800;
constexpr double kHeight = 480;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 50;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

bool has_column(const MetricsTable& t, const std::string& name) {
  return std::find(t.columns.begin(), t.columns.end(), name) != t.columns.end();
}

}  // namespace

Curve curve_from_table(const MetricsTable& table, std::string label) {
  Curve c;
  c.label = std::move(label);
  if (has_column(table, "team_return_mean")) {
    c.x = table.values("timestep");
    c.mean = table.values("team_return_mean");
    c.stddev = has_column(table, "team_return_std") ? table.values("team_return_std")
                                                    : std::vector<double>(c.mean.size(), 0.0);
    return c;
  }
  const auto s = interval_means(table, "team_return");
  c.x.assign(s.timesteps.begin(), s.timesteps.end());
  c.mean = s.values;
  c.stddev.assign(c.mean.size(), 0.0);
  return c;
}

Curve smooth_curve(const Curve& curve, double alpha) {
  Curve out = curve;
  out.mean = exponential_smoothing(curve.mean, alpha);
  out.stddev = exponential_smoothing(curve.stddev, alpha);
  return out;
}

void write_svg(std::ostream& os, const std::vector<Curve>& curves, const std::string& title,
               const std::string& x_label, const std::string& y_label) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (!std::isfinite(c.mean[i])) continue;
      x0 = std::min(x0, c.x[i]);
      x1 = std::max(x1, c.x[i]);
      y0 = std::min(y0, c.mean[i] - c.stddev[i]);
      y1 = std::max(y1, c.mean[i] + c.stddev[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y0 -= 0.5, y1 += 0.5;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";

  // axes and ticks
  os << "<g stroke=\"#444\" fill=\"none\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
     << "\" height=\"" << ph << "\"/></g>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0;
    const double yv = y0 + (y1 - y0) * i / 5.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << std::lround(xv)
       << "</text>\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", yv);
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(yv) << "\" y2=\"" << py(yv)
       << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
     << escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (c.x.empty()) continue;
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) os << px(c.x[i]) << ',' << py(c.mean[i] + c.stddev[i]) << ' ';
    for (std::size_t i = c.x.size(); i-- > 0;) os << px(c.x[i]) << ',' << py(c.mean[i] - c.stddev[i]) << ' ';
    os << "\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) os << px(c.x[i]) << ',' << py(c.mean[i]) << ' ';
    os << "\"/>\n";
    const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << kLeft + pw + 10 << "\" x2=\"" << kLeft + pw + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
    os << "<text x=\"" << kLeft + pw + 36 << "\" y=\"" << ly + 4 << "\">" << escape(c.label) << "</text>\n";
  }
  os << "</svg>\n";
}

void plot_learning_curves(const std::vector<std::string>& csv_paths, double alpha, const std::string& out) {
  if (csv_paths.empty()) throw ConfigError("plot.in: at least one CSV required");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("plot.alpha: must lie in (0, 1]");
  std::vector<Curve> curves;
  std::vector<std::string> schema;
  for (const auto& path : csv_paths) {
    MetricsTable table;
    try {
      table = read_metrics_csv(path);
    } catch (const FormatError& e) {
      throw ConfigError(std::string("plot.in: ") + e.what());
    }
    if (schema.empty()) {
      schema = table.columns;
    } else if (table.columns != schema) {
      throw ConfigError("plot.in: '" + path + "' does not share the schema of '" + csv_paths.front() + "'");
    }
    const std::filesystem::path p(path);
    std::string label = p.parent_path().filename().string();
    label = label.empty() ? p.stem().string() : label + "/" + p.stem().string();
    try {
      curves.push_back(smooth_curve(curve_from_table(table, label), alpha));
    } catch (const FormatError& e) {
      throw ConfigError(std::string("plot.in: ") + e.what());
    }
  }
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write " + out);
  write_svg(os, curves, "learning curves");
}

}  // namespace super
