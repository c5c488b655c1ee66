#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "gpconc/errors.hpp"
#include "gpconc/harness.hpp"

namespace gpconc {

namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

bool parse_double(const std::string& cell, double& value) {
  if (cell.empty()) return false;
  char* end = nullptr;
  value = std::strtod(cell.c_str(), &end);
  return end != nullptr && *end == '\0';
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

void write_csv(const Table& table, const std::filesystem::path& path) {
  std::string text;
  const auto line = [&text](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) text += ',';
      text += cells[i];
    }
    text += '\n';
  };
  line(table.columns);
  for (const auto& row : table.rows) line(row);
  write_text(path, text);
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  Table table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (header) {
      table.columns = std::move(cells);
      header = false;
    } else if (!line.empty()) {
      cells.resize(table.columns.size());
      table.rows.push_back(std::move(cells));
    }
  }
  if (header) throw Error(ErrorKind::Io, path.string() + " is empty");
  return table;
}

ReportVerification verify_results(const Table& results) {
  ReportVerification out;
  out.rows = results.rows.size();
  const std::size_t v_col = results.column("violations");
  const std::size_t m_col = results.column("replicates");
  const std::size_t r_col = results.column("violation_rate");
  if (v_col == results.columns.size() || m_col == results.columns.size() || r_col == results.columns.size()) {
    return out;
  }
  for (std::size_t i = 0; i < results.rows.size(); ++i) {
    const auto& row = results.rows[i];
    double v = 0.0;
    double m = 0.0;
    double rate = 0.0;
    if (!parse_double(row[v_col], v) || !parse_double(row[m_col], m) || !parse_double(row[r_col], rate)) continue;
    ++out.checked_rates;
    const double expected = m > 0.0 ? v / m : 0.0;
    if (std::fabs(expected - rate) > 1e-15 * std::max(1.0, std::fabs(expected))) {
      out.mismatches.push_back("row " + std::to_string(i + 1) + ": violation_rate " + row[r_col] + " != " +
                               row[v_col] + "/" + row[m_col]);
    }
  }
  return out;
}

std::string render_svg(const Table& plot, const std::string& title) {
  constexpr double W = 760.0;
  constexpr double H = 460.0;
  constexpr double left = 80.0;
  constexpr double right = 210.0;
  constexpr double top = 40.0;
  constexpr double bottom = 60.0;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                  "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

  struct Series {
    std::string name;
    std::vector<std::pair<double, double>> pts;
  };
  std::vector<Series> series;
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (std::size_t c = 1; c < plot.columns.size(); ++c) {
    Series s{plot.columns[c], {}};
    for (const auto& row : plot.rows) {
      double x = 0.0;
      double y = 0.0;
      if (!parse_double(row[0], x) || !parse_double(row[c], y) || !(y > 0.0) || !std::isfinite(y)) continue;
      s.pts.emplace_back(x, std::log10(y));
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, std::log10(y));
      ymax = std::max(ymax, std::log10(y));
    }
    if (!s.pts.empty()) series.push_back(std::move(s));
  }

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", W) + "\" height=\"" + fmt("%.0f", H) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt("%.1f", left) + "\" y=\"24\" font-size=\"15\">" + title + "</text>\n";
  if (series.empty()) {
    svg += "<text x=\"" + fmt("%.1f", left) + "\" y=\"80\">no positive data</text>\n</svg>\n";
    return svg;
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  ymin = std::floor(ymin);
  ymax = std::ceil(ymax);
  if (ymax == ymin) ymax = ymin + 1.0;
  const double pw = W - left - right;
  const double ph = H - top - bottom;
  const auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  svg += "<rect x=\"" + fmt("%.1f", left) + "\" y=\"" + fmt("%.1f", top) + "\" width=\"" + fmt("%.1f", pw) +
         "\" height=\"" + fmt("%.1f", ph) + "\" fill=\"none\" stroke=\"#333\"/>\n";
  const double ystep = std::max(1.0, std::ceil((ymax - ymin) / 10.0));
  for (double y = ymin; y <= ymax + 1e-9; y += ystep) {
    svg += "<line x1=\"" + fmt("%.1f", left) + "\" x2=\"" + fmt("%.1f", left + pw) + "\" y1=\"" + fmt("%.1f", sy(y)) +
           "\" y2=\"" + fmt("%.1f", sy(y)) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", left - 8) + "\" y=\"" + fmt("%.1f", sy(y) + 4) +
           "\" text-anchor=\"end\">1e" + fmt("%.0f", y) + "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double x = xmin + (xmax - xmin) * i / 5.0;
    svg += "<text x=\"" + fmt("%.1f", sx(x)) + "\" y=\"" + fmt("%.1f", top + ph + 18) +
           "\" text-anchor=\"middle\">" + fmt("%g", x) + "</text>\n";
  }
  svg += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"" + fmt("%.1f", H - 18) + "\" text-anchor=\"middle\">" +
         plot.columns[0] + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = palette[k % (sizeof palette / sizeof palette[0])];
    std::string points;
    for (const auto& [x, y] : series[k].pts) {
      if (!points.empty()) points += ' ';
      points += fmt("%.2f", sx(x)) + "," + fmt("%.2f", sy(y));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.8\" points=\"" + points +
           "\"/>\n";
    for (const auto& [x, y] : series[k].pts) {
      svg += "<circle cx=\"" + fmt("%.2f", sx(x)) + "\" cy=\"" + fmt("%.2f", sy(y)) + "\" r=\"2.5\" fill=\"" + color +
             "\"/>\n";
    }
    const double ly = top + 14.0 + 18.0 * static_cast<double>(k);
    svg += "<line x1=\"" + fmt("%.1f", left + pw + 12) + "\" x2=\"" + fmt("%.1f", left + pw + 32) + "\" y1=\"" +
           fmt("%.1f", ly - 4) + "\" y2=\"" + fmt("%.1f", ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", left + pw + 38) + "\" y=\"" + fmt("%.1f", ly) + "\">" + series[k].name +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir, bool svg) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + out_dir.string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["tool"] = "gpconc";
  manifest["version"] = kToolVersion;
  manifest["experiment"] = report.experiment;
  manifest["config_hash"] = report.config_hash;
  manifest["seed"] = report.seed;
  manifest["config"] = report.config;
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [k, v] : report.summary) summary[k] = v;
  manifest["summary"] = summary;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  manifest["checks"] = checks;
  nlohmann::json files = {"results.csv", "plotdata.csv"};
  if (svg) files.push_back("plot.svg");
  manifest["files"] = files;

  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  write_csv(report.results, out_dir / "results.csv");
  write_csv(report.plot, out_dir / "plotdata.csv");
  if (svg) write_text(out_dir / "plot.svg", render_svg(report.plot, report.experiment));
}

}  // namespace gpconc
