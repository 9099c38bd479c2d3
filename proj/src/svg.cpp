#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gpecmg/harness.hpp"

namespace gpecmg {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string decade_label(int p) {
  return p == 0 ? "1" : "1e" + std::to_string(p);
}

struct Frame {
  int x_lo, x_hi, y_lo, y_hi;  // decades
  double px(double h) const {
    return kLeft + (std::log10(h) - x_lo) / (x_hi - x_lo) * (kWidth - kLeft - kRight);
  }
  double py(double e) const {
    return kHeight - kBottom - (std::log10(e) - y_lo) / (y_hi - y_lo) * (kHeight - kTop - kBottom);
  }
};

}  // namespace

std::string loglog_svg(const std::string& title, const std::string& y_label, const std::vector<PlotSeries>& series) {
  double hmin = INFINITY, hmax = -INFINITY, emin = INFINITY, emax = -INFINITY;
  bool enough = false;
  const std::pair<double, double>* anchor = nullptr;
  for (const auto& s : series) {
    if (s.points.size() >= 2) enough = true;
    for (const auto& p : s.points) {
      if (!(p.first > 0.0 && p.second > 0.0)) throw std::invalid_argument("log-log plot needs positive data");
      hmin = std::min(hmin, p.first);
      hmax = std::max(hmax, p.first);
      emin = std::min(emin, p.second);
      emax = std::max(emax, p.second);
      if (!anchor) anchor = &p;
    }
  }
  Frame f{-2, 0, -6, 0};
  if (anchor) {
    f.x_lo = static_cast<int>(std::floor(std::log10(hmin)));
    f.x_hi = std::max(f.x_lo + 1, static_cast<int>(std::ceil(std::log10(hmax))));
    f.y_lo = static_cast<int>(std::floor(std::log10(emin)));
    f.y_hi = std::max(f.y_lo + 1, static_cast<int>(std::ceil(std::log10(emax))));
  }
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kTop, y1 = kHeight - kBottom;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\" "
       "font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
       "</text>\n";
  s += "<clipPath id=\"plot\"><rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(x1 - x0) +
       "\" height=\"" + num(y1 - y0) + "\"/></clipPath>\n";

  // Decade grid and tick labels: the axes are logarithmic.
  for (int p = f.x_lo; p <= f.x_hi; ++p) {
    const double x = f.px(std::pow(10.0, p));
    s += "<line x1=\"" + num(x) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x) + "\" y2=\"" + num(y1) +
         "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + num(x) + "\" y=\"" + num(y1 + 16) + "\" text-anchor=\"middle\">" + decade_label(p) +
         "</text>\n";
  }
  for (int p = f.y_lo; p <= f.y_hi; ++p) {
    const double y = f.py(std::pow(10.0, p));
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y) +
         "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + decade_label(p) +
         "</text>\n";
  }
  s += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(x1 - x0) + "\" height=\"" + num(y1 - y0) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 16) +
       "\" text-anchor=\"middle\">mesh size h (log scale)</text>\n";
  s += "<text x=\"18\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       num((y0 + y1) / 2) + ")\">" + escape(y_label) + " (log scale)</text>\n";

  double legend_y = y0 + 14;
  auto legend = [&](const std::string& color, const std::string& dash, const std::string& label) {
    s += "<line x1=\"" + num(x1 + 10) + "\" y1=\"" + num(legend_y - 4) + "\" x2=\"" + num(x1 + 34) + "\" y2=\"" +
         num(legend_y - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"" + dash + "/>\n";
    s += "<text x=\"" + num(x1 + 40) + "\" y=\"" + num(legend_y) + "\">" + escape(label) + "</text>\n";
    legend_y += 18;
  };

  if (anchor) {
    // Guides through the first data point, e = e0 (h/h0)^p.
    const double ha = std::pow(10.0, f.x_lo), hb = std::pow(10.0, f.x_hi);
    for (int p : {1, 2}) {
      const double ea = anchor->second * std::pow(ha / anchor->first, p);
      const double eb = anchor->second * std::pow(hb / anchor->first, p);
      const std::string dash = p == 1 ? " stroke-dasharray=\"6 4\"" : " stroke-dasharray=\"2 3\"";
      s += "<line x1=\"" + num(f.px(ha)) + "\" y1=\"" + num(f.py(ea)) + "\" x2=\"" + num(f.px(hb)) + "\" y2=\"" +
           num(f.py(eb)) + "\" stroke=\"#777777\"" + dash + " clip-path=\"url(#plot)\"/>\n";
      legend("#777777", dash, "slope " + std::to_string(p));
    }
  }

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& ser = series[i];
    const std::string color = kColors[i % std::size(kColors)];
    if (ser.points.empty()) continue;
    std::string pts;
    for (const auto& p : ser.points) pts += num(f.px(p.first)) + "," + num(f.py(p.second)) + " ";
    pts.pop_back();
    s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    for (const auto& p : ser.points) {
      s += "<circle cx=\"" + num(f.px(p.first)) + "\" cy=\"" + num(f.py(p.second)) + "\" r=\"3\" fill=\"" + color +
           "\"/>\n";
    }
    legend(color, "", ser.label);
  }
  if (!enough) {
    s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num((y0 + y1) / 2) +
         "\" text-anchor=\"middle\" font-size=\"16\" fill=\"#aa0000\">insufficient data</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::vector<std::filesystem::path> emit_plots(const ErrorTable& cascadic, const ErrorTable* auxiliary,
                                              const std::filesystem::path& dir) {
  auto collect = [](const ErrorTable& t, double ErrorRow::*field) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : t.rows) {
      const double e = r.*field;
      if (r.level >= 2 && e > 0.0 && std::isfinite(e)) pts.emplace_back(r.h, e);
    }
    return pts;
  };
  std::vector<PlotSeries> lambda_series{{"cascadic", collect(cascadic, &ErrorRow::err_lambda)}};
  std::vector<PlotSeries> u_series{{"cascadic H1", collect(cascadic, &ErrorRow::err_h1)},
                                   {"cascadic L2", collect(cascadic, &ErrorRow::err_l2)}};
  if (auxiliary) {
    lambda_series.push_back({"auxiliary", collect(*auxiliary, &ErrorRow::err_lambda)});
    u_series.push_back({"auxiliary H1", collect(*auxiliary, &ErrorRow::err_h1)});
  }
  const std::vector<std::pair<std::filesystem::path, std::string>> files{
      {dir / "eigenvalue_errors.svg", loglog_svg("Eigenvalue error vs direct solve", "|error in lambda|", lambda_series)},
      {dir / "eigenfunction_errors.svg", loglog_svg("Eigenfunction error vs direct solve", "error norm", u_series)}};
  std::vector<std::filesystem::path> out;
  for (const auto& [path, content] : files) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
    if (!os) throw std::runtime_error("write failed for " + path.string());
    out.push_back(path);
  }
  return out;
}

}  // namespace gpecmg
