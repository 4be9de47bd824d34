#include "hmpc/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hmpc {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

std::string render_svg(const std::string& title, const std::vector<PlotSeries>& series,
                       int width, int height) {
  const double ml = 70, mr = 20, mt = 40, mb = 40;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (std::isnan(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
  if (xmax - xmin <= 0) xmax = xmin + 1;
  if (ymax - ymin <= 0) { ymax += 0.5; ymin -= 0.5; }

  auto X = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
  auto Y = [&](double v) { return mt + ph - (v - ymin) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << title << "</text>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  os << "<text x=\"" << ml - 6 << "\" y=\"" << Y(ymin) << "\" text-anchor=\"end\" font-size=\"11\">"
     << sci(ymin) << "</text>\n";
  os << "<text x=\"" << ml - 6 << "\" y=\"" << Y(ymax) + 10
     << "\" text-anchor=\"end\" font-size=\"11\">" << sci(ymax) << "</text>\n";
  os << "<text x=\"" << X(xmin) << "\" y=\"" << height - 14
     << "\" text-anchor=\"middle\" font-size=\"11\">" << sci(xmin) << "</text>\n";
  os << "<text x=\"" << X(xmax) << "\" y=\"" << height - 14
     << "\" text-anchor=\"middle\" font-size=\"11\">" << sci(xmax) << "</text>\n";

  int li = 0;
  for (const auto& s : series) {
    bool open = false;
    std::ostringstream pts;
    os << "<path fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" d=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (std::isnan(s.y[i])) {
        open = false;
        continue;
      }
      os << (open ? "L" : "M") << num(X(s.x[i])) << ' ' << num(Y(s.y[i]));
      open = true;
    }
    os << "\"/>\n";
    os << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 16 + 14 * li << "\" font-size=\"12\" fill=\""
       << s.color << "\">" << s.label << "</text>\n";
    ++li;
  }
  os << "</svg>\n";
  return os.str();
}

void write_svg(const std::string& path, const std::string& title,
               const std::vector<PlotSeries>& series) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write SVG: " + path);
  f << render_svg(title, series);
  if (!f) throw std::runtime_error("I/O failure writing SVG: " + path);
}

std::vector<std::string> emit_standard_plots(const SimLog& log, const std::string& out_dir) {
  const size_t n = log.rows.size();
  std::vector<double> t(n), y(n), yh(n), yerr(n), force(n), xm(n), xref(n), terr(n), zd(n), za(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& r = log.rows[i];
    t[i] = r.t;
    y[i] = r.y;
    yh[i] = r.y_hat;
    yerr[i] = r.y - r.y_hat;
    force[i] = r.force;
    xm[i] = r.x_m * 1e3;
    xref[i] = r.x_ref * 1e3;
    terr[i] = (r.x_ref - r.x_m) * 1e3;
    const double xr_mm = r.x_ref * 1e3;
    zd[i] = std::abs(xr_mm) >= 0.05 ? r.force / xr_mm : std::numeric_limits<double>::quiet_NaN();
    za[i] = r.impedance;
  }
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, const std::string& title,
                  std::vector<PlotSeries> series) {
    const std::string path = out_dir + "/" + name;
    write_svg(path, title, series);
    files.push_back(name);
  };
  emit("output_estimate.svg", "Measured vs estimated output",
       {{"measured", "#1f6fb2", t, y}, {"estimated", "#d1495b", t, yh}});
  emit("observer_error.svg", "Output estimation error", {{"y - y_hat", "#1f6fb2", t, yerr}});
  emit("force_profile.svg", "Operator force profile [N]", {{"force", "#1f6fb2", t, force}});
  emit("tracking.svg", "Displacement tracking [mm]",
       {{"reference", "#444444", t, xref},
        {"actual", "#1f6fb2", t, xm},
        {"error", "#d1495b", t, terr}});
  emit("impedance.svg", "Impedance F/x [N/mm]",
       {{"desired", "#444444", t, zd}, {"achieved", "#1f6fb2", t, za}});
  return files;
}

}  // namespace hmpc
