#include "dopf/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dopf::harness::svg {

namespace {

constexpr double kW = 760, kH = 480;
constexpr double kL = 80, kR = 30, kT = 48, kB = 64;  // margins
constexpr double kPW = kW - kL - kR, kPH = kH - kT - kB;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '&') o += "&amp;";
    else if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else o += c;
  }
  return o;
}

struct Scale {
  double lo = 0, hi = 1;
  bool log = false;

  double map(double v, double px_lo, double px_len) const {
    double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return px_lo + t * px_len;
  }
};

Scale fit(std::vector<double> vals, bool log) {
  Scale s;
  s.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : vals) {
    if (log && v <= 0) continue;
    if (!std::isfinite(v)) continue;
    const double w = log ? std::log10(v) : v;
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  if (!std::isfinite(lo)) {
    lo = 0;
    hi = 1;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = log ? 0.15 : 0.06 * (hi - lo);
  s.lo = lo - pad;
  s.hi = hi + pad;
  return s;
}

void axes(std::ostringstream& os, const Scale& sx, const Scale& sy, const std::string& title,
          const std::string& xl, const std::string& yl) {
  os << "<rect x='" << kL << "' y='" << kT << "' width='" << kPW << "' height='" << kPH
     << "' fill='none' stroke='#444'/>\n";
  os << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' font-size='16'>" << esc(title)
     << "</text>\n";
  os << "<text x='" << kL + kPW / 2 << "' y='" << kH - 14
     << "' text-anchor='middle' font-size='13'>" << esc(xl) << "</text>\n";
  os << "<text x='20' y='" << kT + kPH / 2 << "' text-anchor='middle' font-size='13' "
     << "transform='rotate(-90 20 " << kT + kPH / 2 << ")'>" << esc(yl) << "</text>\n";

  auto ticks = [&](const Scale& s) {
    std::vector<double> t;
    if (s.log) {
      for (int d = (int)std::floor(s.lo); d <= (int)std::ceil(s.hi); ++d)
        if (d >= s.lo && d <= s.hi) t.push_back(std::pow(10.0, d));
      if (t.size() < 2)
        for (double d = std::ceil(s.lo * 2) / 2; d <= s.hi; d += 0.5) t.push_back(std::pow(10.0, d));
    } else {
      const double span = s.hi - s.lo;
      const double step = std::pow(10.0, std::floor(std::log10(span / 4)));
      double inc = step;
      if (span / inc > 8) inc = step * 2;
      if (span / inc > 8) inc = step * 5 / 2;
      for (double v = std::ceil(s.lo / inc) * inc; v <= s.hi + 1e-12; v += inc) t.push_back(v);
    }
    return t;
  };
  for (double v : ticks(sx)) {
    const double x = sx.map(v, kL, kPW);
    os << "<line x1='" << x << "' y1='" << kT + kPH << "' x2='" << x << "' y2='" << kT + kPH + 5
       << "' stroke='#444'/>\n";
    os << "<text x='" << x << "' y='" << kT + kPH + 20 << "' text-anchor='middle' font-size='11'>"
       << num(v) << "</text>\n";
  }
  for (double v : ticks(sy)) {
    const double y = sy.map(v, kT + kPH, -kPH);
    os << "<line x1='" << kL - 5 << "' y1='" << y << "' x2='" << kL << "' y2='" << y
       << "' stroke='#444'/>\n";
    os << "<text x='" << kL - 9 << "' y='" << y + 4 << "' text-anchor='end' font-size='11'>"
       << num(v) << "</text>\n";
    os << "<line x1='" << kL << "' y1='" << y << "' x2='" << kL + kPW << "' y2='" << y
       << "' stroke='#ddd' stroke-dasharray='3,3'/>\n";
  }
}

void save(const std::string& path, const std::string& body) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH
    << "' viewBox='0 0 " << kW << " " << kH << "' font-family='sans-serif'>\n"
    << "<rect width='100%' height='100%' fill='white'/>\n"
    << body << "</svg>\n";
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_line_plot(const std::string& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<Series>& series, bool log_x,
                     bool log_y) {
  std::vector<double> all_x, all_y;
  for (const auto& s : series) {
    all_x.insert(all_x.end(), s.x.begin(), s.x.end());
    all_y.insert(all_y.end(), s.y.begin(), s.y.end());
  }
  const Scale sx = fit(all_x, log_x), sy = fit(all_y, log_y);
  std::ostringstream os;
  axes(os, sx, sy, title, x_label, y_label);

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % 6];
    std::ostringstream pts;
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      if ((log_x && s.x[j] <= 0) || (log_y && s.y[j] <= 0)) continue;
      if (!std::isfinite(s.x[j]) || !std::isfinite(s.y[j])) continue;
      const double px = sx.map(s.x[j], kL, kPW);
      const double py = sy.map(s.y[j], kT + kPH, -kPH);
      pts << px << ',' << py << ' ';
      os << "<circle cx='" << px << "' cy='" << py << "' r='3' fill='" << color << "'/>\n";
    }
    os << "<polyline points='" << pts.str() << "' fill='none' stroke='" << color
       << "' stroke-width='1.5'/>\n";
    if (series.size() > 1) {
      const double lx = kL + kPW - 150, ly = kT + 16 + 16 * (double)i;
      os << "<line x1='" << lx << "' y1='" << ly - 4 << "' x2='" << lx + 22 << "' y2='" << ly - 4
         << "' stroke='" << color << "' stroke-width='2'/>\n";
      os << "<text x='" << lx + 28 << "' y='" << ly << "' font-size='11'>" << esc(s.name)
         << "</text>\n";
    }
  }
  save(path, os.str());
}

void write_heatmap(const std::string& path, const std::string& title, const std::string& x_label,
                   const std::string& y_label, const std::vector<double>& xs,
                   const std::vector<double>& ys, const std::vector<double>& values) {
  if (values.size() != xs.size() * ys.size())
    throw std::invalid_argument("heatmap: values size mismatch");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) {
    lo = 0;
    hi = 1;
  }
  if (hi - lo < 1e-12) hi = lo + 1;

  std::ostringstream os;
  os << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' font-size='16'>" << esc(title)
     << "</text>\n";
  os << "<text x='" << kL + kPW / 2 << "' y='" << kH - 14
     << "' text-anchor='middle' font-size='13'>" << esc(x_label) << "</text>\n";
  os << "<text x='20' y='" << kT + kPH / 2 << "' text-anchor='middle' font-size='13' "
     << "transform='rotate(-90 20 " << kT + kPH / 2 << ")'>" << esc(y_label) << "</text>\n";

  const double cw = kPW / (double)xs.size(), ch = kPH / (double)ys.size();
  for (std::size_t j = 0; j < ys.size(); ++j) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double v = values[j * xs.size() + i];
      const double x = kL + (double)i * cw;
      const double y = kT + kPH - (double)(j + 1) * ch;
      if (!std::isfinite(v)) {
        os << "<rect x='" << x << "' y='" << y << "' width='" << cw << "' height='" << ch
           << "' fill='#bbb' stroke='white'/>\n";
        continue;
      }
      const double t = (v - lo) / (hi - lo);
      const int rr = (int)(40 + 215 * t), gg = (int)(90 + 40 * (1 - t)), bb = (int)(220 * (1 - t) + 35);
      os << "<rect x='" << x << "' y='" << y << "' width='" << cw << "' height='" << ch
         << "' fill='rgb(" << rr << ',' << gg << ',' << bb << ")' stroke='white'/>\n";
      os << "<text x='" << x + cw / 2 << "' y='" << y + ch / 2 + 4
         << "' text-anchor='middle' font-size='12' fill='white'>" << num(v) << "</text>\n";
    }
  }
  for (std::size_t i = 0; i < xs.size(); ++i)
    os << "<text x='" << kL + ((double)i + 0.5) * cw << "' y='" << kT + kPH + 18
       << "' text-anchor='middle' font-size='11'>" << num(xs[i]) << "</text>\n";
  for (std::size_t j = 0; j < ys.size(); ++j)
    os << "<text x='" << kL - 8 << "' y='" << kT + kPH - ((double)j + 0.5) * ch + 4
       << "' text-anchor='end' font-size='11'>" << num(ys[j]) << "</text>\n";
  save(path, os.str());
}

}  // namespace dopf::harness::svg
