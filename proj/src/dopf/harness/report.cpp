#include "dopf/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dopf/admm/history_csv.hpp"
#include "dopf/harness/svg.hpp"

namespace dopf::harness {

namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("sweep csv: bad number '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error("sweep csv: bad count '" + s + "'");
  return v;
}

void plot_residual_traces(const SweepResult& r, const std::string& path) {
  // at most six traces, evenly spread over the rows
  std::vector<std::size_t> pick;
  const std::size_t n = r.rows.size();
  if (n <= 6) {
    for (std::size_t i = 0; i < n; ++i) pick.push_back(i);
  } else {
    for (int i = 0; i < 6; ++i) pick.push_back((std::size_t)(i * (double)(n - 1) / 5.0 + 0.5));
    pick.erase(std::unique(pick.begin(), pick.end()), pick.end());
  }
  std::vector<svg::Series> series;
  for (auto i : pick) {
    if (r.histories[i].empty()) continue;
    svg::Series s;
    s.name = r.rows[i].label;
    for (const auto& rec : r.histories[i]) {
      s.x.push_back(rec.k);
      s.y.push_back(rec.r_norm);
    }
    series.push_back(std::move(s));
  }
  if (series.empty()) return;
  svg::write_line_plot(path, "Primal residual by iteration", "iteration k", "||r||_2 (p.u.)",
                       series, false, true);
}

void plot_summary(const SweepResult& r, const fs::path& dir) {
  switch (r.kind) {
    case SweepKind::tolerance: {
      svg::Series s;
      s.name = "k";
      for (const auto& row : r.rows) {
        s.x.push_back(row.eps_abs);
        s.y.push_back(row.k);
      }
      svg::write_line_plot((dir / "plot-k-vs-tolerance.svg").string(),
                           "Iterations to convergence by tolerance", "eps_abs", "iterations k",
                           {s}, true, false);
      break;
    }
    case SweepKind::mix: {
      std::set<double> dset, pvset;
      for (const auto& row : r.rows) {
        dset.insert(row.alpha_d);
        pvset.insert(row.alpha_pv);
      }
      std::vector<double> xs(dset.begin(), dset.end()), ys(pvset.begin(), pvset.end());
      std::vector<double> vals(xs.size() * ys.size(),
                               std::numeric_limits<double>::quiet_NaN());
      for (const auto& row : r.rows) {
        const auto xi = (std::size_t)(std::find(xs.begin(), xs.end(), row.alpha_d) - xs.begin());
        const auto yi = (std::size_t)(std::find(ys.begin(), ys.end(), row.alpha_pv) - ys.begin());
        if (row.status == "converged") vals[yi * xs.size() + xi] = row.k;
      }
      svg::write_heatmap((dir / "plot-k-vs-mix.svg").string(),
                         "Iterations across demand/PV mixes", "alpha_d", "alpha_pv", xs, ys,
                         vals);
      break;
    }
    case SweepKind::size: {
      svg::Series a, b;
      a.name = "mean t_9a (ms)";
      b.name = "max single 9b solve (ms)";
      for (const auto& row : r.rows) {
        a.x.push_back(row.size);
        a.y.push_back(row.mean_t9a_ms);
        b.x.push_back(row.size);
        b.y.push_back(row.mean_t9b_solo_ms);
      }
      svg::write_line_plot((dir / "plot-k-vs-size.svg").string(),
                           "Per-iteration phase times by fleet size", "prosumers",
                           "milliseconds", {a, b}, false, false);
      break;
    }
  }
}

}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepHeader << '\n';
  for (const auto& r : rows) {
    os << r.label << ',' << fmt_double(r.eps_abs) << ',' << fmt_double(r.alpha_d) << ','
       << fmt_double(r.alpha_pv) << ',' << r.size << ',' << r.status << ',' << r.k << ','
       << fmt_double(r.r_norm) << ',' << fmt_double(r.s_norm) << ',' << fmt_double(r.eps_pri)
       << ',' << fmt_double(r.eps_dual) << ',' << fmt_double(r.objective) << ','
       << fmt_double(r.gap_percent) << ',' << fmt_double(r.r_max_w) << ','
       << fmt_double(r.r_mean_w) << ',' << fmt_double(r.mean_t9a_ms) << ','
       << fmt_double(r.mean_t9b_ms) << ',' << fmt_double(r.mean_t9c_ms) << ','
       << fmt_double(r.mean_t9b_solo_ms) << ',' << r.total_bytes_up << ',' << r.total_bytes_down
       << ',' << (r.flag_undervoltage ? 1 : 0) << ',' << (r.flag_overvoltage ? 1 : 0) << ','
       << (r.flag_feeder ? 1 : 0) << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("sweep csv: empty stream");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSweepHeader) throw std::runtime_error("sweep csv: unexpected header");

  std::vector<SweepRow> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (f.size() != 24)
      throw std::runtime_error("sweep csv: expected 24 fields, got " + std::to_string(f.size()));
    SweepRow r;
    int i = 0;
    r.label = f[i++];
    r.eps_abs = to_double(f[i++]);
    r.alpha_d = to_double(f[i++]);
    r.alpha_pv = to_double(f[i++]);
    r.size = (int)to_u64(f[i++]);
    r.status = f[i++];
    r.k = (int)to_u64(f[i++]);
    r.r_norm = to_double(f[i++]);
    r.s_norm = to_double(f[i++]);
    r.eps_pri = to_double(f[i++]);
    r.eps_dual = to_double(f[i++]);
    r.objective = to_double(f[i++]);
    r.gap_percent = to_double(f[i++]);
    r.r_max_w = to_double(f[i++]);
    r.r_mean_w = to_double(f[i++]);
    r.mean_t9a_ms = to_double(f[i++]);
    r.mean_t9b_ms = to_double(f[i++]);
    r.mean_t9c_ms = to_double(f[i++]);
    r.mean_t9b_solo_ms = to_double(f[i++]);
    r.total_bytes_up = to_u64(f[i++]);
    r.total_bytes_down = to_u64(f[i++]);
    r.flag_undervoltage = f[i++] == "1";
    r.flag_overvoltage = f[i++] == "1";
    r.flag_feeder = f[i++] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return read_sweep_csv(f);
}

void emit_report(const SweepResult& result, const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  {
    std::ofstream f(dir / "sweep.csv");
    if (!f) throw std::runtime_error("cannot write " + (dir / "sweep.csv").string());
    write_sweep_csv(f, result.rows);
    if (!f) throw std::runtime_error("write failed: " + (dir / "sweep.csv").string());
  }

  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (i >= result.histories.size() || result.histories[i].empty()) continue;
    admm::write_history_csv((dir / ("history-" + result.rows[i].label + ".csv")).string(),
                            result.histories[i]);
  }

  if (!result.rows.empty()) {
    plot_summary(result, dir);
    plot_residual_traces(result, (dir / "plot-residuals.svg").string());
  }
}

}  // namespace dopf::harness
