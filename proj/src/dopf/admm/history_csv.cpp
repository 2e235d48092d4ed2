#include "dopf/admm/history_csv.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dopf::admm {

namespace {

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
  if (pos != s.size()) throw std::runtime_error("history csv: bad number '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error("history csv: bad count '" + s + "'");
  return v;
}

}  // namespace

void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& hist) {
  os << kHistoryHeader << '\n';
  for (const auto& r : hist) {
    os << r.k << ',' << fmt_double(r.r_norm) << ',' << fmt_double(r.s_norm) << ','
       << fmt_double(r.eps_pri) << ',' << fmt_double(r.eps_dual) << ',' << fmt_double(r.rho)
       << ',' << fmt_double(r.objective) << ',' << fmt_double(r.t_9a_ms) << ','
       << fmt_double(r.t_9b_ms) << ',' << fmt_double(r.t_9c_ms) << ',' << r.bytes_up << ','
       << r.bytes_down << '\n';
  }
}

void write_history_csv(const std::string& path, const std::vector<IterationRecord>& hist) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_history_csv(f, hist);
}

std::vector<IterationRecord> read_history_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("history csv: empty stream");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHistoryHeader)
    throw std::runtime_error("history csv: unexpected header '" + line + "'");

  std::vector<IterationRecord> out;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (f.size() != 12)
      throw std::runtime_error("history csv: expected 12 fields, got " +
                               std::to_string(f.size()));
    IterationRecord r;
    r.k = (int)to_u64(f[0]);
    r.r_norm = to_double(f[1]);
    r.s_norm = to_double(f[2]);
    r.eps_pri = to_double(f[3]);
    r.eps_dual = to_double(f[4]);
    r.rho = to_double(f[5]);
    r.objective = to_double(f[6]);
    r.t_9a_ms = to_double(f[7]);
    r.t_9b_ms = to_double(f[8]);
    r.t_9c_ms = to_double(f[9]);
    r.bytes_up = to_u64(f[10]);
    r.bytes_down = to_u64(f[11]);
    out.push_back(r);
  }
  return out;
}

std::vector<IterationRecord> read_history_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return read_history_csv(f);
}

}  // namespace dopf::admm
