#include "tbp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "tbp/io.hpp"

namespace tbp {

LyapunovSeries lyapunov_series(const std::vector<double>& t, const std::vector<double>& separation, double sep0) {
  if (t.size() != separation.size()) throw std::invalid_argument("time and separation series differ in length");
  if (!(sep0 > 0.0)) throw DegenerateSeparation("initial separation is zero");
  LyapunovSeries out;
  out.initial_separation = sep0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0)) continue;
    out.t.push_back(t[i]);
    out.eps.push_back(std::log(separation[i] / sep0) / t[i]);
  }
  return out;
}

LyapunovSeries lyapunov_series(const Trajectory& a, const Trajectory& b) {
  if (a.dt != b.dt || a.decimation != b.decimation)
    throw GridMismatch(fmt::format("trajectories use different grids (dt {} vs {}, decimation {} vs {})", a.dt, b.dt,
                                   a.decimation, b.decimation));
  std::vector<double> t;
  std::vector<double> sep;
  const std::size_t n = std::min(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < n && a.records[i].step == b.records[i].step; ++i) {
    t.push_back(a.records[i].t);
    sep.push_back((a.records[i].point.s_components - b.records[i].point.s_components).norm());
  }
  if (sep.empty()) throw GridMismatch("trajectories share no grid points");

  double sep0 = sep.front();
  bool phase = false;
  if (!(sep0 > 0.0)) {
    const auto& ja = a.records.front().point.jacobi;
    const auto& jb = b.records.front().point.jacobi;
    Vec6 d;
    d << ja.rho - jb.rho, ja.rho_dot - jb.rho_dot;
    sep0 = d.norm();
    phase = true;
  }
  if (!(sep0 > 0.0)) throw DegenerateSeparation("the two runs start from the same phase point");
  LyapunovSeries out = lyapunov_series(t, sep, sep0);
  out.phase_space_reference = phase;
  return out;
}

double lyapunov_limit(const LyapunovSeries& series, double tail_fraction) {
  if (series.eps.size() < kMinLyapunovSamples)
    throw TooShort(fmt::format("Lyapunov series has {} samples, need at least {}", series.eps.size(),
                               kMinLyapunovSamples));
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw std::invalid_argument("tail fraction must lie in (0, 1]");
  const std::size_t n = series.eps.size();
  const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n))));
  double sum = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = n - window; i < n; ++i) {
    sum += series.eps[i];
    best = std::max(best, sum / static_cast<double>(i - (n - window) + 1));
  }
  return best;
}

DimensionSeries fractal_dimension_series(const std::vector<double>& t, const std::vector<double>& s) {
  if (t.size() != s.size()) throw std::invalid_argument("time and internal-time series differ in length");
  DimensionSeries out;
  double integral = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(s[i]) || !std::isfinite(t[i])) throw std::invalid_argument("series must be finite");
    if (i > 0) {
      if (!(t[i] > t[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
      integral += 0.5 * (s[i] + s[i - 1]) * (t[i] - t[i - 1]);
    }
    if (!(t[i] > 1.0)) continue;
    const double mean = std::abs(integral) / t[i];
    if (!(mean >= kLogDomainFloor)) {
      ++out.gaps;
      continue;
    }
    out.t.push_back(t[i]);
    out.d.push_back(std::log(mean) / std::log(t[i]));
  }
  return out;
}

DimensionSeries fractal_dimension_series(const Trajectory& traj) {
  std::vector<double> t;
  std::vector<double> s;
  for (const auto& r : traj.records) {
    t.push_back(r.t);
    s.push_back(r.point.s());
  }
  return fractal_dimension_series(t, s);
}

double tail_variation(const DimensionSeries& series, double tail_fraction) {
  if (series.d.empty()) throw TooShort("dimension series is empty");
  const std::size_t n = series.d.size();
  const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n))));
  const auto [lo, hi] = std::minmax_element(series.d.end() - static_cast<std::ptrdiff_t>(window), series.d.end());
  return *hi - *lo;
}

std::string lyapunov_csv(const LyapunovSeries& series) {
  std::string text = "t,eps\n";
  for (std::size_t i = 0; i < series.t.size(); ++i)
    text += io::format_double(series.t[i]) + "," + io::format_double(series.eps[i]) + "\n";
  return text;
}

std::string dimension_csv(const DimensionSeries& series) {
  std::string text = "t,D\n";
  for (std::size_t i = 0; i < series.t.size(); ++i)
    text += io::format_double(series.t[i]) + "," + io::format_double(series.d[i]) + "\n";
  return text;
}

}  // namespace tbp
