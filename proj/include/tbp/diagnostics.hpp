#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tbp/dynamics.hpp"
#include "tbp/errors.hpp"

namespace tbp {

struct LyapunovSeries {
  std::vector<double> t;
  std::vector<double> eps;
  double initial_separation = 0.0;
  /// True when the internal-time separation vanished at t = 0 and the
  /// Jacobi phase-space distance of the two starts was used instead.
  bool phase_space_reference = false;
};

/// eps(t) = (1/t) ln(|ds(t)| / |ds(0)|), ds the difference of the two runs'
/// internal-time component integrals, on the common step grid, t > 0.
/// Throws GridMismatch when dt or decimation differ, DegenerateSeparation
/// when the runs start from the same phase point.
LyapunovSeries lyapunov_series(const Trajectory& a, const Trajectory& b);

/// Same from separations sampled on a grid; sep0 is the separation at t = 0.
LyapunovSeries lyapunov_series(const std::vector<double>& t, const std::vector<double>& separation, double sep0);

inline constexpr std::size_t kMinLyapunovSamples = 50;

/// Largest running mean of eps over the final `tail_fraction` of the samples,
/// the running mean taken from the start of that window. Throws TooShort
/// below 50 samples.
double lyapunov_limit(const LyapunovSeries& series, double tail_fraction = 0.2);

struct DimensionSeries {
  std::vector<double> t;
  std::vector<double> d;
  std::size_t gaps = 0;  // grid points t > 1 where the log was undefined
};

inline constexpr double kLogDomainFloor = 1e-300;

/// D(t) = ln(|int_0^t s dt'| / t) / ln t for grid points t > 1, the integral
/// by the trapezoid rule from the first grid point.
DimensionSeries fractal_dimension_series(const std::vector<double>& t, const std::vector<double>& s);
DimensionSeries fractal_dimension_series(const Trajectory& traj);

/// max - min of D over the final `tail_fraction` of the series.
double tail_variation(const DimensionSeries& series, double tail_fraction = 0.2);

std::string lyapunov_csv(const LyapunovSeries& series);  // t,eps
std::string dimension_csv(const DimensionSeries& series);  // t,D

}  // namespace tbp
