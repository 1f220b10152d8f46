#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "tbp/linalg.hpp"

namespace tbp {

/// Morse pair potential U(r) = depth * (1 - exp(-stiffness * (r - equilibrium)))^2.
struct MorseParams {
  double depth = 1.0;
  double stiffness = 0.25;
  double equilibrium = 2.0;

  bool operator==(const MorseParams&) const = default;
};

double morse_energy(double r, const MorseParams& p);
/// dU/dr.
double morse_derivative(double r, const MorseParams& p);

/// Jacobi coordinates of the three-body configuration: rho1 is the distance
/// of body 1 from the centre of mass of (2,3), rho2 the (2,3) separation and
/// theta the angle between them. theta is never reduced mod 2*pi.
struct JacobiPoint {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double theta = 0.0;

  Vec3 vec() const { return {rho1, rho2, theta}; }
  static JacobiPoint from(const Vec3& v) { return {v[0], v[1], v[2]}; }
};

/// Pair parameters, masses and the energetic constants that define the
/// conformal metric g = (E - U)/U0.
struct PotentialModel {
  MorseParams pair12;
  MorseParams pair13;
  MorseParams pair23;
  std::array<double, 3> masses{1.0, 1.0, 1.0};
  double energy = 2.5;
  double u0 = 1.0;       // normalisation, held constant
  double inertia = 0.3;  // J

  double mu_minus() const { return masses[2] / (masses[1] + masses[2]); }
  double mu_plus() const { return masses[1] / (masses[1] + masses[2]); }
  double reduced_mass() const;

  /// Throws ValidationError on a non-physical parameter.
  void validate() const;
};

struct PairDistances {
  double r12 = 0.0;
  double r13 = 0.0;
  double r23 = 0.0;
};

PairDistances pair_distances(const JacobiPoint& q, const PotentialModel& model);
double max_pair_distance(const JacobiPoint& q, const PotentialModel& model);

double total_potential(const JacobiPoint& q, const PotentialModel& model);

/// Value of the metric function. A non-positive value marks the classically
/// forbidden region; it is reported, not thrown.
struct MetricValue {
  double g = 0.0;
  bool forbidden() const { return !(g > 0.0); }
};

MetricValue metric_g(const JacobiPoint& q, const PotentialModel& model);

/// Analytic gradient of g with respect to (rho1, rho2, theta). The gradient
/// of a pair distance that is exactly zero is taken as zero.
Vec3 metric_gradient(const JacobiPoint& q, const PotentialModel& model);

/// g and its gradient from one pass over the pair terms.
struct MetricJet {
  double g = 0.0;
  Vec3 gradient = Vec3::Zero();
};
MetricJet metric_jet(const JacobiPoint& q, const PotentialModel& model);

struct GridSpec {
  double rho1_min = 0.0;
  double rho1_max = 1.0;
  std::size_t n1 = 2;
  double rho2_min = 0.0;
  double rho2_max = 1.0;
  std::size_t n2 = 2;

  void validate() const;
  double rho1_at(std::size_t i) const;
  double rho2_at(std::size_t j) const;
};

/// Row-major g values, row index over rho1 and column index over rho2.
std::vector<double> energy_surface(const GridSpec& grid, double theta, const PotentialModel& model);

/// Writes the grid file: a `# rho1_min rho1_max n1 rho2_min rho2_max n2 theta`
/// header, then n1 lines of n2 values.
void write_energy_surface(const std::filesystem::path& path, const GridSpec& grid, double theta,
                          const PotentialModel& model);

}  // namespace tbp
