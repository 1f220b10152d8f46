#include "tbp/potential.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "tbp/errors.hpp"
#include "tbp/io.hpp"

namespace tbp {

double morse_energy(double r, const MorseParams& p) {
  const double y = 1.0 - std::exp(-p.stiffness * (r - p.equilibrium));
  return p.depth * y * y;
}

double morse_derivative(double r, const MorseParams& p) {
  const double e = std::exp(-p.stiffness * (r - p.equilibrium));
  return 2.0 * p.depth * p.stiffness * (1.0 - e) * e;
}

double PotentialModel::reduced_mass() const {
  const double total = masses[0] + masses[1] + masses[2];
  return std::sqrt(masses[0] * masses[1] * masses[2] / total);
}

namespace {

void check_pair(const MorseParams& p, const std::string& name) {
  if (!(p.depth > 0.0) || !std::isfinite(p.depth)) throw ValidationError(name + ".depth", "must be > 0");
  if (!(p.stiffness > 0.0) || !std::isfinite(p.stiffness)) throw ValidationError(name + ".stiffness", "must be > 0");
  if (!(p.equilibrium > 0.0) || !std::isfinite(p.equilibrium))
    throw ValidationError(name + ".equilibrium", "must be > 0");
}

}  // namespace

void PotentialModel::validate() const {
  check_pair(pair12, "pair12");
  check_pair(pair13, "pair13");
  check_pair(pair23, "pair23");
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i]))
      throw ValidationError("m" + std::to_string(i + 1), "must be > 0");
  }
  if (!std::isfinite(energy)) throw ValidationError("energy", "must be finite");
  if (!(u0 > 0.0) || !std::isfinite(u0)) throw ValidationError("u0", "must be > 0");
  if (!std::isfinite(inertia)) throw ValidationError("inertia", "must be finite");
}

PairDistances pair_distances(const JacobiPoint& q, const PotentialModel& model) {
  const double mm = model.mu_minus();
  const double mp = model.mu_plus();
  const double c = std::cos(q.theta);
  // Clamp tiny negative round-off; both radicands are |rho1 - mu rho2 e^{i theta}|^2.
  const double s12 = q.rho1 * q.rho1 + mm * mm * q.rho2 * q.rho2 - 2.0 * mm * q.rho1 * q.rho2 * c;
  const double s13 = q.rho1 * q.rho1 + mp * mp * q.rho2 * q.rho2 + 2.0 * mp * q.rho1 * q.rho2 * c;
  return {std::sqrt(std::max(s12, 0.0)), std::sqrt(std::max(s13, 0.0)), std::abs(q.rho2)};
}

double max_pair_distance(const JacobiPoint& q, const PotentialModel& model) {
  const auto d = pair_distances(q, model);
  return std::max({d.r12, d.r13, d.r23});
}

double total_potential(const JacobiPoint& q, const PotentialModel& model) {
  const auto d = pair_distances(q, model);
  return morse_energy(d.r12, model.pair12) + morse_energy(d.r13, model.pair13) + morse_energy(d.r23, model.pair23);
}

MetricValue metric_g(const JacobiPoint& q, const PotentialModel& model) {
  return {(model.energy - total_potential(q, model)) / model.u0};
}

MetricJet metric_jet(const JacobiPoint& q, const PotentialModel& model) {
  const double mm = model.mu_minus();
  const double mp = model.mu_plus();
  const double c = std::cos(q.theta);
  const double s = std::sin(q.theta);
  const auto d = pair_distances(q, model);

  Vec3 dr12 = Vec3::Zero();
  if (d.r12 > 0.0) {
    dr12 = Vec3(q.rho1 - mm * q.rho2 * c, mm * mm * q.rho2 - mm * q.rho1 * c, mm * q.rho1 * q.rho2 * s) / d.r12;
  }
  Vec3 dr13 = Vec3::Zero();
  if (d.r13 > 0.0) {
    dr13 = Vec3(q.rho1 + mp * q.rho2 * c, mp * mp * q.rho2 + mp * q.rho1 * c, -mp * q.rho1 * q.rho2 * s) / d.r13;
  }
  Vec3 dr23 = Vec3::Zero();
  if (q.rho2 != 0.0) dr23[1] = q.rho2 > 0.0 ? 1.0 : -1.0;

  const auto term = [](double r, const MorseParams& p, double& u, double& du) {
    const double e = std::exp(-p.stiffness * (r - p.equilibrium));
    const double y = 1.0 - e;
    u += p.depth * y * y;
    du = 2.0 * p.depth * p.stiffness * y * e;
  };
  double u = 0.0;
  double du12 = 0.0;
  double du13 = 0.0;
  double du23 = 0.0;
  term(d.r12, model.pair12, u, du12);
  term(d.r13, model.pair13, u, du13);
  term(d.r23, model.pair23, u, du23);

  MetricJet jet;
  jet.g = (model.energy - u) / model.u0;
  jet.gradient = -(du12 * dr12 + du13 * dr13 + du23 * dr23) / model.u0;
  return jet;
}

Vec3 metric_gradient(const JacobiPoint& q, const PotentialModel& model) { return metric_jet(q, model).gradient; }

void GridSpec::validate() const {
  if (n1 < 2) throw ValidationError("surface.n1", "need at least 2 points per axis");
  if (n2 < 2) throw ValidationError("surface.n2", "need at least 2 points per axis");
  for (double v : {rho1_min, rho1_max, rho2_min, rho2_max}) {
    if (!std::isfinite(v)) throw ValidationError("surface", "grid bounds must be finite");
  }
  if (!(rho1_max > rho1_min)) throw ValidationError("surface.rho1_max", "must exceed rho1_min");
  if (!(rho2_max > rho2_min)) throw ValidationError("surface.rho2_max", "must exceed rho2_min");
}

double GridSpec::rho1_at(std::size_t i) const {
  return rho1_min + (rho1_max - rho1_min) * static_cast<double>(i) / static_cast<double>(n1 - 1);
}

double GridSpec::rho2_at(std::size_t j) const {
  return rho2_min + (rho2_max - rho2_min) * static_cast<double>(j) / static_cast<double>(n2 - 1);
}

std::vector<double> energy_surface(const GridSpec& grid, double theta, const PotentialModel& model) {
  grid.validate();
  std::vector<double> values;
  values.reserve(grid.n1 * grid.n2);
  for (std::size_t i = 0; i < grid.n1; ++i) {
    for (std::size_t j = 0; j < grid.n2; ++j) {
      values.push_back(metric_g({grid.rho1_at(i), grid.rho2_at(j), theta}, model).g);
    }
  }
  return values;
}

void write_energy_surface(const std::filesystem::path& path, const GridSpec& grid, double theta,
                          const PotentialModel& model) {
  const auto values = energy_surface(grid, theta, model);
  std::string text = fmt::format("# {} {} {} {} {} {} {}\n", io::format_double(grid.rho1_min),
                                 io::format_double(grid.rho1_max), grid.n1, io::format_double(grid.rho2_min),
                                 io::format_double(grid.rho2_max), grid.n2, io::format_double(theta));
  for (std::size_t i = 0; i < grid.n1; ++i) {
    for (std::size_t j = 0; j < grid.n2; ++j) {
      if (j) text += ' ';
      text += io::format_double(values[i * grid.n2 + j]);
    }
    text += '\n';
  }
  io::write_file_atomic(path, text);
}

}  // namespace tbp
