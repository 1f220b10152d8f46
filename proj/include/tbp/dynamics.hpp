#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tbp/errors.hpp"
#include "tbp/manifold.hpp"
#include "tbp/potential.hpp"
#include "tbp/transforms.hpp"

namespace tbp {

// Phase vector Y = (zeta1, zeta2, zeta3, x1, x2, x3).
using Phase6 = Vec6;

inline Phase6 to_phase(const LocalState& s) {
  Phase6 y;
  y << s.zeta, s.x;
  return y;
}
inline LocalState from_phase(const Phase6& y) { return {y.tail<3>(), y.head<3>()}; }

/// Right-hand side of the local equations of motion.
Phase6 rhs(const Phase6& y, const MetricSample& m);
inline Phase6 rhs(const LocalState& s, const MetricSample& m) { return rhs(to_phase(s), m); }

/// Classical fourth-order Runge-Kutta increment. `f(stage, y)` evaluates the
/// field with stage = 1..4.
template <class Y, class F>
Y rk4_increment(const Y& y, double dt, F&& f) {
  const Y k1 = dt * f(1, y);
  const Y k2 = dt * f(2, Y(y + 0.5 * k1));
  const Y k3 = dt * f(3, Y(y + 0.5 * k2));
  const Y k4 = dt * f(4, Y(y + k3));
  return (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
}

template <class Y, class F>
Y rk4_step(const Y& y, double dt, F&& f) {
  return y + rk4_increment(y, dt, f);
}

template <class F>
double rk4_step(double y, double dt, F&& f) {
  const double k1 = dt * f(1, y);
  const double k2 = dt * f(2, y + 0.5 * k1);
  const double k3 = dt * f(3, y + 0.5 * k2);
  const double k4 = dt * f(4, y + k3);
  return y + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
}

struct JacobiState {
  Vec3 rho = Vec3::Zero();
  Vec3 rho_dot = Vec3::Zero();

  bool operator==(const JacobiState&) const = default;
};

/// Complete phase point of a run: the local state, its Jacobi image, the
/// three internal-time integrals and g at the Jacobi point.
struct FlowPoint {
  Phase6 y = Phase6::Zero();
  JacobiState jacobi;
  Vec3 s_components = Vec3::Zero();
  double g = 0.0;

  double s() const { return s_components.sum(); }
};

/// Geodesic flow on one unit frame. The frame is rescaled with sqrt(g) at
/// the start of every step and held fixed through the step's stages.
class GeodesicFlow {
 public:
  GeodesicFlow(PotentialModel model, Mat3 unit, TripleId source = {});

  const PotentialModel& model() const { return model_; }
  const Mat3& unit() const { return unit_; }

  TransformFrame frame_at(const Vec3& rho) const;
  Phase6 field(const Phase6& y, const Vec3& rho, const TransformFrame& frame, int stage = -1) const;

  /// Synchronized start. The internal-time integrals run from `time_origin`
  /// (default: the start point itself).
  FlowPoint start(const JacobiState& initial, const std::optional<Vec3>& time_origin = std::nullopt) const;

  /// Frozen-frame increment dY over one step; stage points are located at
  /// rho_base + forward * (x_stage - x_base).
  Phase6 rk4_increment(const FlowPoint& p, const TransformFrame& base, double dt) const;
  Phase6 euler_increment(const FlowPoint& p, const TransformFrame& base, double dt) const;

  /// Applies dY to the point: Jacobi positions and velocities follow the
  /// frame-mapped increments and the internal time gains its midpoint
  /// contribution. Throws ForbiddenRegion if the new point is forbidden.
  void apply_increment(FlowPoint& p, const Phase6& dy, const TransformFrame& base) const;

 private:
  PotentialModel model_;
  Mat3 unit_;
  TripleId source_;
};

enum class Scheme { Rk4, Euler };

enum class Termination { Completed, ForbiddenRegion, Diverged };
std::string_view termination_name(Termination t);

inline constexpr double kDivergenceBound = 1e12;

struct StepRecord {
  std::size_t step = 0;
  double t = 0.0;
  FlowPoint point;
};

struct Trajectory {
  double dt = 0.0;
  std::size_t decimation = 1;
  std::size_t steps_requested = 0;
  std::size_t steps_taken = 0;
  Termination termination = Termination::Completed;
  std::string termination_detail;
  double max_pair_distance = 0.0;
  std::vector<StepRecord> records;  // every decimation-th step plus the last one
  UnitFrame unit;
  PotentialModel model;
  JacobiState initial;
  Scheme scheme = Scheme::Rk4;

  const StepRecord& final_record() const { return records.back(); }
};

struct SimConfig {
  PotentialModel model;
  TripleId triple;
  std::optional<Vec3> fixed;  // drawn from a feasible random frame when absent
  SolverConfig solver;
  double dt = 1e-4;
  std::size_t steps = 1000;
  std::size_t decimation = 100;
  JacobiState initial;
  std::optional<Vec3> time_origin;
  Scheme scheme = Scheme::Rk4;

  void validate() const;
};

/// Fixed values used for cfg.triple: cfg.fixed or a seeded feasible draw.
Vec3 resolve_fixed(const SimConfig& cfg);

/// Solves the unit frame for cfg.triple, then integrates.
Trajectory simulate(const SimConfig& cfg);
/// Integrates on a given unit frame. Throws ForbiddenRegion when the start
/// point is forbidden; later terminations are recorded in the result.
Trajectory simulate(const SimConfig& cfg, const UnitFrame& unit);

/// Restarts from the final state with zeta and the Jacobi velocities
/// reversed and integrates the same number of steps. Internal time restarts
/// at zero. Requires a completed forward run.
Trajectory reverse_run(const Trajectory& forward);

/// CSV with header `step,t,x1,x2,x3,z1,z2,z3,rho1,rho2,rho3,rho1d,rho2d,rho3d,g,s`.
std::string trajectory_csv(const Trajectory& traj);

}  // namespace tbp
