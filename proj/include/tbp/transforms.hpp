#pragma once

#include "tbp/linalg.hpp"
#include "tbp/manifold.hpp"
#include "tbp/potential.hpp"

namespace tbp {

/// Scaled transform between local coordinates x and Jacobi coordinates rho:
/// d rho = forward * dx and dx = inverse * d rho. Rows of `forward` are
/// (alpha | beta | lambda).
struct TransformFrame {
  Mat3 forward = Mat3::Identity();
  Mat3 inverse = Mat3::Identity();  // breve coefficients
  double det_reciprocal = 1.0;      // A = 1 / det(forward)
  double g = 1.0;                   // metric value the frame was scaled with
  TripleId source;

  /// (alpha, beta, lambda) of the internal-time integrals: sums of the breve
  /// coefficients of each group.
  Vec3 breve_sums() const { return inverse.colwise().sum().transpose(); }
};

inline constexpr double kSingularDeterminant = 1e-12;

/// forward = sqrt(g) * unit; inverse from the cofactor formulas.
/// Throws ForbiddenRegion when g <= 0 and SingularFrame when |det| < 1e-12.
TransformFrame scale_frame(const Mat3& unit, double g, const TripleId& source = {});
TransformFrame scale_frame(const UnitFrame& unit, double g);

struct MetricSample {
  double g = 0.0;
  Vec3 a = Vec3::Zero();  // a_i = -d ln sqrt(g) / dx^i
  double lambda = 0.0;    // J / g
};

/// a = -(1/(2g)) * forward^T * grad g, evaluated at q. Throws ForbiddenRegion.
MetricSample a_coefficients(const JacobiPoint& q, const TransformFrame& frame, const PotentialModel& model);
/// Same, from a precomputed metric value and gradient.
MetricSample a_coefficients(const MetricJet& jet, const TransformFrame& frame, double inertia);

/// Jacobi increments from local increments (positions or velocities alike).
inline Vec3 local_to_global_step(const Vec3& dx, const TransformFrame& frame) { return frame.forward * dx; }

struct LocalState {
  Vec3 x = Vec3::Zero();
  Vec3 zeta = Vec3::Zero();  // dx/ds
};

/// Initial local state from a Jacobi point and Jacobi velocities, through
/// the inverse coefficients.
LocalState global_to_local_init(const JacobiPoint& q0, const Vec3& v0, const TransformFrame& frame);

/// Contributions of a Jacobi step to the three internal-time integrals, with
/// sqrt(g) taken at the step midpoint: sqrt(g_mid) * (alpha, beta, lambda) * d rho
/// componentwise. Throws ForbiddenRegion when g_mid <= 0.
Vec3 internal_time_components(const Vec3& d_rho, double g_mid, const TransformFrame& frame);
double internal_time_increment(const Vec3& d_rho, double g_mid, const TransformFrame& frame);

}  // namespace tbp
