#include "tbp/transforms.hpp"

#include <cmath>

#include <fmt/format.h>

namespace tbp {

namespace {

void require_allowed(double g) {
  if (!(g > 0.0)) throw ForbiddenRegion(fmt::format("metric g = {} is not positive", g), g);
}

}  // namespace

TransformFrame scale_frame(const Mat3& unit, double g, const TripleId& source) {
  require_allowed(g);
  TransformFrame f;
  f.g = g;
  f.source = source;
  f.forward = std::sqrt(g) * unit;

  const Mat3& m = f.forward;
  const double a1 = m(0, 0), a2 = m(0, 1), a3 = m(0, 2);
  const double b1 = m(1, 0), b2 = m(1, 1), b3 = m(1, 2);
  const double l1 = m(2, 0), l2 = m(2, 1), l3 = m(2, 2);
  const double det = a1 * b2 * l3 + a2 * b3 * l1 + a3 * b1 * l2 - a1 * b3 * l2 - a2 * b1 * l3 - a3 * b2 * l1;
  if (!(std::abs(det) >= kSingularDeterminant) || !std::isfinite(det)) {
    throw SingularFrame(fmt::format("transform frame determinant {} is singular", det));
  }
  const double A = 1.0 / det;
  f.det_reciprocal = A;

  // Column i of the inverse holds the breve coefficients of group i.
  Mat3& inv = f.inverse;
  inv(0, 0) = (b2 * l3 - b3 * l2) * A;
  inv(1, 0) = (b3 * l1 - b1 * l3) * A;
  inv(2, 0) = (b1 * l2 - b2 * l1) * A;
  inv(0, 1) = (a3 * l2 - a2 * l3) * A;
  inv(1, 1) = (a1 * l3 - a3 * l1) * A;
  inv(2, 1) = (a2 * l1 - a1 * l2) * A;
  inv(0, 2) = (a2 * b3 - a3 * b2) * A;
  inv(1, 2) = (a3 * b1 - a1 * b3) * A;
  inv(2, 2) = (a1 * b2 - a2 * b1) * A;
  return f;
}

TransformFrame scale_frame(const UnitFrame& unit, double g) { return scale_frame(unit.coefficients, g, unit.triple); }

MetricSample a_coefficients(const MetricJet& jet, const TransformFrame& frame, double inertia) {
  require_allowed(jet.g);
  MetricSample m;
  m.g = jet.g;
  m.a = -(0.5 / jet.g) * (frame.forward.transpose() * jet.gradient);
  m.lambda = inertia / jet.g;
  return m;
}

MetricSample a_coefficients(const JacobiPoint& q, const TransformFrame& frame, const PotentialModel& model) {
  return a_coefficients(metric_jet(q, model), frame, model.inertia);
}

LocalState global_to_local_init(const JacobiPoint& q0, const Vec3& v0, const TransformFrame& frame) {
  return {frame.inverse * q0.vec(), frame.inverse * v0};
}

Vec3 internal_time_components(const Vec3& d_rho, double g_mid, const TransformFrame& frame) {
  require_allowed(g_mid);
  return std::sqrt(g_mid) * frame.breve_sums().cwiseProduct(d_rho);
}

double internal_time_increment(const Vec3& d_rho, double g_mid, const TransformFrame& frame) {
  return internal_time_components(d_rho, g_mid, frame).sum();
}

}  // namespace tbp
