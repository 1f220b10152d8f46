#include "tbp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "tbp/io.hpp"
#include "tbp/rng.hpp"

namespace tbp {

Phase6 rhs(const Phase6& y, const MetricSample& m) {
  const double u = y[0];
  const double v = y[1];
  const double w = y[2];
  const Vec3& a = m.a;
  const double l2 = m.lambda * m.lambda;
  Phase6 phi;
  phi[0] = a[0] * (u * u - v * v - w * w - l2) + 2.0 * u * (a[1] * v + a[2] * w);
  phi[1] = a[1] * (v * v - w * w - u * u - l2) + 2.0 * v * (a[2] * w + a[0] * u);
  phi[2] = a[2] * (w * w - u * u - v * v - l2) + 2.0 * w * (a[0] * u + a[1] * v);
  phi[3] = u;
  phi[4] = v;
  phi[5] = w;
  return phi;
}

GeodesicFlow::GeodesicFlow(PotentialModel model, Mat3 unit, TripleId source)
    : model_(std::move(model)), unit_(std::move(unit)), source_(source) {}

TransformFrame GeodesicFlow::frame_at(const Vec3& rho) const {
  return scale_frame(unit_, metric_g(JacobiPoint::from(rho), model_).g, source_);
}

Phase6 GeodesicFlow::field(const Phase6& y, const Vec3& rho, const TransformFrame& frame, int stage) const {
  const MetricJet jet = metric_jet(JacobiPoint::from(rho), model_);
  if (!(jet.g > 0.0)) {
    throw ForbiddenRegion(fmt::format("metric g = {} is not positive at rho = ({}, {}, {})", jet.g, rho[0], rho[1],
                                      rho[2]),
                          jet.g, stage);
  }
  return rhs(y, a_coefficients(jet, frame, model_.inertia));
}

FlowPoint GeodesicFlow::start(const JacobiState& initial, const std::optional<Vec3>& time_origin) const {
  const TransformFrame frame = frame_at(initial.rho);
  const LocalState local = global_to_local_init(JacobiPoint::from(initial.rho), initial.rho_dot, frame);
  FlowPoint p;
  p.y = to_phase(local);
  p.jacobi = initial;
  p.g = frame.g;
  if (time_origin && *time_origin != initial.rho) {
    const Vec3 mid = 0.5 * (*time_origin + initial.rho);
    const double g_mid = metric_g(JacobiPoint::from(mid), model_).g;
    p.s_components = internal_time_components(initial.rho - *time_origin, g_mid, frame_at(*time_origin));
  }
  return p;
}

Phase6 GeodesicFlow::rk4_increment(const FlowPoint& p, const TransformFrame& base, double dt) const {
  const Vec3 x_base = p.y.tail<3>();
  const Vec3 rho_base = p.jacobi.rho;
  return tbp::rk4_increment(p.y, dt, [&](int stage, const Phase6& ys) {
    const Vec3 rho = stage == 1 ? rho_base : Vec3(rho_base + base.forward * (ys.tail<3>() - x_base));
    return field(ys, rho, base, stage);
  });
}

Phase6 GeodesicFlow::euler_increment(const FlowPoint& p, const TransformFrame& base, double dt) const {
  return dt * field(p.y, p.jacobi.rho, base, 1);
}

void GeodesicFlow::apply_increment(FlowPoint& p, const Phase6& dy, const TransformFrame& base) const {
  const Vec3 d_rho = local_to_global_step(dy.tail<3>(), base);
  const Vec3 rho_new = p.jacobi.rho + d_rho;
  const double g_mid = metric_g(JacobiPoint::from(p.jacobi.rho + 0.5 * d_rho), model_).g;
  if (!(g_mid > 0.0)) throw ForbiddenRegion(fmt::format("metric g = {} is not positive", g_mid), g_mid);
  p.s_components += internal_time_components(d_rho, g_mid, base);
  p.jacobi.rho_dot += local_to_global_step(dy.head<3>(), base);
  p.jacobi.rho = rho_new;
  p.y += dy;
  p.g = metric_g(JacobiPoint::from(rho_new), model_).g;
  if (!(p.g > 0.0)) throw ForbiddenRegion(fmt::format("metric g = {} is not positive", p.g), p.g);
}

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::ForbiddenRegion: return "forbidden_region";
    case Termination::Diverged: return "diverged";
  }
  return "completed";
}

void SimConfig::validate() const {
  model.validate();
  solver.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("integration.dt", "must be > 0");
  if (steps < 1) throw ValidationError("integration.steps", "must be >= 1");
  if (decimation < 1) throw ValidationError("integration.decimation", "must be >= 1");
  if (!initial.rho.allFinite() || !initial.rho_dot.allFinite())
    throw ValidationError("initial", "state must be finite");
}

namespace {

bool diverged(const FlowPoint& p) {
  const auto bad = [](const auto& v) { return !v.allFinite() || v.cwiseAbs().maxCoeff() > kDivergenceBound; };
  return bad(p.y) || bad(p.jacobi.rho) || bad(p.jacobi.rho_dot) || bad(p.s_components);
}

Trajectory integrate(const GeodesicFlow& flow, FlowPoint point, double dt, std::size_t steps, std::size_t decimation,
                     Scheme scheme) {
  Trajectory traj;
  traj.dt = dt;
  traj.decimation = decimation;
  traj.steps_requested = steps;
  traj.model = flow.model();
  traj.initial = point.jacobi;
  traj.scheme = scheme;
  traj.records.reserve(steps / decimation + 2);
  traj.records.push_back({0, 0.0, point});
  traj.max_pair_distance = max_pair_distance(JacobiPoint::from(point.jacobi.rho), flow.model());

  std::size_t step = 0;
  try {
    while (step < steps) {
      const TransformFrame base = flow.frame_at(point.jacobi.rho);
      const Phase6 dy = scheme == Scheme::Rk4 ? flow.rk4_increment(point, base, dt) : flow.euler_increment(point, base, dt);
      FlowPoint next = point;
      flow.apply_increment(next, dy, base);
      if (diverged(next)) {
        traj.termination = Termination::Diverged;
        traj.termination_detail = fmt::format("state left |.| <= {} at step {}", kDivergenceBound, step + 1);
        break;
      }
      point = next;
      ++step;
      traj.max_pair_distance =
          std::max(traj.max_pair_distance, max_pair_distance(JacobiPoint::from(point.jacobi.rho), flow.model()));
      if (step % decimation == 0 || step == steps) {
        traj.records.push_back({step, static_cast<double>(step) * dt, point});
      }
    }
  } catch (const ForbiddenRegion& e) {
    traj.termination = Termination::ForbiddenRegion;
    traj.termination_detail = e.stage() > 0 ? fmt::format("{} (step {}, stage {})", e.what(), step + 1, e.stage())
                                            : fmt::format("{} (step {})", e.what(), step + 1);
  }
  if (traj.records.back().step != step) traj.records.push_back({step, static_cast<double>(step) * dt, point});
  traj.steps_taken = step;
  return traj;
}

}  // namespace

Trajectory simulate(const SimConfig& cfg, const UnitFrame& unit) {
  cfg.validate();
  const GeodesicFlow flow(cfg.model, unit.coefficients, unit.triple);
  const FlowPoint start = flow.start(cfg.initial, cfg.time_origin);
  Trajectory traj = integrate(flow, start, cfg.dt, cfg.steps, cfg.decimation, cfg.scheme);
  traj.unit = unit;
  return traj;
}

Vec3 resolve_fixed(const SimConfig& cfg) {
  if (cfg.fixed) return *cfg.fixed;
  const auto& slots = cfg.triple.slots();
  const auto key = static_cast<std::uint64_t>((1 << slots[0]) | (1 << slots[1]) | (1 << slots[2]));
  auto rng = make_rng(derive_seed(cfg.solver.seed, kStreamFixed, key));
  return random_feasible_fixed(cfg.triple, rng);
}

Trajectory simulate(const SimConfig& cfg) {
  cfg.validate();
  return simulate(cfg, conjugate_direction_solve(cfg.triple, resolve_fixed(cfg), cfg.solver));
}

Trajectory reverse_run(const Trajectory& forward) {
  if (forward.termination != Termination::Completed)
    throw std::invalid_argument("reverse_run needs a trajectory that terminated normally");
  const GeodesicFlow flow(forward.model, forward.unit.coefficients, forward.unit.triple);
  FlowPoint p = forward.final_record().point;
  p.y.head<3>() = -p.y.head<3>();
  p.jacobi.rho_dot = -p.jacobi.rho_dot;
  p.s_components.setZero();
  if (forward.steps_taken == 0) {
    Trajectory t = forward;
    t.records = {{0, 0.0, p}};
    return t;
  }
  Trajectory traj = integrate(flow, p, forward.dt, forward.steps_taken, forward.decimation, forward.scheme);
  traj.unit = forward.unit;
  return traj;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string text = "step,t,x1,x2,x3,z1,z2,z3,rho1,rho2,rho3,rho1d,rho2d,rho3d,g,s\n";
  const auto f = [](double v) { return io::format_double(v); };
  for (const auto& r : traj.records) {
    const auto& p = r.point;
    text += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.step, f(r.t), f(p.y[3]), f(p.y[4]),
                        f(p.y[5]), f(p.y[0]), f(p.y[1]), f(p.y[2]), f(p.jacobi.rho[0]), f(p.jacobi.rho[1]),
                        f(p.jacobi.rho[2]), f(p.jacobi.rho_dot[0]), f(p.jacobi.rho_dot[1]), f(p.jacobi.rho_dot[2]),
                        f(p.g), f(p.s()));
  }
  return text;
}

}  // namespace tbp
