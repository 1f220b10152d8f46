#include <doctest.h>

#include <cmath>

#include "tbp/config.hpp"
#include "tbp/dynamics.hpp"

using namespace tbp;

namespace {

double decay_error(int n) {
  const double dt = 1.0 / n;
  double y = 1.0;
  for (int i = 0; i < n; ++i) y = rk4_step(y, dt, [](int, double v) { return -v; });
  return std::abs(y - std::exp(-1.0));
}

SimConfig row1(std::size_t steps) {
  RunConfig cfg;
  cfg.integration.steps = steps;
  cfg.integration.decimation = 10;
  return cfg.sim();
}

}  // namespace

TEST_CASE("one rk4 step of exponential decay") {
  CHECK(rk4_step(1.0, 0.1, [](int, double v) { return -v; }) == doctest::Approx(0.9048375).epsilon(1e-15));
  Vec3 y(1.0, 2.0, 3.0);
  const Vec3 next = rk4_step(y, 0.1, [](int, const Vec3& v) -> Vec3 { return -v; });
  CHECK((next - 0.9048375 * y).norm() < 1e-15);
}

TEST_CASE("rk4 global error is fourth order") {
  for (int n : {10, 20, 40}) {
    const double ratio = decay_error(n) / decay_error(2 * n);
    CHECK(ratio >= 14.0);
    CHECK(ratio <= 18.0);
  }
}

TEST_CASE("rhs of the local equations at rest") {
  MetricSample m;
  m.g = 2.0;
  m.a = Vec3(0.1, -0.2, 0.3);
  m.lambda = 0.15;
  Phase6 y = Phase6::Zero();
  const Phase6 f = rhs(y, m);
  CHECK(f.tail<3>().norm() == 0.0);
}

TEST_CASE("records follow decimation and include the last step") {
  SimConfig cfg = row1(95);
  const Trajectory t = simulate(cfg);
  REQUIRE(t.termination == Termination::Completed);
  REQUIRE(t.records.size() == 11);
  CHECK(t.records.front().step == 0);
  CHECK(t.records[3].step == 30);
  CHECK(t.records.back().step == 95);
  CHECK(t.records.back().t == doctest::Approx(95 * cfg.dt));
  const std::string csv = trajectory_csv(t);
  CHECK(csv.rfind("step,t,x1,x2,x3,z1,z2,z3,rho1,rho2,rho3,rho1d,rho2d,rho3d,g,s\n", 0) == 0);
}

TEST_CASE("start point reproduces the requested Jacobi state") {
  const Trajectory t = simulate(row1(10));
  const auto& p = t.records.front().point;
  CHECK((p.jacobi.rho - Vec3(std::sqrt(3.0) / 2.0, 1.0, M_PI / 2.0)).norm() < 1e-15);
  CHECK(p.g == doctest::Approx(2.2579886880260647).epsilon(1e-13));
  CHECK(p.s() == 0.0);
}

TEST_CASE("reversing the flow returns to the start") {
  const Trajectory fwd = simulate(row1(1000));
  REQUIRE(fwd.termination == Termination::Completed);
  const Trajectory back = reverse_run(fwd);
  REQUIRE(back.termination == Termination::Completed);
  const auto& a = fwd.records.front().point;
  const auto& b = back.final_record().point;
  const Vec3 dx = b.y.tail<3>() - a.y.tail<3>();
  const Vec3 dz = b.y.head<3>() + a.y.head<3>();
  CHECK(dx.norm() / a.y.tail<3>().norm() < 1e-6);
  CHECK(dz.norm() / a.y.head<3>().norm() < 1e-6);
}

TEST_CASE("reverse_run needs a completed run") {
  SimConfig cfg = row1(10);
  Trajectory t = simulate(cfg);
  t.termination = Termination::ForbiddenRegion;
  CHECK_THROWS_AS(reverse_run(t), std::invalid_argument);
}

TEST_CASE("a forbidden start throws") {
  SimConfig cfg = row1(10);
  cfg.initial.rho = Vec3(30.0, 30.0, 1.0);
  CHECK_THROWS_AS(simulate(cfg), ForbiddenRegion);
}

TEST_CASE("invalid integration settings") {
  SimConfig cfg = row1(10);
  cfg.dt = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = row1(10);
  cfg.decimation = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("a step into the forbidden region is refused") {
  const SimConfig cfg = row1(10);
  const Trajectory t = simulate(cfg);
  const GeodesicFlow flow(cfg.model, t.unit.coefficients, t.unit.triple);
  FlowPoint p = flow.start(cfg.initial);
  const TransformFrame base = flow.frame_at(p.jacobi.rho);
  Phase6 dy = Phase6::Zero();
  dy.tail<3>() = base.inverse * Vec3(30.0, 30.0, 0.0);
  CHECK_THROWS_AS(flow.apply_increment(p, dy, base), ForbiddenRegion);
}

TEST_CASE("equilateral configuration at the pair minimum stays at rest") {
  SimConfig cfg = row1(100);
  cfg.model.inertia = 0.0;
  cfg.initial.rho = Vec3(std::sqrt(3.0), 2.0, M_PI / 2.0);
  cfg.initial.rho_dot = Vec3::Zero();
  const Trajectory t = simulate(cfg);
  REQUIRE(t.termination == Termination::Completed);
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    CHECK((t.records[i].point.y - t.records[i - 1].point.y).norm() <= 1e-10);
  }
}
