#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "tbp/errors.hpp"
#include "tbp/io.hpp"
#include "tbp/potential.hpp"

using namespace tbp;

namespace {

const JacobiPoint kEquilateral{std::sqrt(3.0) / 2.0, 1.0, M_PI / 2.0};

Vec3 numeric_gradient(const JacobiPoint& q, const PotentialModel& m) {
  Vec3 grad;
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    Vec3 up = q.vec(), dn = q.vec();
    up[i] += h;
    dn[i] -= h;
    grad[i] = (metric_g(JacobiPoint::from(up), m).g - metric_g(JacobiPoint::from(dn), m).g) / (2 * h);
  }
  return grad;
}

}  // namespace

TEST_CASE("morse pair energy at reference distances") {
  const MorseParams p;
  CHECK(morse_energy(6.0, p) == doctest::Approx(0.39957640089372803).epsilon(1e-14));
  CHECK(morse_energy(1.0, p) == doctest::Approx(0.08067043732464513).epsilon(1e-14));
  CHECK(morse_energy(2.0, p) == 0.0);
}

TEST_CASE("morse derivative matches central differences") {
  const MorseParams p{1.3, 0.7, 1.5};
  for (double r : {0.2, 1.0, 1.5, 3.0, 8.0}) {
    const double h = 1e-6;
    const double fd = (morse_energy(r + h, p) - morse_energy(r - h, p)) / (2 * h);
    CHECK(morse_derivative(r, p) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("equilateral start has unit pair distances and the expected metric") {
  const PotentialModel m;
  const auto d = pair_distances(kEquilateral, m);
  CHECK(d.r12 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d.r13 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d.r23 == 1.0);
  CHECK(total_potential(kEquilateral, m) == doctest::Approx(0.24201131197393538).epsilon(1e-13));
  CHECK(metric_g(kEquilateral, m).g == doctest::Approx(2.2579886880260647).epsilon(1e-13));
}

TEST_CASE("metric gradient matches finite differences off symmetric points") {
  PotentialModel m;
  m.masses = {1.0, 2.0, 3.0};
  m.pair13 = {0.8, 0.4, 1.7};
  for (const JacobiPoint q : {JacobiPoint{1.2, 0.9, 0.7}, JacobiPoint{2.5, 1.4, 2.9}, kEquilateral}) {
    const Vec3 fd = numeric_gradient(q, m);
    const Vec3 an = metric_gradient(q, m);
    CHECK((an - fd).norm() < 1e-8);
  }
}

TEST_CASE("metric jet agrees with separate evaluations") {
  const PotentialModel m;
  const JacobiPoint q{1.7, 0.6, 1.1};
  const MetricJet jet = metric_jet(q, m);
  CHECK(jet.g == metric_g(q, m).g);
  CHECK(jet.gradient == metric_gradient(q, m));
}

TEST_CASE("forbidden region far from the bound state") {
  const PotentialModel m;
  CHECK(metric_g({30.0, 30.0, 1.0}, m).forbidden());
  CHECK_FALSE(metric_g(kEquilateral, m).forbidden());
}

TEST_CASE("non-physical parameters are rejected") {
  PotentialModel m;
  m.masses[1] = 0.0;
  CHECK_THROWS_AS(m.validate(), ValidationError);
  m = PotentialModel{};
  m.u0 = 0.0;
  CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("energy surface file layout") {
  const GridSpec grid{0.5, 2.0, 4, 0.5, 1.5, 3};
  const PotentialModel m;
  const auto values = energy_surface(grid, 1.0, m);
  REQUIRE(values.size() == 12);
  CHECK(values[1 * 3 + 2] == metric_g({grid.rho1_at(1), grid.rho2_at(2), 1.0}, m).g);

  const auto path = std::filesystem::temp_directory_path() / "tbp_surface_test.txt";
  write_energy_surface(path, grid, 1.0, m);
  const std::string text = io::read_file(path);
  CHECK(text.rfind("# 0.5 2 4 0.5 1.5 3 1\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  std::filesystem::remove(path);

  CHECK_THROWS_AS((GridSpec{1.0, 1.0, 4, 0.0, 1.0, 2}.validate()), ValidationError);
}
