#include <doctest.h>

#include <cmath>

#include <Eigen/LU>

#include "tbp/manifold.hpp"
#include "tbp/rng.hpp"

using namespace tbp;

namespace {

double orthonormality_defect(const Mat3& u) { return (u.transpose() * u - Mat3::Identity()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("triple labels and parsing") {
  CHECK(TripleId::parse("A1").slot_list() == "a1,a2,a3");
  CHECK(TripleId::parse("B1").slot_list() == "a1,b2,l3");
  CHECK(TripleId::parse("a1,b2,l3").label() == "B1");
  CHECK(TripleId::parse("l3, a1 ,b2") == TripleId::parse("B1"));
  CHECK(TripleId::parse("b1,l2,b3").label().empty());
  CHECK(TripleId::parse("b1,l2,b3").display_name() == "b1,l2,b3");
  CHECK_THROWS_AS(TripleId::parse("A7"), std::invalid_argument);
  CHECK_THROWS_AS(TripleId::parse("a1,a1,a2"), std::invalid_argument);
  CHECK_THROWS_AS(TripleId::parse("a1,a2"), std::invalid_argument);
}

TEST_CASE("all 84 triples are distinct and families have six members") {
  const auto all = enumerate_triples();
  CHECK(all.size() == 84);
  int a = 0, b = 0;
  for (const auto& t : all) {
    a += t.family() == Family::A;
    b += t.family() == Family::B;
  }
  CHECK(a == 6);
  CHECK(b == 6);
  CHECK(family_member(Family::B, 6).label() == "B6");
}

TEST_CASE("assemble and unknowns_of are inverse") {
  const TripleId t = TripleId::parse("B3");
  Vec6 x;
  x << 0.1, -0.2, 0.3, -0.4, 0.5, -0.6;
  const Vec3 fixed(0.7, -0.8, 0.9);
  const Mat3 u = assemble(x, t, fixed);
  CHECK(unknowns_of(u, t) == x);
  CHECK(fixed_of(u, t) == fixed);
}

TEST_CASE("residual jacobian matches finite differences") {
  const TripleId t = TripleId::parse("A4");
  Vec6 x;
  x << 0.3, -0.5, 0.2, 0.6, -0.1, 0.4;
  const Vec3 fixed(0.5, 0.4, -0.3);
  const Mat6 j = residual_jacobian(x, t, fixed);
  for (int k = 0; k < 6; ++k) {
    Vec6 up = x, dn = x;
    up[k] += 1e-6;
    dn[k] -= 1e-6;
    const Vec6 fd = (residuals(up, t, fixed) - residuals(dn, t, fixed)) / 2e-6;
    CHECK((j.col(k) - fd).norm() < 1e-8);
  }
  const Vec6 g = objective_gradient(x, t, fixed);
  CHECK((g - 2.0 * j.transpose() * residuals(x, t, fixed)).norm() < 1e-14);
}

TEST_CASE("solve meets the residual contract on both families") {
  SolverConfig cfg;
  for (const char* name : {"A1", "A5", "B1", "B4"}) {
    const TripleId t = TripleId::parse(name);
    auto rng = make_rng(derive_seed(11, kStreamFixed));
    const Vec3 fixed = random_feasible_fixed(t, rng);
    const UnitFrame u = conjugate_direction_solve(t, fixed, cfg);
    CHECK(meets_residual_contract(u.residuals));
    CHECK(orthonormality_defect(u.coefficients) < 1e-7);
    CHECK(std::abs(std::abs(u.coefficients.determinant()) - 1.0) < 1e-7);
    CHECK((u.fixed - fixed).cwiseAbs().maxCoeff() <= cfg.max_fixed_shift);
  }
}

TEST_CASE("infeasible fixed values are reported") {
  SolverConfig cfg;
  CHECK_THROWS_AS(conjugate_direction_solve(TripleId::parse("A1"), Vec3(0.9, 0.9, 0.9), cfg), DegenerateFixedTriple);
  CHECK_THROWS_AS(conjugate_direction_solve(TripleId::parse("A4"), Vec3(0.8, 0.7, 0.1), cfg), DegenerateFixedTriple);
  CHECK_THROWS_AS(conjugate_direction_solve(TripleId::parse("A1"), Vec3(1.5, 0.0, 0.0), cfg), std::invalid_argument);
}

TEST_CASE("solver configuration is validated") {
  SolverConfig cfg;
  cfg.eps_inner = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = SolverConfig{};
  cfg.max_restarts = -1;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("seeded samples are reproducible and independent of n") {
  SolverConfig cfg;
  const TripleId t = TripleId::parse("B2");
  const auto a = sample_manifold(t, 12, cfg, 5);
  const auto b = sample_manifold(t, 6, cfg, 5);
  CHECK(point_cloud_csv(a) == point_cloud_csv(a));
  for (std::size_t i = 0; i < b.size(); ++i) {
    REQUIRE(a[i].frame);
    REQUIRE(b[i].frame);
    CHECK(a[i].frame->coefficients == b[i].frame->coefficients);
  }
  const std::string csv = point_cloud_csv(a);
  CHECK(csv.rfind("fixed1,fixed2,fixed3,v1,v2,v3,v4,v5,v6,res_inf,iters\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
}

TEST_CASE("companions of A1 and B1") {
  const auto a = complete_member(TripleId::parse("A1"));
  CHECK(a[1].slot_list() == "b1,l2,b3");
  CHECK(a[2].slot_list() == "l1,b2,l3");
  CHECK_THROWS_AS(complete_member(TripleId::parse("A2")), std::invalid_argument);
}

TEST_CASE("a fixed row off the unit sphere has no orthogonal completion") {
  SolverConfig cfg;
  const TripleId a1 = TripleId::parse("A1");
  CHECK_THROWS_AS(conjugate_direction_solve(a1, Vec3(0.3, -0.2, 0.5), cfg), DegenerateFixedTriple);
  CHECK_THROWS_AS(conjugate_direction_solve(a1, Vec3(0.999999, 0.999999, 0.0), cfg), DegenerateFixedTriple);
  CHECK_THROWS_AS(conjugate_direction_solve(a1, Vec3(0.99, 0.0, 0.0), cfg), DegenerateFixedTriple);
  const UnitFrame near = conjugate_direction_solve(a1, Vec3(0.9995, 0.0, 0.0), cfg);
  CHECK(meets_residual_contract(near.residuals));
  CHECK(near.fixed[0] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("objective gradient matches finite differences") {
  const TripleId t = TripleId::parse("B5");
  Vec6 x;
  x << 0.2, 0.7, -0.4, 0.1, -0.6, 0.3;
  const Vec3 fixed(0.4, -0.3, 0.6);
  const Vec6 g = objective_gradient(x, t, fixed);
  for (int k = 0; k < 6; ++k) {
    Vec6 up = x, dn = x;
    up[k] += 1e-6;
    dn[k] -= 1e-6;
    const double fd = (objective(up, t, fixed) - objective(dn, t, fixed)) / 2e-6;
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK(objective(x, t, fixed) == doctest::Approx(residuals(x, t, fixed).squaredNorm()));
}

TEST_CASE("initial guess magnitudes and sign rule") {
  const TripleId t = TripleId::parse("A1");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Vec6 x = initial_guess(t, Vec3::Zero(), seed);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(x[i]) == doctest::Approx(std::sqrt(0.5)));
    const auto same = [&](int from) {
      return (x[from] > 0) == (x[from + 1] > 0) && (x[from + 1] > 0) == (x[from + 2] > 0);
    };
    CHECK_FALSE(same(0));
    CHECK_FALSE(same(3));
  }
  CHECK(initial_guess(t, Vec3(0.1, 0.2, 0.3), 4) == initial_guess(t, Vec3(0.1, 0.2, 0.3), 4));
}

TEST_CASE("sampling needs at least one point") {
  CHECK_THROWS_AS(sample_manifold(TripleId::parse("A1"), 0, SolverConfig{}, 1), std::invalid_argument);
}

TEST_CASE("companion samples satisfy the unit equations") {
  const TripleId t = TripleId::parse("b1,l2,b3");
  const auto samples = sample_manifold(t, 50, SolverConfig{}, 8);
  for (const auto& s : samples) {
    REQUIRE(s.frame);
    CHECK(residuals(s.frame->unknowns(), t, s.frame->fixed).cwiseAbs().maxCoeff() <= 1e-8);
  }
}
