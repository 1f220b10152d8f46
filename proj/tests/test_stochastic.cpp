#include <doctest.h>

#include <cmath>
#include <random>

#include "tbp/config.hpp"
#include "tbp/stochastic.hpp"

using namespace tbp;

namespace {

std::vector<Vec6> normal_sample(std::size_t n, std::uint64_t seed, double scale = 1.0, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vec6> out(n);
  for (auto& v : out)
    for (int i = 0; i < 6; ++i) v[i] = shift + scale * normal(rng);
  return out;
}

EnsembleConfig small_ensemble(double eps) {
  RunConfig rc;
  rc.integration.steps = 200;
  rc.ensemble.members = 12;
  rc.ensemble.intensity = eps;
  rc.ensemble.snapshots = {0.0, 0.01, 0.02};
  rc.seed = 9;
  return rc.ensemble_config();
}

}  // namespace

TEST_CASE("zero intensity draws no random numbers") {
  std::mt19937_64 rng(1), untouched(1);
  Vec6 drift;
  drift << 1, 2, 3, 4, 5, 6;
  const Vec6 dz = langevin_increment(drift, 0.1, 0.0, {true, true, true, true, true, true}, rng);
  CHECK(dz == 0.1 * drift);
  CHECK(rng() == untouched());
}

TEST_CASE("masked components receive no noise") {
  std::mt19937_64 rng(2);
  const Vec6 dz = langevin_increment(Vec6::Zero(), 0.1, 1.0, {true, false, true, false, false, false}, rng);
  CHECK(dz[0] != 0.0);
  CHECK(dz[1] == 0.0);
  CHECK(dz[2] != 0.0);
  CHECK(dz.tail<3>().norm() == 0.0);
}

TEST_CASE("tabulated intensity interpolates, clamps and averages") {
  NoiseSpec n;
  n.kind = NoiseSpec::Kind::Tabulated;
  n.table_t = {0.0, 1.0, 2.0};
  n.table_eps = {0.0, 0.2, -0.2};
  n.validate();
  CHECK(n.at(0.5) == doctest::Approx(0.1));
  bool clamped = false;
  CHECK(n.at(1.75, &clamped) == 0.0);
  CHECK(clamped);
  CHECK(n.at(5.0) == 0.0);
  CHECK(n.mean_over(1.0) == doctest::Approx(0.1));
  n.table_t = {0.0, 0.0, 1.0};
  CHECK_THROWS_AS(n.validate(), ValidationError);
}

TEST_CASE("entropy of a standard normal sample") {
  const double exact = 3.0 * std::log(2.0 * M_PI * M_E);
  CHECK(entropy(normal_sample(20000, 4)) == doctest::Approx(exact).epsilon(0.02));
  // Scaling by c shifts the entropy by 6 ln c.
  CHECK(entropy(normal_sample(20000, 4, 2.0)) - entropy(normal_sample(20000, 4)) ==
        doctest::Approx(6.0 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("entropy rejects degenerate samples") {
  auto s = normal_sample(200, 5);
  for (auto& v : s) v[3] = 1.0;
  CHECK_THROWS_AS(entropy(s), DegenerateSample);
  CHECK_THROWS_AS(entropy(normal_sample(50, 5)), DegenerateSample);
  auto dup = normal_sample(200, 5);
  for (std::size_t i = 0; i < 5; ++i) dup[i] = dup[100];
  CHECK_THROWS_AS(entropy(dup), DegenerateSample);
}

TEST_CASE("disequilibrium extremes") {
  const auto a = normal_sample(4000, 6);
  CHECK(disequilibrium(a, a, 100) == 0.0);
  const auto far = normal_sample(4000, 7, 1.0, 100.0);
  CHECK(disequilibrium(a, far, 100) == doctest::Approx(1.0).epsilon(1e-12));
  const double same_law = disequilibrium(a, normal_sample(4000, 8), 100);
  CHECK(same_law >= 0.0);
  CHECK(same_law < 0.05);
}

TEST_CASE("phase volume of a uniform cube") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec6> pts(50000);
  for (auto& v : pts)
    for (int i = 0; i < 6; ++i) v[i] = u(rng);
  const double vol = phase_volume(pts);
  CHECK(vol <= 1.0);
  CHECK(vol > 0.9);
  for (auto& v : pts) v[5] = 0.25;
  CHECK(phase_volume(pts) == 0.0);
}

TEST_CASE("complexity never prints as negative zero") {
  CHECK(std::signbit(complexity(-3.0, 0.0)) == false);
  CHECK(complexity(2.0, 0.25) == 0.5);
}

TEST_CASE("ensemble does not depend on the thread count") {
  EnsembleConfig one = small_ensemble(0.01);
  one.threads = 1;
  EnsembleConfig many = one;
  many.threads = 5;
  const auto a = run_ensemble(one);
  const auto b = run_ensemble(many);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) CHECK(a.snapshots[k].points == b.snapshots[k].points);
  CHECK(a.snapshots[0].points[0] == a.snapshots[0].points[11]);
  CHECK(a.snapshots[2].points[0] != a.snapshots[2].points[1]);
}

TEST_CASE("members differ only through their seeds") {
  EnsembleConfig cfg = small_ensemble(0.01);
  cfg.members = 4;
  const auto small = run_ensemble(cfg);
  cfg.members = 12;
  const auto large = run_ensemble(cfg);
  for (std::size_t m = 0; m < 4; ++m) CHECK(small.snapshots[2].points[m] == large.snapshots[2].points[m]);
}

TEST_CASE("snapshot beyond the horizon is rejected") {
  EnsembleConfig cfg = small_ensemble(0.01);
  cfg.snapshot_times = {1.0};
  CHECK_THROWS_AS(run_ensemble(cfg), ValidationError);
}

TEST_CASE("functionals table marks degenerate estimates") {
  EnsembleConfig cfg = small_ensemble(0.01);
  const auto run = run_ensemble(cfg);
  const auto rows = flow_functionals(run, run, 4);
  REQUIRE(rows.size() == 3);
  CHECK(!rows[0].note.empty());
  const std::string csv = functionals_csv(rows);
  CHECK(csv.rfind("t,N_survive,S,K,C,I0\n", 0) == 0);
  CHECK(csv.find("nan") != std::string::npos);
}

TEST_CASE("disequilibrium of two shifted gaussians") {
  auto a = normal_sample(100000, 11);
  auto b = normal_sample(100000, 12);
  for (auto& v : b) v[2] += 1.0;
  const double tv = 2.0 * 0.5 * std::erfc(-0.5 / std::sqrt(2.0)) - 1.0;
  CHECK(disequilibrium(a, b) == doctest::Approx(tv * tv).epsilon(0.05));
}

TEST_CASE("noise-free ensemble has no spread") {
  EnsembleConfig cfg = small_ensemble(0.0);
  cfg.members = 100;
  const auto r = run_ensemble(cfg);
  for (const auto& snap : r.snapshots) {
    for (const auto& p : snap.points) CHECK(p == snap.points.front());
  }
}
