#include <doctest.h>

#include <cmath>

#include "tbp/config.hpp"

using namespace tbp;

TEST_CASE("empty text gives valid defaults") {
  const RunConfig cfg = parse_config("");
  CHECK(cfg == RunConfig{});
  CHECK(cfg.integration.dt == 1e-4);
  CHECK(cfg.manifold.triple == "A1");
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("presets encode the parameter tables") {
  for (int row = 1; row <= 3; ++row) {
    const RunConfig cfg = parse_config(preset_text("paper-row" + std::to_string(row)));
    const auto& t2 = kTable2[static_cast<std::size_t>(row - 1)];
    CHECK(cfg.initial.rho_dot == std::array<double, 3>{t2.rho1d, t2.rho2d, t2.rho3d});
    CHECK(cfg.initial.inertia == t2.inertia);
    CHECK(cfg.initial.rho[0] == std::sqrt(3.0) / 2.0);
    CHECK(cfg.initial.rho[2] == M_PI / 2.0);
    for (const auto& p : cfg.potential.pairs) {
      CHECK(p.depth == 1.0);
      CHECK(p.stiffness == 0.25);
      CHECK(p.equilibrium == 2.0);
    }
    CHECK(cfg.potential.energy == 2.5);
  }
  CHECK(preset_names().size() == 3);
  CHECK_THROWS_AS(preset_text("paper-row9"), ValidationError);
}

TEST_CASE("explicit keys override table rows in any order") {
  const RunConfig cfg = parse_config("[initial]\nrho1d = 0.7\ntable2_row = 3\n[potential]\ntable1_row = 2\n");
  CHECK(cfg.initial.rho_dot[0] == 0.7);
  CHECK(cfg.initial.rho_dot[1] == 0.8);
  CHECK(cfg.initial.inertia == 0.8);
  CHECK(cfg.potential.energy == 3.5);
}

TEST_CASE("serialize and parse round trip") {
  RunConfig cfg = parse_config(preset_text("paper-row2"));
  cfg.manifold.fixed = std::array<double, 3>{0.1, -0.2, 0.3};
  cfg.manifold.triple = "b1,l2,b3";
  cfg.ensemble.snapshots = {0.0, 0.05, 0.1};
  cfg.ensemble.dump = true;
  cfg.ensemble.mask = "110011";
  cfg.integration.dt = 1.0 / 3.0 * 1e-4;
  cfg.output_dir = "runs/x";
  cfg.seed = 18446744073709551615ULL;
  cfg.validate();
  const RunConfig back = parse_config(serialize(cfg));
  CHECK(back == cfg);
  CHECK(serialize(back) == serialize(cfg));
  CHECK(parse_config(serialize(RunConfig{})) == RunConfig{});
}

TEST_CASE("comments and whitespace") {
  const RunConfig cfg = parse_config("# header\n\n  [integration]   ; steps\n  steps =  500   # short\n");
  CHECK(cfg.integration.steps == 500);
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_config("[integration]\nsteps = 10\nbogus = 1\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_config("[nowhere]\n"), ParseError);
  CHECK_THROWS_AS(parse_config("steps = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[integration]\nsteps\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[integration\n"), ParseError);
  try {
    parse_config("[integration]\n\ndt = fast\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("validation names the field") {
  const auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string();
  };
  CHECK(field_of("[integration]\ndt = -1\n") == "integration.dt");
  CHECK(field_of("[integration]\ndecimation = 0\n") == "integration.decimation");
  CHECK(field_of("[ensemble]\nmask = 1111\n") == "ensemble.mask");
  CHECK(field_of("[ensemble]\nnoise = pink\n") == "ensemble.noise");
  CHECK(field_of("[ensemble]\nsnapshots = 0, 50\n") == "ensemble.snapshots");
  CHECK(field_of("[manifold]\ntriple = Z1\n") == "manifold.triple");
  CHECK(field_of("[manifold]\nfixed = 0.5, 2, 0\n") == "manifold.fixed");
  CHECK(field_of("[potential]\nm2 = 0\n") == "m2");
  CHECK(field_of("[surface]\nn1 = 1\n") == "surface.n1");
  CHECK(field_of("[diagnostics]\nperturb = x\n") == "diagnostics.perturb");
  CHECK(field_of("[potential]\ntable1_row = 5\n") == "potential.table1_row");
}

TEST_CASE("command-line assignments") {
  const Assignment a = parse_assignment("integration.steps = 42");
  CHECK(a.section == "integration");
  CHECK(a.key == "steps");
  CHECK(a.value == "42");
  CHECK(parse_config("", {a}).integration.steps == 42);
  CHECK_THROWS_AS(parse_assignment("steps=1"), ValidationError);
  CHECK_THROWS_AS(parse_config("", {parse_assignment("integration.nope=1")}), ValidationError);
  CHECK_THROWS_AS(parse_config("", {parse_assignment("integration.steps=x")}), ValidationError);
}

TEST_CASE("conversion to module configurations") {
  RunConfig cfg;
  cfg.manifold.fixed = std::array<double, 3>{0.1, 0.2, 0.3};
  cfg.seed = 4;
  const SimConfig sim = cfg.sim();
  CHECK(sim.fixed.has_value());
  CHECK(sim.solver.seed == 4);
  CHECK(sim.model.inertia == 0.3);
  const EnsembleConfig e = cfg.ensemble_config();
  CHECK(e.snapshot_times.size() == 11);
  CHECK(e.snapshot_times.back() == doctest::Approx(10.0));
  CHECK(e.noise.kind == NoiseSpec::Kind::Constant);
  CHECK(e.noise.seed == 4);
}
