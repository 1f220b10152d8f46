#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tbp/config.hpp"
#include "tbp/errors.hpp"
#include "tbp/io.hpp"
#include "tbp/run.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string preset;
  std::optional<std::string> seed, out, steps, dt, decimation, triple, n, members;
  std::vector<std::string> sets;
  bool complete = false;
  bool print_config = false;
};

void add_common(CLI::App* app, Options& o) {
  auto* config = app->add_option("--config", o.config_path, "Config file ([section] / key = value)");
  app->add_option("--preset", o.preset, "Built-in preset: paper-row1, paper-row2, paper-row3")->excludes(config);
  app->add_option("--seed", o.seed, "run.seed");
  app->add_option("--out", o.out, "output.dir (default: $TBP_OUTPUT_ROOT or ./out)");
  app->add_option("--steps", o.steps, "integration.steps");
  app->add_option("--dt", o.dt, "integration.dt");
  app->add_option("--decimation", o.decimation, "integration.decimation");
  app->add_option("--triple", o.triple, "manifold.triple, e.g. A1 or b1,l2,b3");
  app->add_option("--n", o.n, "manifold.samples");
  app->add_option("--members", o.members, "ensemble.members");
  app->add_option("--set", o.sets, "Any config key: section.key=value (repeatable)");
  app->add_flag("--print-config", o.print_config, "Print the resolved config and exit");
}

tbp::RunConfig resolve(const Options& o) {
  std::string text;
  if (!o.config_path.empty()) {
    try {
      text = tbp::io::read_file(o.config_path);
    } catch (const tbp::IoError& e) {
      throw tbp::ValidationError("--config", e.what());
    }
  } else if (!o.preset.empty()) {
    text = tbp::preset_text(o.preset);
  }
  std::vector<tbp::Assignment> overrides;
  auto add = [&](const char* section, const char* key, const std::optional<std::string>& v) {
    if (v) overrides.push_back({section, key, *v, 0});
  };
  add("run", "seed", o.seed);
  add("output", "dir", o.out);
  add("integration", "steps", o.steps);
  add("integration", "dt", o.dt);
  add("integration", "decimation", o.decimation);
  add("manifold", "triple", o.triple);
  add("manifold", "samples", o.n);
  add("ensemble", "members", o.members);
  for (const auto& s : o.sets) overrides.push_back(tbp::parse_assignment(s));
  return tbp::parse_config(text, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesic three-body flow on a conformal Riemannian manifold"};
  app.set_version_flag("--version", std::string(tbp::kVersion));
  app.require_subcommand(1);

  Options opts;
  tbp::RunRequest request;

  auto* manifold = app.add_subcommand("manifold", "Solve or sample the unit-frame manifold");
  manifold->require_subcommand(1);
  for (const char* sub : {"solve", "sample"}) {
    auto* s = manifold->add_subcommand(sub, sub == std::string("solve") ? "Solve one frame" : "Sample a point cloud");
    add_common(s, opts);
    s->add_flag("--complete", opts.complete, "Also process the two companion triples");
  }
  add_common(app.add_subcommand("surface", "Tabulate g over a (rho1, rho2) grid"), opts);
  add_common(app.add_subcommand("simulate", "Integrate one geodesic trajectory"), opts);
  add_common(app.add_subcommand("pair", "Perturbed pair: Lyapunov and fractal-dimension series"), opts);
  add_common(app.add_subcommand("ensemble", "Langevin ensemble and its phase-space functionals"), opts);

  CLI11_PARSE(app, argc, argv);

  for (auto* sub : app.get_subcommands()) {
    request.command = sub->get_name();
    for (auto* inner : sub->get_subcommands()) request.subcommand = inner->get_name();
  }
  request.complete = opts.complete;

  tbp::RunConfig cfg;
  try {
    cfg = resolve(opts);
  } catch (const tbp::Error& e) {
    std::cerr << "tbp: " << e.what() << "\n";
    return tbp::kExitUsage;
  }
  if (opts.print_config) {
    std::cout << tbp::serialize(cfg);
    return tbp::kExitOk;
  }
  const tbp::RunOutcome outcome = tbp::run(request, cfg, std::cerr);
  if (outcome.exit_code == tbp::kExitOk) {
    for (const auto& f : outcome.files) std::cout << f.string() << "\n";
  }
  return outcome.exit_code;
}
