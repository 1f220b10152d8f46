#include "tbp/run.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "tbp/diagnostics.hpp"
#include "tbp/io.hpp"
#include "tbp/rng.hpp"

namespace tbp {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

Json optional_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string file_tag(const TripleId& triple) {
  std::string tag = triple.display_name();
  std::replace(tag.begin(), tag.end(), ',', '_');
  return tag;
}

class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

  void file(const std::string& name, std::string_view content) {
    io::write_file_atomic(dir_ / name, content);
    files_.push_back(dir_ / name);
  }
  void record(const std::string& name) { files_.push_back(dir_ / name); }
  const std::vector<fs::path>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

Json frame_json(const UnitFrame& u) {
  Json j;
  j["triple"] = u.triple.display_name();
  j["fixed"] = {u.fixed[0], u.fixed[1], u.fixed[2]};
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({u.coefficients(r, 0), u.coefficients(r, 1), u.coefficients(r, 2)});
  j["coefficients"] = rows;
  j["residuals"] = Json::array();
  for (int i = 0; i < 6; ++i) j["residuals"].push_back(u.residuals[i]);
  j["iterations"] = u.iterations;
  j["restarts"] = u.restarts;
  return j;
}

std::string frame_csv(const UnitFrame& u) {
  static const char* names[3] = {"alpha", "beta", "lambda"};
  std::string text = "row,c1,c2,c3\n";
  for (int r = 0; r < 3; ++r) {
    text += fmt::format("{},{},{},{}\n", names[r], io::format_double(u.coefficients(r, 0)),
                        io::format_double(u.coefficients(r, 1)), io::format_double(u.coefficients(r, 2)));
  }
  return text;
}

std::vector<TripleId> triples_for(const RunRequest& req, const TripleId& triple) {
  if (!req.complete) return {triple};
  const auto all = complete_member(triple);
  return {all.begin(), all.end()};
}

Json run_manifold(const RunRequest& req, const RunConfig& cfg, Writer& out) {
  const SimConfig base = cfg.sim();
  Json results = Json::array();
  for (const auto& triple : triples_for(req, base.triple)) {
    if (req.subcommand == "solve") {
      SimConfig sim = base;
      sim.triple = triple;
      const UnitFrame u = conjugate_direction_solve(triple, resolve_fixed(sim), sim.solver);
      const std::string name = "frame_" + file_tag(triple) + ".csv";
      out.file(name, frame_csv(u));
      Json j = frame_json(u);
      j["file"] = name;
      results.push_back(j);
    } else {
      const auto samples = sample_manifold(triple, cfg.manifold.samples, base.solver, cfg.seed);
      const auto converged = static_cast<std::size_t>(
          std::count_if(samples.begin(), samples.end(), [](const ManifoldSample& s) { return s.frame.has_value(); }));
      const std::string name = "manifold_" + file_tag(triple) + ".csv";
      out.file(name, point_cloud_csv(samples));
      results.push_back({{"triple", triple.display_name()},
                         {"file", name},
                         {"samples", samples.size()},
                         {"converged", converged}});
    }
  }
  return results;
}

Json run_surface(const RunConfig& cfg, Writer& out) {
  write_energy_surface(out.dir() / "surface.txt", cfg.grid(), cfg.surface.theta, cfg.model());
  out.record("surface.txt");
  return Json::object();
}

Json trajectory_json(const Trajectory& traj) {
  return {{"termination", termination_name(traj.termination)},
          {"detail", traj.termination_detail},
          {"steps_requested", traj.steps_requested},
          {"steps_taken", traj.steps_taken},
          {"max_pair_distance", traj.max_pair_distance},
          {"final_s", traj.final_record().point.s()},
          {"frame", frame_json(traj.unit)}};
}

Json run_simulate(const RunConfig& cfg, Writer& out, std::ostream& log) {
  const Trajectory traj = simulate(cfg.sim());
  out.file("trajectory.csv", trajectory_csv(traj));
  if (traj.termination != Termination::Completed)
    log << fmt::format("simulate: run ended early ({}): {}\n", termination_name(traj.termination),
                       traj.termination_detail);
  return trajectory_json(traj);
}

int perturb_index(const std::string& name) {
  static const char* names[6] = {"rho1", "rho2", "rho3", "rho1d", "rho2d", "rho3d"};
  for (int i = 0; i < 6; ++i) {
    if (name == names[i]) return i;
  }
  throw ValidationError("diagnostics.perturb", "unknown component");
}

Json run_pair(const RunConfig& cfg, Writer& out, std::ostream& log) {
  const SimConfig ref_cfg = cfg.sim();
  const Trajectory ref = simulate(ref_cfg);
  SimConfig pert_cfg = ref_cfg;
  const int idx = perturb_index(cfg.diagnostics.perturb);
  if (idx < 3)
    pert_cfg.initial.rho[idx] += cfg.diagnostics.perturbation;
  else
    pert_cfg.initial.rho_dot[idx - 3] += cfg.diagnostics.perturbation;
  pert_cfg.time_origin = ref_cfg.initial.rho;
  const Trajectory pert = simulate(pert_cfg, ref.unit);
  out.file("trajectory_ref.csv", trajectory_csv(ref));
  out.file("trajectory_perturbed.csv", trajectory_csv(pert));

  const LyapunovSeries eps = lyapunov_series(ref, pert);
  out.file("eps.csv", lyapunov_csv(eps));
  const DimensionSeries dim = fractal_dimension_series(ref);
  out.file("dim.csv", dimension_csv(dim));

  const double tail = cfg.diagnostics.tail_fraction;
  Json lyap{{"initial_separation", eps.initial_separation},
            {"phase_space_reference", eps.phase_space_reference},
            {"samples", eps.eps.size()},
            {"tail_fraction", tail}};
  try {
    lyap["limit"] = optional_number(lyapunov_limit(eps, tail));
  } catch (const TooShort& e) {
    lyap["limit"] = nullptr;
    log << "pair: " << e.what() << "\n";
  }
  Json d{{"samples", dim.d.size()}, {"gaps", dim.gaps}, {"tail_fraction", tail}};
  if (dim.d.empty()) {
    d["final"] = nullptr;
    d["tail_variation"] = nullptr;
  } else {
    d["final"] = optional_number(dim.d.back());
    d["tail_variation"] = optional_number(tail_variation(dim, tail));
  }
  return {{"reference", trajectory_json(ref)},
          {"perturbed", trajectory_json(pert)},
          {"lyapunov", lyap},
          {"dimension", d}};
}

Json run_ensemble_command(const RunConfig& cfg, Writer& out, std::ostream& log) {
  const EnsembleConfig ecfg = cfg.ensemble_config();
  const EnsembleResult run = run_ensemble(ecfg);

  const double horizon =
      cfg.ensemble.horizon > 0.0 ? cfg.ensemble.horizon : static_cast<double>(ecfg.sim.steps) * ecfg.sim.dt;
  EnsembleConfig rcfg = ecfg;
  rcfg.noise.kind = NoiseSpec::Kind::Constant;
  rcfg.noise.intensity = ecfg.noise.mean_over(horizon);
  rcfg.noise.table_t.clear();
  rcfg.noise.table_eps.clear();
  rcfg.noise.seed = derive_seed(cfg.seed, kStreamReference);
  const EnsembleResult reference = run_ensemble(rcfg, run.unit);

  const auto rows = flow_functionals(run, reference, cfg.ensemble.leaf_size);
  out.file("functionals.csv", functionals_csv(rows));
  if (cfg.ensemble.dump) {
    for (const auto& snap : run.snapshots)
      out.file(fmt::format("snapshot_t{}.csv", io::format_double(snap.t)), snapshot_csv(snap));
  }
  Json terms = Json::object();
  for (const Termination t : {Termination::Completed, Termination::ForbiddenRegion, Termination::Diverged}) {
    terms[std::string(termination_name(t))] =
        static_cast<std::size_t>(std::count(run.terminations.begin(), run.terminations.end(), t));
  }
  Json notes = Json::array();
  for (const auto& r : rows) {
    if (!r.note.empty()) {
      notes.push_back({{"t", r.t}, {"note", r.note}});
      log << fmt::format("ensemble: t = {}: {}\n", r.t, r.note);
    }
  }
  return {{"terminations", terms},
          {"clamped_noise_evaluations", run.clamp_count},
          {"reference_intensity", rcfg.noise.intensity},
          {"averaging_horizon", horizon},
          {"frame", frame_json(run.unit)},
          {"notes", notes}};
}

std::string error_kind(const Error& e) {
  if (dynamic_cast<const ForbiddenRegion*>(&e)) return "ForbiddenRegion";
  if (dynamic_cast<const SingularFrame*>(&e)) return "SingularFrame";
  if (dynamic_cast<const DegenerateFixedTriple*>(&e)) return "DegenerateFixedTriple";
  if (dynamic_cast<const NonConvergence*>(&e)) return "NonConvergence";
  if (dynamic_cast<const DegenerateSample*>(&e)) return "DegenerateSample";
  if (dynamic_cast<const DegenerateSeparation*>(&e)) return "DegenerateSeparation";
  if (dynamic_cast<const GridMismatch*>(&e)) return "GridMismatch";
  if (dynamic_cast<const TooShort*>(&e)) return "TooShort";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  return "Error";
}

}  // namespace

RunOutcome run(const RunRequest& request, const RunConfig& cfg, std::ostream& log) {
  RunOutcome outcome;
  Writer out(cfg.resolved_output_dir());
  Json side;
  side["command"] = request.command;
  if (!request.subcommand.empty()) side["subcommand"] = request.subcommand;
  if (request.complete) side["complete"] = true;
  side["version"] = std::string(kVersion);
  side["seed"] = cfg.seed;
  side["config"] = serialize(cfg);
  try {
    Json results;
    if (request.command == "manifold") {
      if (request.subcommand != "solve" && request.subcommand != "sample")
        throw ValidationError("manifold", "subcommand must be solve or sample");
      results = run_manifold(request, cfg, out);
    } else if (request.command == "surface") {
      results = run_surface(cfg, out);
    } else if (request.command == "simulate") {
      results = run_simulate(cfg, out, log);
    } else if (request.command == "pair") {
      results = run_pair(cfg, out, log);
    } else if (request.command == "ensemble") {
      results = run_ensemble_command(cfg, out, log);
    } else {
      throw ValidationError("command", fmt::format("unknown command '{}'", request.command));
    }
    side["results"] = results;
  } catch (const ValidationError& e) {
    outcome.exit_code = kExitUsage;
    outcome.message = e.what();
  } catch (const ParseError& e) {
    outcome.exit_code = kExitUsage;
    outcome.message = e.what();
  } catch (const Error& e) {
    outcome.exit_code = kExitModuleError;
    outcome.message = error_kind(e) + ": " + e.what();
  } catch (const std::invalid_argument& e) {
    outcome.exit_code = kExitModuleError;
    outcome.message = e.what();
  }
  if (outcome.exit_code != kExitOk) {
    log << request.command << ": error: " << outcome.message << "\n";
    outcome.files = out.files();
    return outcome;
  }
  Json files = Json::array();
  for (const auto& f : out.files()) files.push_back(f.filename().string());
  side["files"] = files;
  out.file(request.command + ".json", side.dump(2) + "\n");
  outcome.files = out.files();
  return outcome;
}

}  // namespace tbp
