#include "tbp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "tbp/io.hpp"

namespace tbp {

namespace {

struct BadValue {
  std::string why;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw BadValue{fmt::format("'{}' is not a number", s)};
  return v;
}

template <class Int>
Int to_integer(std::string_view s) {
  s = trim(s);
  Int v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw BadValue{fmt::format("'{}' is not a non-negative integer", s)};
  return v;
}

bool to_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw BadValue{fmt::format("'{}' is not a boolean", s)};
}

std::vector<double> to_list(std::string_view s) {
  std::vector<double> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(to_double(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string from_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + io::format_double(v[i]);
  return out;
}

std::string num(double v) { return io::format_double(v); }

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

#define TBP_DOUBLE(sec, name, member)                                                     \
  Field {                                                                                 \
    sec, name, [](const RunConfig& c) { return num(c.member); },                          \
        [](RunConfig& c, std::string_view v) { c.member = to_double(v); }                \
  }
#define TBP_SIZE(sec, name, member)                                                        \
  Field {                                                                                  \
    sec, name, [](const RunConfig& c) { return std::to_string(c.member); },                \
        [](RunConfig& c, std::string_view v) { c.member = to_integer<std::size_t>(v); }   \
  }
#define TBP_INT(sec, name, member)                                                         \
  Field {                                                                                  \
    sec, name, [](const RunConfig& c) { return std::to_string(c.member); },                \
        [](RunConfig& c, std::string_view v) { c.member = to_integer<int>(v); }           \
  }
#define TBP_STRING(sec, name, member)                                                      \
  Field {                                                                                  \
    sec, name, [](const RunConfig& c) { return c.member; },                                \
        [](RunConfig& c, std::string_view v) { c.member = std::string(trim(v)); }         \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      TBP_INT("potential", "table1_row", potential.table1_row),
      TBP_DOUBLE("potential", "u12", potential.pairs[0].depth),
      TBP_DOUBLE("potential", "b12", potential.pairs[0].stiffness),
      TBP_DOUBLE("potential", "r12", potential.pairs[0].equilibrium),
      TBP_DOUBLE("potential", "u13", potential.pairs[1].depth),
      TBP_DOUBLE("potential", "b13", potential.pairs[1].stiffness),
      TBP_DOUBLE("potential", "r13", potential.pairs[1].equilibrium),
      TBP_DOUBLE("potential", "u23", potential.pairs[2].depth),
      TBP_DOUBLE("potential", "b23", potential.pairs[2].stiffness),
      TBP_DOUBLE("potential", "r23", potential.pairs[2].equilibrium),
      TBP_DOUBLE("potential", "m1", potential.masses[0]),
      TBP_DOUBLE("potential", "m2", potential.masses[1]),
      TBP_DOUBLE("potential", "m3", potential.masses[2]),
      TBP_DOUBLE("potential", "energy", potential.energy),
      TBP_DOUBLE("potential", "u0", potential.u0),
      TBP_INT("initial", "table2_row", initial.table2_row),
      TBP_DOUBLE("initial", "rho1", initial.rho[0]),
      TBP_DOUBLE("initial", "rho2", initial.rho[1]),
      TBP_DOUBLE("initial", "rho3", initial.rho[2]),
      TBP_DOUBLE("initial", "rho1d", initial.rho_dot[0]),
      TBP_DOUBLE("initial", "rho2d", initial.rho_dot[1]),
      TBP_DOUBLE("initial", "rho3d", initial.rho_dot[2]),
      TBP_DOUBLE("initial", "inertia", initial.inertia),
      TBP_STRING("manifold", "triple", manifold.triple),
      Field{"manifold", "fixed",
            [](const RunConfig& c) {
              return c.manifold.fixed ? from_list({(*c.manifold.fixed)[0], (*c.manifold.fixed)[1], (*c.manifold.fixed)[2]})
                                      : std::string();
            },
            [](RunConfig& c, std::string_view v) {
              const auto list = to_list(v);
              if (list.empty()) {
                c.manifold.fixed.reset();
              } else if (list.size() == 3) {
                c.manifold.fixed = std::array<double, 3>{list[0], list[1], list[2]};
              } else {
                throw BadValue{"fixed needs three comma-separated values"};
              }
            }},
      TBP_DOUBLE("manifold", "eps_inner", manifold.eps_inner),
      TBP_DOUBLE("manifold", "eps_outer", manifold.eps_outer),
      TBP_INT("manifold", "max_inner", manifold.max_inner),
      TBP_INT("manifold", "max_restarts", manifold.max_restarts),
      TBP_DOUBLE("manifold", "max_fixed_shift", manifold.max_fixed_shift),
      TBP_SIZE("manifold", "samples", manifold.samples),
      TBP_DOUBLE("integration", "dt", integration.dt),
      TBP_SIZE("integration", "steps", integration.steps),
      TBP_SIZE("integration", "decimation", integration.decimation),
      TBP_SIZE("ensemble", "members", ensemble.members),
      TBP_STRING("ensemble", "noise", ensemble.noise),
      TBP_DOUBLE("ensemble", "intensity", ensemble.intensity),
      TBP_STRING("ensemble", "table", ensemble.table),
      TBP_STRING("ensemble", "mask", ensemble.mask),
      Field{"ensemble", "snapshots", [](const RunConfig& c) { return from_list(c.ensemble.snapshots); },
            [](RunConfig& c, std::string_view v) { c.ensemble.snapshots = to_list(v); }},
      TBP_DOUBLE("ensemble", "horizon", ensemble.horizon),
      TBP_STRING("ensemble", "drift", ensemble.drift),
      TBP_SIZE("ensemble", "leaf_size", ensemble.leaf_size),
      Field{"ensemble", "dump", [](const RunConfig& c) { return std::string(c.ensemble.dump ? "true" : "false"); },
            [](RunConfig& c, std::string_view v) { c.ensemble.dump = to_bool(v); }},
      TBP_STRING("diagnostics", "perturb", diagnostics.perturb),
      TBP_DOUBLE("diagnostics", "perturbation", diagnostics.perturbation),
      TBP_DOUBLE("diagnostics", "tail_fraction", diagnostics.tail_fraction),
      TBP_DOUBLE("surface", "rho1_min", surface.rho1_min),
      TBP_DOUBLE("surface", "rho1_max", surface.rho1_max),
      TBP_SIZE("surface", "n1", surface.n1),
      TBP_DOUBLE("surface", "rho2_min", surface.rho2_min),
      TBP_DOUBLE("surface", "rho2_max", surface.rho2_max),
      TBP_SIZE("surface", "n2", surface.n2),
      TBP_DOUBLE("surface", "theta", surface.theta),
      TBP_STRING("output", "dir", output_dir),
      Field{"run", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, std::string_view v) { c.seed = to_integer<std::uint64_t>(v); }},
  };
  return table;
}

#undef TBP_DOUBLE
#undef TBP_SIZE
#undef TBP_INT
#undef TBP_STRING

const Field* find_field(std::string_view section, std::string_view key) {
  for (const auto& f : fields()) {
    if (section == f.section && key == f.key) return &f;
  }
  return nullptr;
}

void apply_table_rows(RunConfig& c) {
  const int r1 = c.potential.table1_row;
  if (r1 < 0 || r1 > static_cast<int>(kTable1.size()))
    throw ValidationError("potential.table1_row", fmt::format("must be 0..{}", kTable1.size()));
  if (r1 > 0) {
    const auto& row = kTable1[static_cast<std::size_t>(r1 - 1)];
    for (auto& p : c.potential.pairs) p = {row.depth, row.stiffness, row.equilibrium};
    c.potential.energy = row.energy;
  }
  const int r2 = c.initial.table2_row;
  if (r2 < 0 || r2 > static_cast<int>(kTable2.size()))
    throw ValidationError("initial.table2_row", fmt::format("must be 0..{}", kTable2.size()));
  if (r2 > 0) {
    const auto& row = kTable2[static_cast<std::size_t>(r2 - 1)];
    c.initial.rho_dot = {row.rho1d, row.rho2d, row.rho3d};
    c.initial.inertia = row.inertia;
  }
}

bool is_row_key(const Assignment& a) {
  return (a.section == "potential" && a.key == "table1_row") || (a.section == "initial" && a.key == "table2_row");
}

void assign(RunConfig& c, const Assignment& a) {
  const Field* f = find_field(a.section, a.key);
  if (!f) {
    const std::string what = fmt::format("unknown key '{}' in section [{}]", a.key, a.section);
    if (a.line > 0) throw ParseError(what, a.line);
    throw ValidationError(a.section + "." + a.key, "unknown key");
  }
  try {
    f->set(c, a.value);
  } catch (const BadValue& e) {
    if (a.line > 0) throw ParseError(fmt::format("{}.{}: {}", a.section, a.key, e.why), a.line);
    throw ValidationError(a.section + "." + a.key, e.why);
  }
}

const std::vector<std::string> kPerturbNames{"rho1", "rho2", "rho3", "rho1d", "rho2d", "rho3d"};

}  // namespace

Assignment parse_assignment(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ValidationError(std::string(text), "expected section.key=value");
  const auto lhs = trim(text.substr(0, eq));
  const auto dot = lhs.find('.');
  if (dot == std::string_view::npos) throw ValidationError(std::string(lhs), "expected section.key=value");
  return {std::string(trim(lhs.substr(0, dot))), std::string(trim(lhs.substr(dot + 1))),
          std::string(trim(text.substr(eq + 1))), 0};
}

RunConfig parse_config(std::string_view text, const std::vector<Assignment>& overrides) {
  std::vector<Assignment> entries;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      const bool known = std::any_of(fields().begin(), fields().end(), [&](const Field& f) { return section == f.section; });
      if (!known) throw ParseError(fmt::format("unknown section [{}]", section), line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    if (section.empty()) throw ParseError("key outside of a [section]", line_no);
    entries.push_back({section, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no});
  }
  for (const auto& o : overrides) entries.push_back(o);

  RunConfig cfg;
  for (const auto& e : entries) {
    if (is_row_key(e)) assign(cfg, e);
  }
  apply_table_rows(cfg);
  for (const auto& e : entries) {
    if (!is_row_key(e)) assign(cfg, e);
  }
  cfg.validate();
  return cfg;
}

std::string serialize(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (section != f.section) {
      section = f.section;
      out += (out.empty() ? "" : "\n") + fmt::format("[{}]\n", section);
    }
    out += fmt::format("{} = {}\n", f.key, f.get(cfg));
  }
  return out;
}

std::string preset_text(std::string_view name) {
  for (int row = 1; row <= 3; ++row) {
    if (name == fmt::format("paper-row{}", row)) {
      return fmt::format(
          "[potential]\ntable1_row = 1\n\n[initial]\ntable2_row = {}\nrho1 = 0.8660254037844386\nrho2 = 1\n"
          "rho3 = 1.5707963267948966\n",
          row);
    }
  }
  throw ValidationError("preset", fmt::format("unknown preset '{}'", name));
}

std::vector<std::string> preset_names() { return {"paper-row1", "paper-row2", "paper-row3"}; }

void RunConfig::validate() const {
  model().validate();
  solver().validate();
  try {
    (void)TripleId::parse(manifold.triple);
  } catch (const std::invalid_argument& e) {
    throw ValidationError("manifold.triple", e.what());
  }
  if (manifold.fixed) {
    for (double v : *manifold.fixed) {
      if (!(std::abs(v) < 1.0)) throw ValidationError("manifold.fixed", "values must lie in (-1, 1)");
    }
  }
  if (manifold.samples < 1) throw ValidationError("manifold.samples", "must be >= 1");
  for (double v : initial.rho) {
    if (!std::isfinite(v)) throw ValidationError("initial.rho", "must be finite");
  }
  for (double v : initial.rho_dot) {
    if (!std::isfinite(v)) throw ValidationError("initial.rho_dot", "must be finite");
  }
  if (!(integration.dt > 0.0) || !std::isfinite(integration.dt)) throw ValidationError("integration.dt", "must be > 0");
  if (integration.steps < 1) throw ValidationError("integration.steps", "must be >= 1");
  if (integration.decimation < 1) throw ValidationError("integration.decimation", "must be >= 1");

  if (ensemble.members < 2) throw ValidationError("ensemble.members", "must be >= 2");
  if (ensemble.noise != "zero" && ensemble.noise != "constant" && ensemble.noise != "table")
    throw ValidationError("ensemble.noise", "must be zero, constant or table");
  if (!(ensemble.intensity >= 0.0) || !std::isfinite(ensemble.intensity))
    throw ValidationError("ensemble.intensity", "must be finite and >= 0");
  if (ensemble.noise == "table" && ensemble.table.empty())
    throw ValidationError("ensemble.table", "a table file is required for noise = table");
  if (ensemble.mask.size() != 6 || ensemble.mask.find_first_not_of("01") != std::string::npos)
    throw ValidationError("ensemble.mask", "must be six 0/1 flags");
  if (ensemble.noise != "zero" && ensemble.mask.find('1') == std::string::npos)
    throw ValidationError("ensemble.mask", "must select at least one component");
  const double run_horizon = static_cast<double>(integration.steps) * integration.dt;
  for (double t : ensemble.snapshots) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("ensemble.snapshots", "times must be >= 0");
    if (t > run_horizon * (1.0 + 1e-12))
      throw ValidationError("ensemble.snapshots", fmt::format("time {} lies beyond the run horizon {}", t, run_horizon));
  }
  if (!(ensemble.horizon >= 0.0) || !std::isfinite(ensemble.horizon))
    throw ValidationError("ensemble.horizon", "must be >= 0");
  if (ensemble.drift != "geodesic" && ensemble.drift != "none")
    throw ValidationError("ensemble.drift", "must be geodesic or none");
  if (ensemble.leaf_size < 1) throw ValidationError("ensemble.leaf_size", "must be >= 1");

  if (std::find(kPerturbNames.begin(), kPerturbNames.end(), diagnostics.perturb) == kPerturbNames.end())
    throw ValidationError("diagnostics.perturb", "must be one of rho1 rho2 rho3 rho1d rho2d rho3d");
  if (!(diagnostics.perturbation != 0.0) || !std::isfinite(diagnostics.perturbation))
    throw ValidationError("diagnostics.perturbation", "must be finite and non-zero");
  if (!(diagnostics.tail_fraction > 0.0 && diagnostics.tail_fraction <= 1.0))
    throw ValidationError("diagnostics.tail_fraction", "must lie in (0, 1]");
  grid().validate();
  if (!std::isfinite(surface.theta)) throw ValidationError("surface.theta", "must be finite");
}

PotentialModel RunConfig::model() const {
  PotentialModel m;
  m.pair12 = potential.pairs[0];
  m.pair13 = potential.pairs[1];
  m.pair23 = potential.pairs[2];
  m.masses = potential.masses;
  m.energy = potential.energy;
  m.u0 = potential.u0;
  m.inertia = initial.inertia;
  return m;
}

SolverConfig RunConfig::solver() const {
  SolverConfig s;
  s.eps_inner = manifold.eps_inner;
  s.eps_outer = manifold.eps_outer;
  s.max_inner = manifold.max_inner;
  s.max_restarts = manifold.max_restarts;
  s.max_fixed_shift = manifold.max_fixed_shift;
  s.seed = seed;
  return s;
}

SimConfig RunConfig::sim() const {
  SimConfig s;
  s.model = model();
  s.triple = TripleId::parse(manifold.triple);
  if (manifold.fixed) s.fixed = Vec3((*manifold.fixed)[0], (*manifold.fixed)[1], (*manifold.fixed)[2]);
  s.solver = solver();
  s.dt = integration.dt;
  s.steps = integration.steps;
  s.decimation = integration.decimation;
  s.initial.rho = Vec3(initial.rho[0], initial.rho[1], initial.rho[2]);
  s.initial.rho_dot = Vec3(initial.rho_dot[0], initial.rho_dot[1], initial.rho_dot[2]);
  return s;
}

namespace {

void read_noise_table(const std::string& path, NoiseSpec& spec) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IoError& e) {
    throw ValidationError("ensemble.table", e.what());
  }
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#' || (line_no == 1 && !std::isdigit(static_cast<unsigned char>(body.front())) &&
                                                body.front() != '-' && body.front() != '.'))
      continue;
    try {
      const auto values = to_list(body);
      if (values.size() < 2) throw BadValue{"expected t,eps"};
      spec.table_t.push_back(values[0]);
      spec.table_eps.push_back(values[1]);
    } catch (const BadValue& e) {
      throw ParseError(fmt::format("{}: {}", path, e.why), line_no);
    }
  }
}

}  // namespace

NoiseSpec RunConfig::noise() const {
  NoiseSpec spec;
  spec.seed = seed;
  for (std::size_t i = 0; i < 6; ++i) spec.mask[i] = ensemble.mask.size() == 6 && ensemble.mask[i] == '1';
  if (ensemble.noise == "constant") {
    spec.kind = NoiseSpec::Kind::Constant;
    spec.intensity = ensemble.intensity;
  } else if (ensemble.noise == "table") {
    spec.kind = NoiseSpec::Kind::Tabulated;
    read_noise_table(ensemble.table, spec);
  }
  spec.validate();
  return spec;
}

EnsembleConfig RunConfig::ensemble_config() const {
  EnsembleConfig e;
  e.sim = sim();
  e.noise = noise();
  e.drift = ensemble.drift == "none" ? DriftModel::None : DriftModel::Geodesic;
  e.members = ensemble.members;
  e.snapshot_times = ensemble.snapshots;
  if (e.snapshot_times.empty()) {
    const double horizon = static_cast<double>(integration.steps) * integration.dt;
    for (int i = 0; i <= 10; ++i) e.snapshot_times.push_back(horizon * i / 10.0);
  }
  return e;
}

GridSpec RunConfig::grid() const {
  return {surface.rho1_min, surface.rho1_max, surface.n1, surface.rho2_min, surface.rho2_max, surface.n2};
}

std::string RunConfig::resolved_output_dir() const {
  if (!output_dir.empty()) return output_dir;
  if (const char* root = std::getenv("TBP_OUTPUT_ROOT"); root && *root) return root;
  return "out";
}

}  // namespace tbp
