#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tbp/diagnostics.hpp"
#include "tbp/dynamics.hpp"
#include "tbp/potential.hpp"
#include "tbp/stochastic.hpp"

namespace tbp {

inline constexpr std::string_view kVersion = "1.0.0";

// Table 1 of the model: depth, stiffness, equilibrium and total energy.
struct Table1Row {
  double depth, stiffness, equilibrium, energy;
};
inline constexpr std::array<Table1Row, 2> kTable1{{{1.0, 0.25, 2.0, 2.5}, {1.0, 0.25, 2.0, 3.5}}};

// Table 2: initial Jacobi velocities and J.
struct Table2Row {
  double rho1d, rho2d, rho3d, inertia;
};
inline constexpr std::array<Table2Row, 3> kTable2{
    {{0.01, 0.01, 0.10, 0.30}, {0.30, 0.50, 0.40, 0.60}, {1.00, 0.80, 0.60, 0.80}}};

struct PotentialBlock {
  int table1_row = 1;  // 0: none
  std::array<MorseParams, 3> pairs{};  // (1,2), (1,3), (2,3)
  std::array<double, 3> masses{1.0, 1.0, 1.0};
  double energy = 2.5;
  double u0 = 1.0;
  bool operator==(const PotentialBlock&) const = default;
};

struct InitialBlock {
  int table2_row = 1;  // 0: none
  std::array<double, 3> rho{0.8660254037844386, 1.0, 1.5707963267948966};
  std::array<double, 3> rho_dot{0.01, 0.01, 0.10};
  double inertia = 0.3;
  bool operator==(const InitialBlock&) const = default;
};

struct ManifoldBlock {
  std::string triple = "A1";
  std::optional<std::array<double, 3>> fixed;
  double eps_inner = 1e-9;
  double eps_outer = 1e-18;
  int max_inner = 20000;
  int max_restarts = 16;
  double max_fixed_shift = 1e-3;
  std::size_t samples = 100;
  bool operator==(const ManifoldBlock&) const = default;
};

struct IntegrationBlock {
  double dt = 1e-4;
  std::size_t steps = 100000;
  std::size_t decimation = 100;
  bool operator==(const IntegrationBlock&) const = default;
};

struct EnsembleBlock {
  std::size_t members = 1000;
  std::string noise = "constant";  // zero | constant | table
  double intensity = 0.01;
  std::string table;               // CSV `t,eps` for noise = table
  std::string mask = "111111";     // one flag per phase component z1..z6
  std::vector<double> snapshots;   // empty: 11 evenly spaced times
  double horizon = 0.0;            // averaging horizon T; 0: run horizon
  std::string drift = "geodesic";  // geodesic | none
  std::size_t leaf_size = 1000;
  bool dump = false;               // write snapshot point files
  bool operator==(const EnsembleBlock&) const = default;
};

struct DiagnosticsBlock {
  std::string perturb = "rho1d";  // rho1 rho2 rho3 rho1d rho2d rho3d
  double perturbation = 1e-2;
  double tail_fraction = 0.2;
  bool operator==(const DiagnosticsBlock&) const = default;
};

struct SurfaceBlock {
  double rho1_min = 0.1;
  double rho1_max = 6.0;
  std::size_t n1 = 60;
  double rho2_min = 0.1;
  double rho2_max = 6.0;
  std::size_t n2 = 60;
  double theta = 1.5707963267948966;
  bool operator==(const SurfaceBlock&) const = default;
};

struct RunConfig {
  PotentialBlock potential;
  InitialBlock initial;
  ManifoldBlock manifold;
  IntegrationBlock integration;
  EnsembleBlock ensemble;
  DiagnosticsBlock diagnostics;
  SurfaceBlock surface;
  std::string output_dir;  // empty: $TBP_OUTPUT_ROOT or "out"
  std::uint64_t seed = 0;

  bool operator==(const RunConfig&) const = default;

  /// Checks every field against the preconditions of the module that uses
  /// it. Throws ValidationError.
  void validate() const;

  PotentialModel model() const;
  SolverConfig solver() const;
  SimConfig sim() const;
  NoiseSpec noise() const;  // reads the noise table file when needed
  EnsembleConfig ensemble_config() const;
  GridSpec grid() const;
  std::string resolved_output_dir() const;
};

/// One `section.key = value` assignment, e.g. from the command line.
struct Assignment {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;  // 0 for assignments not read from a file
};

/// Parses `[section]` headers and `key = value` lines; `#` and `;` start
/// comments. Table rows are applied first, explicit keys after them.
/// `overrides` are applied last. Throws ParseError or ValidationError.
RunConfig parse_config(std::string_view text, const std::vector<Assignment>& overrides = {});

/// Parses "section.key=value".
Assignment parse_assignment(std::string_view text);

/// Text that parses back to an equal RunConfig.
std::string serialize(const RunConfig& cfg);

/// Built-in presets: paper-row1, paper-row2, paper-row3.
std::string preset_text(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace tbp
