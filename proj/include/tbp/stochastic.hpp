#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tbp/dynamics.hpp"
#include "tbp/errors.hpp"
#include "tbp/linalg.hpp"

namespace tbp {

/// Intensity of the random forcing, <f(t) f(t')> = eps(t) delta(t - t').
struct NoiseSpec {
  enum class Kind { Zero, Constant, Tabulated };

  Kind kind = Kind::Zero;
  double intensity = 0.0;        // Constant
  std::vector<double> table_t;   // Tabulated, strictly increasing
  std::vector<double> table_eps; // values may be negative; they are clamped at 0
  std::array<bool, 6> mask{true, true, true, true, true, true};
  std::uint64_t seed = 0;

  void validate() const;
  /// eps at time t: linear interpolation, held constant outside the table.
  /// Sets *clamped when a negative value was raised to 0.
  double at(double t, bool* clamped = nullptr) const;
  /// (1/T) * integral of eps over [0, T] (clamped values, trapezoid rule).
  double mean_over(double horizon) const;
};

enum class DriftModel { Geodesic, None };

/// Euler-Maruyama increment: drift * dt + sqrt(2 eps dt) * xi on masked
/// components. With eps == 0 no random numbers are drawn and the increment
/// is exactly drift * dt.
Vec6 langevin_increment(const Vec6& drift, double dt, double eps, const std::array<bool, 6>& mask,
                        std::mt19937_64& rng);

/// One step of the stochastic geodesic flow from `p` at time t. Throws
/// ForbiddenRegion as the deterministic flow does.
void langevin_step(FlowPoint& p, const GeodesicFlow& flow, double t, double dt, const NoiseSpec& noise,
                   std::mt19937_64& rng, std::size_t* clamp_count = nullptr);

struct EnsembleSnapshot {
  double t = 0.0;
  std::size_t step = 0;
  std::vector<Vec6> points;  // surviving members in member order
};

struct EnsembleConfig {
  SimConfig sim;  // model, triple, solver, dt, steps, initial state
  NoiseSpec noise;
  DriftModel drift = DriftModel::Geodesic;
  std::size_t members = 100;
  std::vector<double> snapshot_times;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct EnsembleResult {
  std::vector<EnsembleSnapshot> snapshots;
  std::vector<Termination> terminations;  // per member
  std::size_t clamp_count = 0;            // clamped noise evaluations, all members
  UnitFrame unit;
};

/// Members start from the same state and differ only in their noise, drawn
/// from per-member seeds derived from noise.seed. The result does not depend
/// on the thread count.
EnsembleResult run_ensemble(const EnsembleConfig& cfg);
EnsembleResult run_ensemble(const EnsembleConfig& cfg, const UnitFrame& unit);

inline constexpr std::size_t kMinFunctionalSample = 100;
inline constexpr int kEntropyNeighbours = 4;

/// Kozachenko-Leonenko k-nearest-neighbour differential entropy (nats), k = 4.
/// Throws DegenerateSample on a coordinate with zero spread or duplicate
/// points at distance zero.
double entropy(const std::vector<Vec6>& points);

/// Squared total-variation distance between two samples on a shared
/// adaptive partition: recursive median splits of the pooled sample along
/// the axis of largest spread, leaves holding at least `leaf_size` points.
/// Result lies in [0, 1].
double disequilibrium(const std::vector<Vec6>& sample, const std::vector<Vec6>& reference,
                      std::size_t leaf_size = 1000);

inline double complexity(double s, double k) { return s * k + 0.0; }

/// Occupied volume: non-empty cells times cell volume on a grid aligned to
/// the sample range, with Scott's-rule widths 3.49 sigma N^(-1/8) per axis.
/// An axis with zero spread contributes width 0.
double phase_volume(const std::vector<Vec6>& points);

struct FunctionalRow {
  double t = 0.0;
  std::size_t survivors = 0;
  double s = 0.0;
  double k = 0.0;
  double c = 0.0;
  double i0 = 0.0;
  std::string note;  // non-empty when an estimate was degenerate
};

/// S, K (against the reference ensemble at the same times), C and I0 for
/// each snapshot.
std::vector<FunctionalRow> flow_functionals(const EnsembleResult& run, const EnsembleResult& reference,
                                            std::size_t leaf_size = 1000);

/// CSV `t,N_survive,S,K,C,I0`; degenerate estimates are written as nan.
std::string functionals_csv(const std::vector<FunctionalRow>& rows);

/// CSV `z1,...,z6` of one snapshot.
std::string snapshot_csv(const EnsembleSnapshot& snap);

}  // namespace tbp
